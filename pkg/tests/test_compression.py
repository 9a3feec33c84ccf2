"""Compression fitting, the Markov-type ratio, and the eta witness."""

import numpy as np
import pytest

from cocyclelab.compression import (
    CONSISTENT,
    INCONSISTENT,
    CompressionError,
    amenability_verdict,
    build_eta,
    compression_samples,
    element_from_codes,
    estimate_compression,
    markov_type_ratio,
    random_reduced_word,
)
from cocyclelab.groups import (
    FREE,
    FREE_ABELIAN,
    GroupDescriptor,
    GroupElement,
    _rng,
    exact_distance_moments,
    word_length,
)
from cocyclelab.repcoc import (
    COBOUNDARY,
    GENERATOR_VALUES,
    HOMOMORPHISM,
    MATRIX,
    CocycleSpec,
    RepSpec,
    SparseVector,
    cocycle_norm,
    haagerup_cocycle,
    trivial_rep,
)

F2 = GroupDescriptor(FREE, 2)
F3 = GroupDescriptor(FREE, 3)
Z2 = GroupDescriptor(FREE_ABELIAN, 2)


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


# ---------------------------------------------------------------------------
# Reduced word sampling
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("rank", [2, 3])
def test_random_reduced_word_is_reduced(rank):
    desc = GroupDescriptor(FREE, rank)
    rng = _rng(0, 1)
    for length in (0, 1, 2, 17, 400):
        w = random_reduced_word(rank, length, rng)
        assert len(w) == length
        g = element_from_codes(desc, w)
        assert word_length(g) == length  # no cancellation anywhere


def test_random_reduced_word_uniform_first_steps():
    # [DERIVED] each of the 2k first letters has probability 1/(2k) and each
    # of the 2k-1 continuations probability 1/(2k-1)
    rng = _rng(1, 1)
    n = 20000
    firsts = np.empty(n)
    seconds = np.empty(n)
    for i in range(n):
        w = random_reduced_word(2, 2, rng)
        firsts[i], seconds[i] = w
    for letter in (1, 2, -1, -2):
        assert abs((firsts == letter).mean() - 0.25) < 0.02
    # conditioned on first = 1, the second letter is never -1
    mask = firsts == 1
    assert not np.any(seconds[mask] == -1)
    for letter in (1, 2, -2):
        assert abs((seconds[mask] == letter).mean() - 1 / 3) < 0.03


# ---------------------------------------------------------------------------
# Compression fitting
# ---------------------------------------------------------------------------


def test_haagerup_compression_slope_half():
    c = haagerup_cocycle(2)
    samples = compression_samples(c, 20000, seed=0)
    report = estimate_compression(samples)
    assert abs(report.alpha_envelope - 0.5) < 0.02
    assert abs(report.alpha_mean - 0.5) < 0.02
    assert len(report.buckets) >= 5
    # envelope minima never exceed geometric means
    for _, count, mn, gm in report.buckets:
        assert count >= 30
        assert mn <= gm + 1e-12


def test_homomorphism_compression_slope_one():
    values = {1: SparseVector({0: 1.0}), 2: SparseVector({1: 1.0})}
    c = CocycleSpec(trivial_rep(Z2, 2), HOMOMORPHISM, values=values)
    samples = compression_samples(c, 5000, seed=1)
    report = estimate_compression(samples)
    assert abs(report.alpha_envelope - 1.0) < 0.02


def test_compression_sources_tagged():
    c = haagerup_cocycle(2)
    radii, norms, sources = compression_samples(c, 2000, seed=2)
    assert set(sources) <= {"word", "walk"}
    assert "word" in sources and "walk" in sources
    assert len(radii) == len(norms) == len(sources)


def test_estimate_compression_validation():
    rng = np.random.default_rng(3)
    radii = rng.uniform(50, 60, 1000)  # less than two decades
    with pytest.raises(CompressionError):
        estimate_compression((radii, np.sqrt(radii)))
    with pytest.raises(CompressionError):
        estimate_compression((np.array([]), np.array([])))


def test_amenability_verdict_thresholds():
    assert amenability_verdict(0.5, 0.01, 2.0, True) == CONSISTENT
    assert amenability_verdict(0.6, 0.01, 2.0, True) == INCONSISTENT
    assert amenability_verdict(0.6, 0.06, 2.0, True) == CONSISTENT  # within noise
    assert amenability_verdict(0.9, 0.0, 2.0, False) == CONSISTENT  # silent if amenable


# ---------------------------------------------------------------------------
# Markov-type ratio
# ---------------------------------------------------------------------------


def test_markov_exact_oracle_bounds():
    # [DERIVED] for the tree cocycle E||b(W_n)||^2 = E|W_n| and the exact
    # ratio E|W_n|/n is 1 at n = 1 and decreases toward the escape rate
    c = haagerup_cocycle(2)
    report = markov_type_ratio(c, 2.0, 200, 500, seed=0)
    exact = report.exact_ratio
    assert exact[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(exact <= 1.0 + 1e-12)
    assert np.all(np.diff(exact) <= 1e-12)
    # Monte Carlo agrees within 3 SE everywhere
    assert np.all(np.abs(report.ratio - exact) <= 3 * report.stderr + 1e-12)


def test_markov_matrix_cocycle_ratio_bounded():
    rng = np.random.default_rng(4)
    rep = RepSpec(MATRIX, F2, {1: rotation(0.8), 2: rotation(2.1)})
    values = {
        1: SparseVector.from_dense(rng.standard_normal(2)),
        2: SparseVector.from_dense(rng.standard_normal(2)),
    }
    c = CocycleSpec(rep, GENERATOR_VALUES, values=values)
    report = markov_type_ratio(c, 2.0, 50, 400, seed=5)
    assert report.exact_ratio is None
    # Markov type 2 with constant 1 for a Hilbert-valued cocycle over an
    # isometric rep: ratio stays below 1 up to sampling noise
    assert np.all(report.ratio <= 1.0 + 3 * report.stderr)


def test_markov_coboundary_ratio_decays():
    rep = RepSpec(MATRIX, F2, {1: rotation(0.8), 2: rotation(2.1)})
    c = CocycleSpec(rep, COBOUNDARY, vector=SparseVector({0: 1.0}))
    report = markov_type_ratio(c, 2.0, 60, 300, seed=6)
    # coboundaries are bounded, so the ratio decays like 1/n
    assert report.ratio[-1] < report.ratio[0]
    assert report.ratio[-1] < 0.5


def test_markov_validation():
    c = haagerup_cocycle(2)
    with pytest.raises(CompressionError):
        markov_type_ratio(c, 1.0, 10, 10)  # p must exceed 1
    with pytest.raises(CompressionError):
        markov_type_ratio(c, 2.5, 10, 10)  # p capped at 2
    with pytest.raises(CompressionError):
        markov_type_ratio(c, 2.0, 0, 10)


# ---------------------------------------------------------------------------
# Eta witness
# ---------------------------------------------------------------------------


def _elements_with_lengths(lengths):
    out = []
    for i, r in enumerate(lengths):
        vec = (int(r), 0)
        out.append(GroupElement(Z2, vector=vec) if i % 2 == 0
                   else GroupElement(Z2, vector=(0, int(r))))
    return out


def test_eta_monotone_and_maximal():
    rng = np.random.default_rng(7)
    lengths = rng.integers(1, 200, size=300)
    elems = _elements_with_lengths(lengths)
    f = {g: float(1.0 + rng.random()) for g in elems}
    h = {g: float(word_length(g) ** 0.7 * (0.5 + rng.random())) for g in elems}
    witness = build_eta(f, h)
    # nondecreasing
    assert np.all(np.diff(witness.values) >= -1e-12)
    # dominated: f(g) eta(|g|) <= h(g) for every sample
    for g in elems:
        assert f[g] * witness.at(word_length(g)) <= h[g] + 1e-9
    # maximal: at each breakpoint some sample is tight
    per_radius = {}
    for g in elems:
        r = word_length(g)
        per_radius[r] = min(per_radius.get(r, np.inf), h[g] / f[g])
    for r, v in zip(witness.breakpoints, witness.values):
        tail_min = min(m for rr, m in per_radius.items() if rr >= r)
        assert v == pytest.approx(tail_min, abs=1e-12)


def test_eta_divergence_verdict():
    elems = _elements_with_lengths(range(1, 400))
    f = {g: 1.0 for g in elems}
    h_growing = {g: float(np.sqrt(word_length(g))) for g in elems}
    assert build_eta(f, h_growing).diverges
    h_flat = {g: 1.0 for g in elems}
    assert not build_eta(f, h_flat).diverges


def test_eta_validation():
    with pytest.raises(CompressionError):
        build_eta({}, {})
    g = GroupElement(Z2, vector=(1, 0))
    with pytest.raises(CompressionError):
        build_eta({g: 0.0}, {g: 1.0})  # f must be positive
    e = Z2.identity()
    with pytest.raises(CompressionError):
        build_eta({e: 1.0}, {e: 1.0})  # only the identity sampled
