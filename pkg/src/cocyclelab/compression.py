"""Empirical compression exponents and the Markov-type amenability test.

The compression estimator fits log-log slopes of cocycle norms against
word length; the envelope slope (per-radius minima) is the quantity that
lower-bounds the compression exponent.  The Markov-type ratio test
checks E||b(W_n)||^p against n * E||b(W_1)||^p along simple random
walks, with an exact birth-death oracle available for the tree cocycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import (
    FREE,
    FREE_ABELIAN,
    GroupElement,
    GroupError,
    _rng,
    exact_distance_moments,
    sample_distance_matrix,
    word_length,
)
from .repcoc import (
    COBOUNDARY,
    GENERATOR_VALUES,
    HAAGERUP_TREE,
    HOMOMORPHISM,
    MATRIX,
    DIAG_CONJUGATED,
    RepError,
    cocycle_norm,
    evaluate_cocycle,
)

CONSISTENT = "CONSISTENT"
INCONSISTENT = "INCONSISTENT"


class CompressionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def random_reduced_word(rank, length, rng):
    """Uniform non-backtracking (hence reduced) word as a signed-index array.

    Letters are coded 0..2k-1 with inverse c -> (c+k) mod 2k; a uniform
    non-backtracking step is c -> (c + k + 1 + r) mod 2k with r uniform
    in [0, 2k-1), which turns the whole draw into one cumulative sum.
    """
    k = rank
    if length == 0:
        return np.empty(0, dtype=np.int64)
    steps = np.empty(length, dtype=np.int64)
    steps[0] = rng.integers(0, 2 * k)
    if length > 1:
        steps[1:] = k + 1 + rng.integers(0, 2 * k - 1, size=length - 1)
    codes = np.cumsum(steps) % (2 * k)
    return np.where(codes < k, codes + 1, -(codes - k + 1))


def element_from_codes(desc, signed):
    return GroupElement(desc, word=tuple(int(s) for s in signed))


def _matrix_cocycle_norm_along(c, signed, p=2):
    """||b(g)|| for a word given by signed indices, folding the cocycle
    identity with an accumulated matrix product (matrix-rep cocycles)."""
    rep = c.rep
    dim = rep.dim
    acc = np.eye(dim)
    val = np.zeros(dim)
    for s in signed:
        val = val + acc @ c.generator_value(int(s)).to_dense(dim)
        acc = acc @ rep._base_image(int(s))
    return float(np.linalg.norm(val, p))


def _fast_norm(c, desc, radius, signed=None, p=2):
    """Cocycle norm at a sampled element, avoiding materialization where
    an exact shortcut exists."""
    if c.kind == HAAGERUP_TREE and p == 2:
        return float(np.sqrt(radius))
    if signed is None:
        raise CompressionError("no fast norm path for this cocycle; need the word")
    if c.kind == GENERATOR_VALUES and c.rep.kind in (MATRIX, DIAG_CONJUGATED):
        return _matrix_cocycle_norm_along(c, signed, p)
    return cocycle_norm(c, element_from_codes(desc, signed), p)


def compression_samples(
    c, n_samples, r_min=10, r_max=10**4, seed=0, walk_fraction=0.2, walk_batch=512
):
    """(radius, norm, source) arrays for compression fitting.

    Word samples are uniformly random reduced words with log-uniform
    length (walk endpoints alone concentrate near the escape rate and
    under-sample small radii); walk samples are (trajectory, time) pairs
    from one batch of walks, log-uniform in time.  Sources are tagged
    "word" / "walk".  For Z^d the word source draws axis multiples.
    """
    desc = c.rep.group
    rng = _rng(seed, 7)
    radii = []
    norms = []
    sources = []

    n_walk = 0
    if desc.kind == FREE and c.kind == HAAGERUP_TREE:
        n_walk = int(walk_fraction * n_samples)
        if n_walk:
            dist = sample_distance_matrix(desc, r_max, walk_batch, seed, stream=11)
            times = np.exp(
                rng.uniform(np.log(max(r_min, 1)), np.log(r_max), size=n_walk)
            ).astype(np.int64)
            rows = rng.integers(0, walk_batch, size=n_walk)
            for w, t in zip(rows, times):
                r = int(dist[w, t])
                radii.append(r)
                norms.append(_fast_norm(c, desc, r))
                sources.append("walk")

    n_word = n_samples - n_walk
    if desc.kind == FREE:
        lengths = np.exp(
            rng.uniform(np.log(max(r_min, 1)), np.log(r_max), size=n_word)
        ).astype(np.int64)
        for length in lengths:
            length = int(length)
            if c.kind == HAAGERUP_TREE:
                radii.append(length)
                norms.append(_fast_norm(c, desc, length))
            else:
                signed = random_reduced_word(desc.rank, length, rng)
                radii.append(length)
                norms.append(_fast_norm(c, desc, length, signed))
            sources.append("word")
    elif desc.kind == FREE_ABELIAN:
        lengths = np.exp(
            rng.uniform(np.log(max(r_min, 1)), np.log(r_max), size=n_word)
        ).astype(np.int64)
        axes = rng.integers(1, desc.rank + 1, size=n_word)
        signs = rng.choice([-1, 1], size=n_word)
        for length, axis, sign in zip(lengths, axes, signs):
            vec = [0] * desc.rank
            vec[axis - 1] = int(sign) * int(length)
            g = GroupElement(desc, vector=tuple(vec))
            radii.append(int(length))
            norms.append(cocycle_norm(c, g))
            sources.append("word")
    else:
        raise CompressionError("compression sampling covers free and abelian groups")

    return np.asarray(radii, dtype=float), np.asarray(norms, dtype=float), sources


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


@dataclass
class CompressionReport:
    """Bucketed norms and fitted log-log slopes.

    alpha_envelope uses per-bucket minima (the compression relation
    ||b(g)|| >~ |g|^alpha is a lower bound); alpha_mean uses geometric
    means and is diagnostic only.
    """

    buckets: list  # (radius, count, min_norm, gmean_norm)
    alpha_envelope: float
    alpha_mean: float
    stderr_envelope: float
    stderr_mean: float
    fit_window: tuple

    def to_json(self):
        return {
            "alpha_envelope": self.alpha_envelope,
            "alpha_mean": self.alpha_mean,
            "stderr_envelope": self.stderr_envelope,
            "stderr_mean": self.stderr_mean,
            "fit_window": list(self.fit_window),
            "n_buckets": len(self.buckets),
        }


def _slope_with_stderr(x, y):
    n = len(x)
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    slope = float(coeffs[0])
    if n > 2 and residuals.size:
        s2 = float(residuals[0]) / (n - 2)
        stderr = float(np.sqrt(s2 / ((x - x.mean()) ** 2).sum()))
    else:
        stderr = 0.0
    return slope, stderr


def estimate_compression(
    samples, fit_window=(10, 10**4), bucket_ratio=1.25, min_per_bucket=30
):
    """Least-squares slopes on log-log bucketed (radius, norm) data.

    samples: (radii, norms) arrays or (radii, norms, sources) from
    compression_samples.  Buckets are geometric bins; bins with fewer
    than min_per_bucket samples are dropped, and at least 5 surviving
    buckets spanning two decades are required.
    """
    radii, norms = np.asarray(samples[0], float), np.asarray(samples[1], float)
    lo, hi = fit_window
    keep = (radii >= lo) & (radii <= hi) & (norms > 0)
    radii, norms = radii[keep], norms[keep]
    if len(radii) == 0 or radii.max() / max(radii.min(), 1) < 100:
        raise CompressionError("samples must span at least two decades of radius")

    edges = [float(lo)]
    while edges[-1] < hi:
        edges.append(edges[-1] * bucket_ratio)
    idx = np.digitize(radii, edges) - 1

    buckets = []
    for b in range(len(edges) - 1):
        mask = idx == b
        count = int(mask.sum())
        if count < min_per_bucket:
            continue
        r_center = float(np.exp(np.log(radii[mask]).mean()))
        buckets.append(
            (
                r_center,
                count,
                float(norms[mask].min()),
                float(np.exp(np.log(norms[mask]).mean())),
            )
        )
    if len(buckets) < 5:
        raise CompressionError("fewer than 5 usable radius buckets")

    log_r = np.log(np.array([b[0] for b in buckets]))
    env, env_se = _slope_with_stderr(log_r, np.log(np.array([b[2] for b in buckets])))
    mean, mean_se = _slope_with_stderr(log_r, np.log(np.array([b[3] for b in buckets])))
    return CompressionReport(buckets, env, mean, env_se, mean_se, tuple(fit_window))


def amenability_verdict(alpha_hat, stderr, p, group_nonamenable):
    """Consistency check against the amenability criterion: a nonamenable
    group with a cocycle growing strictly faster than |g|^(1/p) would be
    a contradiction.  The criterion is silent for amenable groups."""
    if group_nonamenable and alpha_hat - 2 * stderr > 1.0 / p:
        return INCONSISTENT
    return CONSISTENT


# ---------------------------------------------------------------------------
# Markov-type ratio
# ---------------------------------------------------------------------------


@dataclass
class MarkovReport:
    n: np.ndarray
    ratio: np.ndarray
    stderr: np.ndarray
    exact_ratio: np.ndarray = None  # tree cocycle, p = 2 only


def markov_type_ratio(c, p, n_max, n_samples, seed=0):
    """Monte Carlo ratios E||b(W_n)||^p / (n E||b(W_1)||^p) for n = 1..n_max."""
    if not 1 < p <= 2:
        raise CompressionError("exponent p must lie in (1, 2]")
    if n_max < 1:
        raise CompressionError("n_max must be >= 1")
    desc = c.rep.group
    gens = desc.generators()
    denom1 = np.mean([cocycle_norm(c, s) ** p for s in gens])
    if denom1 == 0:
        raise CompressionError("cocycle vanishes on the generating set")

    if c.kind == HAAGERUP_TREE:
        dist = sample_distance_matrix(desc, n_max, n_samples, seed, stream=3)
        powered = dist[:, 1:].astype(float) ** (p / 2.0)
    else:
        powered = _sampled_cocycle_powers(c, p, n_max, n_samples, seed)

    ns = np.arange(1, n_max + 1)
    scale = ns * denom1
    ratio = powered.mean(axis=0) / scale
    stderr = powered.std(axis=0, ddof=1) / np.sqrt(n_samples) / scale
    exact = None
    if c.kind == HAAGERUP_TREE and p == 2:
        exact = exact_distance_moments(desc, n_max, p=1)[1:] / ns
    return MarkovReport(ns, ratio, stderr, exact)


def _sampled_cocycle_powers(c, p, n_max, n_samples, seed):
    """||b(W_n)||^p for sampled walks, folding matrices incrementally."""
    rep = c.rep
    if rep.kind not in (MATRIX, DIAG_CONJUGATED):
        raise CompressionError("Monte Carlo walks need a matrix-type cocycle")
    desc = rep.group
    if desc.kind != FREE:
        raise CompressionError("walk sampling for cocycles is free-group only")
    dim = rep.dim
    k = desc.rank
    rng = _rng(seed, 3)
    mats = {s: rep._base_image(s) for s in range(1, k + 1)}
    mats.update({-s: rep._base_image(-s) for s in range(1, k + 1)})
    if c.kind == COBOUNDARY:
        vec = c.vector.to_dense(dim)
        genvals = None
    else:
        vec = None
        genvals = {s: c.generator_value(s).to_dense(dim) for s in mats}
    out = np.empty((n_samples, n_max))
    for i in range(n_samples):
        draws = rng.integers(0, 2 * k, size=n_max)
        signed = np.where(draws < k, draws + 1, -(draws - k + 1))
        acc = np.eye(dim)
        val = np.zeros(dim)
        for j, s in enumerate(signed):
            s = int(s)
            if genvals is not None:
                val = val + acc @ genvals[s]
                acc = acc @ mats[s]
                out[i, j] = np.linalg.norm(val) ** p
            else:
                acc = acc @ mats[s]
                out[i, j] = np.linalg.norm(acc @ vec - vec) ** p
    return out


# ---------------------------------------------------------------------------
# Eta witness (qualitative Vinogradov comparison)
# ---------------------------------------------------------------------------


@dataclass
class EtaWitness:
    """Maximal nondecreasing step function with f(g) eta(|g|) <= h(g).

    The divergence verdict is a trend (fitted log-log slope over the
    sampled range), not a proof; the relation it witnesses is asymptotic.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    diverges: bool
    slope: float

    def at(self, radius):
        """Step-function value; radii between breakpoints carry the
        previous value."""
        i = np.searchsorted(self.breakpoints, radius, side="right") - 1
        if i < 0:
            return float(self.values[0])
        return float(self.values[i])


def build_eta(f_samples, h_samples):
    """Construct the eta witness from values indexed by group element.

    Per radius R, m(R) = min over |g| = R of h(g)/f(g); eta is the
    running minimum of m from the right, which is the pointwise-maximal
    nondecreasing minorant.
    """
    common = set(f_samples) & set(h_samples)
    if not common:
        raise CompressionError("no common sample elements")
    per_radius = {}
    for g in common:
        r = word_length(g)
        if r == 0:
            continue
        f = f_samples[g]
        if f <= 0:
            raise CompressionError(f"f must be positive away from e; got {f} at {g!r}")
        ratio = h_samples[g] / f
        per_radius[r] = min(per_radius.get(r, np.inf), ratio)
    if not per_radius:
        raise CompressionError("all samples sit at the identity")
    radii = np.array(sorted(per_radius))
    m = np.array([per_radius[r] for r in radii])
    eta = np.minimum.accumulate(m[::-1])[::-1]
    if len(radii) > 1 and eta[-1] > 0 and eta[0] > 0:
        slope, _ = _slope_with_stderr(np.log(radii.astype(float)), np.log(eta))
    else:
        slope = 0.0
    diverges = bool(slope > 0 and eta[-1] > eta[0])
    return EtaWitness(radii.astype(float), eta, diverges, slope)
