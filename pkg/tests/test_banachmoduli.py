"""Moduli of convexity/smoothness, duality, and the invariant renorming."""

import numpy as np
import pytest

from cocyclelab.banachmoduli import (
    ModuliError,
    NormSpec,
    OrbitNorm,
    convexity_oracle_2d,
    duality_residual,
    enumerate_closure,
    fit_power_constants,
    invariance_residual,
    lindenstrauss_dual,
    modulus_convexity,
    modulus_smoothness,
    orbit_norm,
    smoothness_oracle_2d,
)


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


EPS_GRID = np.linspace(0.1, 1.9, 19)
TAU_GRID = np.linspace(0.1, 1.5, 15)


# ---------------------------------------------------------------------------
# NormSpec
# ---------------------------------------------------------------------------


def test_norm_spec_validation():
    with pytest.raises(ModuliError):
        NormSpec(0.5, 2)
    with pytest.raises(ModuliError):
        NormSpec(2.0, 1)
    with pytest.raises(ModuliError):
        NormSpec(2.0, 17)


def test_norm_values_and_duals():
    s1, s2, sinf = NormSpec(1, 3), NormSpec(2, 3), NormSpec(np.inf, 3)
    x = [3.0, -4.0, 0.0]
    assert s1.norm(x) == 7.0
    assert s2.norm(x) == 5.0
    assert sinf.norm(x) == 4.0
    assert s1.dual_exponent == np.inf
    assert sinf.dual_exponent == 1.0
    assert NormSpec(1.5, 3).dual_exponent == pytest.approx(3.0)
    assert s2.dual().p == 2.0


def test_norm_grad_is_derivative():
    rng = np.random.default_rng(0)
    for p in (1.3, 2.0, 3.0, 5.0):
        spec = NormSpec(p, 4)
        for _ in range(20):
            x = rng.standard_normal(4)
            g = spec.norm_grad(x)
            num = np.empty(4)
            for i in range(4):
                e = np.zeros(4)
                e[i] = 1e-6
                num[i] = (spec.norm(x + e) - spec.norm(x - e)) / 2e-6
            assert np.allclose(g, num, atol=1e-5)


def test_norm_grad_kinks_are_subgradients():
    s1, sinf = NormSpec(1, 3), NormSpec(np.inf, 3)
    x = np.array([1.0, -2.0, 0.5])
    # a subgradient g satisfies ||y|| >= ||x|| + g.(y - x)
    rng = np.random.default_rng(1)
    for spec in (s1, sinf):
        g = spec.norm_grad(x)
        for _ in range(100):
            y = rng.standard_normal(3)
            assert spec.norm(y) >= spec.norm(x) + g @ (y - x) - 1e-12


# ---------------------------------------------------------------------------
# Moduli curves
# ---------------------------------------------------------------------------


def test_l2_closed_forms():
    spec = NormSpec(2, 2)
    delta = modulus_convexity(spec, EPS_GRID, seed=0)
    rho = modulus_smoothness(spec, TAU_GRID, seed=0)
    assert np.abs(delta.values - (1 - np.sqrt(1 - (EPS_GRID / 2) ** 2))).max() < 1e-4
    assert np.abs(rho.values - (np.sqrt(1 + TAU_GRID**2) - 1)).max() < 1e-4


def test_l1_flat_convexity_with_witness():
    # [PAPER] l_1 is not uniformly convex: delta(eps) = 0 for eps <= 2,
    # witnessed by opposite-corner pairs like e1 +- e2
    spec = NormSpec(1, 2)
    delta = modulus_convexity(spec, np.array([0.5, 1.0, 1.5]), seed=0)
    assert np.all(delta.values < 1e-8)
    for (u, v), eps in zip(delta.witnesses, delta.args):
        assert spec.norm(u) <= 1 + 1e-9
        assert spec.norm(v) <= 1 + 1e-9
        assert spec.norm(u - v) >= eps * (1 - 1e-9)
        assert 1 - spec.norm(u + v) / 2 < 1e-8


def test_witnesses_certify_values():
    for p in (1.5, 3.0):
        spec = NormSpec(p, 3)
        delta = modulus_convexity(spec, EPS_GRID[::4], seed=1)
        for (u, v), eps, val in zip(delta.witnesses, delta.args, delta.values):
            assert spec.norm(u) <= 1 + 1e-9
            assert spec.norm(v) <= 1 + 1e-9
            assert spec.norm(u - v) >= eps * (1 - 1e-9)
            assert 1 - spec.norm(u + v) / 2 <= val + 1e-9
        rho = modulus_smoothness(spec, TAU_GRID[::4], seed=1)
        for (u, v), tau, val in zip(rho.witnesses, rho.args, rho.values):
            assert spec.norm(u) <= 1 + 1e-9
            assert spec.norm(v) <= tau * (1 + 1e-9)
            assert (spec.norm(u + v) + spec.norm(u - v)) / 2 - 1 >= val - 1e-9


def test_moduli_monotone():
    spec = NormSpec(3, 2)
    delta = modulus_convexity(spec, EPS_GRID, seed=2)
    rho = modulus_smoothness(spec, TAU_GRID, seed=2)
    assert np.all(np.diff(delta.values) >= -1e-6)
    assert np.all(np.diff(rho.values) >= -1e-6)
    assert np.all(delta.values >= 0)
    assert np.all(rho.values >= 0)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_moduli_match_2d_angle_oracle(p):
    # [DERIVED] in dim 2 the sphere is a curve; a dense angle grid brackets
    # the optimum independently of SLSQP
    spec = NormSpec(p, 2)
    rows = lambda a: np.linalg.norm(a, ord=p, axis=1)
    for eps in (0.6, 1.2):
        direct = modulus_convexity(spec, np.array([eps]), seed=3).values[0]
        oracle = convexity_oracle_2d(spec.norm, eps, row_norms=rows)
        assert direct <= oracle + 1e-4  # optimizer at least as deep as the grid
        assert abs(direct - oracle) < 5e-3  # and the grid is fine enough to agree
    for tau in (0.4, 1.0):
        direct = modulus_smoothness(spec, np.array([tau]), seed=3).values[0]
        oracle = smoothness_oracle_2d(spec.norm, tau, row_norms=rows)
        assert direct >= oracle - 1e-4
        assert abs(direct - oracle) < 5e-3


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_lindenstrauss_duality(p):
    spec = NormSpec(p, 2)
    rho = modulus_smoothness(spec, TAU_GRID, seed=4)
    delta_dual = modulus_convexity(spec.dual(), np.linspace(0.02, 2.0, 100), seed=4)
    predicted = lindenstrauss_dual(delta_dual, TAU_GRID)
    assert duality_residual(predicted, rho) < 2e-3


def test_duality_residual_validation():
    spec = NormSpec(2, 2)
    rho = modulus_smoothness(spec, TAU_GRID, seed=0)
    other = modulus_smoothness(spec, TAU_GRID[:-1], seed=0)
    with pytest.raises(ModuliError):
        duality_residual(rho, other)


def test_fit_power_constants():
    spec = NormSpec(2, 2)
    rho = modulus_smoothness(spec, TAU_GRID, seed=5)
    K = fit_power_constants(rho, 2.0)
    # [DERIVED] rho_H(tau) = sqrt(1+tau^2)-1 <= tau^2/2 with equality as tau -> 0
    assert 0.3 < K <= 0.5 + 1e-6
    delta = modulus_convexity(spec, EPS_GRID, seed=5)
    c = fit_power_constants(delta, 2.0)
    # delta_H(eps) >= eps^2/8
    assert 0.1 < c
    with pytest.raises(ModuliError):
        fit_power_constants(rho, 1.0)
    with pytest.raises(ModuliError):
        fit_power_constants(delta, 1.5)


# ---------------------------------------------------------------------------
# Closure enumeration and the orbit-sup renorming
# ---------------------------------------------------------------------------


def test_enumerate_closure_cyclic():
    gen = rotation(2 * np.pi / 8)
    closure = enumerate_closure([gen])
    assert len(closure) == 8


def test_enumerate_closure_infinite_raises():
    with pytest.raises(ModuliError):
        enumerate_closure([rotation(1.0)], cap=200)  # irrational rotation


def test_orbit_norm_invariance_and_axioms():
    d = np.diag([2.0, 1.0])
    gen = d @ rotation(2 * np.pi / 8) @ np.linalg.inv(d)
    norm = orbit_norm([gen])
    assert norm.exact
    assert norm.group_order == 8
    rng = np.random.default_rng(6)
    vectors = rng.standard_normal((1000, 2))
    assert invariance_residual(norm, [gen], vectors) <= 1e-9
    # norm axioms on random pairs
    for i in range(0, 1000, 2):
        u, v = vectors[i], vectors[i + 1]
        assert norm(u + v) <= norm(u) + norm(v) + 1e-9
        assert norm(2.5 * u) == pytest.approx(2.5 * norm(u), rel=1e-12)
        assert norm(u) > 0
    assert norm(np.zeros(2)) == 0.0
    # equivalence with the euclidean norm within the uniform bound M = 2
    ratios = [norm(v) / np.linalg.norm(v) for v in vectors]
    assert 0.5 - 1e-9 <= min(ratios) and max(ratios) <= 2.0 + 1e-9


def test_orbit_norm_sampled_fallback():
    gen = rotation(1.0)  # infinite group, isometric so bound 1 works
    norm = orbit_norm([gen], bound=1.0, sample_budget=512, seed=7)
    assert not norm.exact
    v = np.array([1.0, 0.0])
    # sampled sup over rotations of a unit vector stays within [1, bound]
    assert 1.0 - 1e-9 <= norm(v) <= 1.0 + 1e-9
    with pytest.raises(ModuliError):
        orbit_norm([rotation(1.0)])  # no bound supplied


def test_renormed_convexity_keeps_power_type():
    # renorming a euclidean space by a finite orbit sup keeps a quadratic
    # convexity lower bound (with a worse constant)
    d = np.diag([2.0, 1.0])
    gen = d @ rotation(2 * np.pi / 8) @ np.linalg.inv(d)
    norm = orbit_norm([gen])
    spec = NormSpec(2, 2)  # carries the dimension only
    eps_grid = np.array([0.4, 0.8, 1.2])
    delta = modulus_convexity(spec, eps_grid, seed=8, norm=norm)
    assert np.all(delta.values >= 0.004 * eps_grid**2)
