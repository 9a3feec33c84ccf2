"""Radial ODE solver tests: closed forms, asymptotics, convergence."""

import numpy as np
import pytest

from cocyclelab.radialode import (
    ForcingProfile,
    OdeError,
    RankOneSpace,
    all_presets,
    asymptotic_band,
    closed_form_real_h2_phi,
    closed_form_real_h2_psi,
    convergence_ratio,
    friction,
    growth_exponent,
    log_psi0,
    ode_residual,
    solve_psi,
    sp_n1_preset,
)

RH2 = RankOneSpace("R", 2)
HH2 = sp_n1_preset(2)


# ---------------------------------------------------------------------------
# Spaces and friction
# ---------------------------------------------------------------------------


def test_space_presets():
    assert RH2.m1 == 1 and RH2.m2 == 0
    assert RankOneSpace("C", 2).m1 == 2 and RankOneSpace("C", 2).m2 == 1
    assert HH2.m1 == 4 and HH2.m2 == 3
    assert RankOneSpace("O", 2).m1 == 8 and RankOneSpace("O", 2).m2 == 7
    assert HH2.friction_limit == 10
    assert sp_n1_preset(3).m1 == 8
    assert len(all_presets()) == 4


def test_space_validation():
    with pytest.raises(OdeError):
        RankOneSpace("Q", 2)
    with pytest.raises(OdeError):
        RankOneSpace("R", 1)
    with pytest.raises(OdeError):
        RankOneSpace("O", 3)  # no higher octonionic spaces
    with pytest.raises(OdeError):
        sp_n1_preset(1)


def test_friction_limits():
    # [DERIVED] m(r) -> m1 + 2 m2 as r -> inf and ~ (m1 + m2)/r at 0
    for space in all_presets():
        assert friction(space, 40.0) == pytest.approx(space.friction_limit, abs=1e-12)
        r = 1e-6
        assert friction(space, r) * r == pytest.approx(space.m1 + space.m2, rel=1e-5)
    with pytest.raises(OdeError):
        friction(RH2, 0.0)


def test_log_psi0_stable_at_large_r():
    # naive (sinh r)^-m1 (sinh 2r)^-m2 overflows past r ~ 20; the log form
    # must stay finite and match the naive value where both exist
    for space in all_presets():
        val = log_psi0(space, np.array([500.0]))
        assert np.isfinite(val).all()
    r = 5.0
    naive = -HH2.m1 * np.log(np.sinh(r)) - HH2.m2 * np.log(np.sinh(2 * r))
    assert log_psi0(HH2, r) == pytest.approx(naive, rel=1e-12)


# ---------------------------------------------------------------------------
# Forcing profiles
# ---------------------------------------------------------------------------


def test_forcing_profiles():
    c = ForcingProfile.constant(2.0)
    assert c.zeta_inf == 2.0
    assert np.allclose(c(np.array([0.1, 5.0])), 2.0)
    with pytest.raises(OdeError):
        ForcingProfile.constant(-1.0)
    b = ForcingProfile.banded_sinusoid(0.5, 1.5, period=4.0)
    vals = b(np.linspace(0, 40, 1000))
    assert vals.min() >= 0.5 - 1e-9 and vals.max() <= 1.5 + 1e-9
    with pytest.raises(OdeError):
        ForcingProfile.banded_sinusoid(0.0, 1.0, 4.0)
    s = ForcingProfile.from_samples([0.0, 1.0, 2.0], [1.0, 2.0, 1.0])
    assert s(np.array([0.5]))[0] == pytest.approx(1.5)


# ---------------------------------------------------------------------------
# Solver against closed forms
# ---------------------------------------------------------------------------


def test_real_h2_closed_form():
    # [DERIVED] for (R, 2), zeta = 1: psi = 2 tanh(r/2), phi = 4 log cosh(r/2)
    sol = solve_psi(RH2, ForcingProfile.constant(1.0), r_max=20.0, step=1e-3)
    assert np.abs(sol.psi - closed_form_real_h2_psi(sol.r)).max() <= 1e-6
    assert np.abs(sol.phi - closed_form_real_h2_phi(sol.r)).max() <= 1e-5


def test_quaternionic_limit():
    # [DERIVED] psi -> 2 zeta_inf/(m1 + 2 m2) = 2/10 = 0.2
    sol = solve_psi(HH2, ForcingProfile.constant(1.0), r_max=20.0, step=1e-3)
    assert sol.predicted_limit == pytest.approx(0.2)
    assert abs(sol.psi_at_rmax - 0.2) <= 1e-3


def test_asymptotic_band_contains_tail():
    space = RankOneSpace("C", 2)
    forcing = ForcingProfile.banded_sinusoid(0.8, 1.2, period=3.0)
    lo, hi = asymptotic_band(space, forcing)
    sol = solve_psi(space, forcing, r_max=60.0, step=2e-3)
    tail = sol.psi[sol.r >= 30.0]
    assert tail.min() >= lo - 1e-3 and tail.max() <= hi + 1e-3
    with pytest.raises(OdeError):
        asymptotic_band(space, ForcingProfile.constant(0.0))


def test_ode_residual_small():
    for space in (RH2, HH2):
        sol = solve_psi(space, ForcingProfile.constant(1.0), r_max=20.0, step=1e-3)
        assert ode_residual(sol) <= 1e-4


def test_monotone_comparison():
    # [DERIVED] the variation-of-constants kernel is positive, so a larger
    # forcing gives a pointwise larger psi
    z1 = ForcingProfile.constant(1.0)
    z2 = ForcingProfile.banded_sinusoid(1.0, 2.0, period=5.0)
    s1 = solve_psi(HH2, z1, r_max=30.0, step=2e-3)
    s2 = solve_psi(HH2, z2, r_max=30.0, step=2e-3)
    assert np.all(s2.psi >= s1.psi - 1e-12)
    assert np.all(s2.phi >= s1.phi - 1e-12)


def test_growth_exponent_half():
    for space in all_presets():
        sol = solve_psi(space, ForcingProfile.constant(1.0), r_max=500.0, step=1e-2)
        assert abs(growth_exponent(sol) - 0.5) <= 0.01
    short = solve_psi(RH2, ForcingProfile.constant(1.0), r_max=20.0, step=1e-2)
    with pytest.raises(OdeError):
        growth_exponent(short)


def test_convergence_ratio_second_order():
    ratio = convergence_ratio(HH2, ForcingProfile.constant(1.0), r_max=20.0, step=4e-3)
    assert 3.5 <= ratio <= 4.5


def test_solver_caps():
    with pytest.raises(OdeError):
        solve_psi(RH2, ForcingProfile.constant(1.0), r_max=600.0)
    with pytest.raises(OdeError):
        solve_psi(RH2, ForcingProfile.constant(1.0), step=0.1)


def test_zero_forcing_gives_zero_solution():
    sol = solve_psi(HH2, ForcingProfile.constant(0.0), r_max=10.0, step=1e-3)
    assert np.all(sol.psi == 0.0)
    assert np.all(sol.phi == 0.0)
    assert sol.predicted_limit == 0.0
