import numpy as np
import pytest
from scipy.integrate import quad

from qbmdiscord.asymptotics import plus_mode_equilibrium
from qbmdiscord.environment import (
    SpectralDensity,
    SystemConfig,
    asymptotic_dispersions,
    coefficients_position,
    coefficients_symmetric,
    coth_factor,
    discretize_bath,
    dissipation_kernel,
    noise_kernel,
    position_second_order_asymptotic,
    renormalize,
    renormalized_parameters,
    spectral_density,
)
from qbmdiscord.errors import DomainError, InstabilityError
from qbmdiscord.gaussian_core import thermal_phi

OHMIC = SpectralDensity(0.1, 20.0, 1.0)


def reference_kernel(sd, s, T, weight):
    def integrand(w):
        return float(sd(w)) * (float(coth_factor(w, T)) if weight == "cos" else 1.0)

    val, _ = quad(integrand, 0.0, sd.cutoff, weight=weight, wvar=s, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


def test_spectral_density_values():
    assert spectral_density(OHMIC, 10.0) == pytest.approx(2 / np.pi * 0.1 * 10.0)
    assert spectral_density(OHMIC, 25.0) == 0.0
    assert spectral_density(SpectralDensity(0.0), 3.0) == 0.0


def test_coth_factor_zero_temperature():
    assert np.all(coth_factor(np.array([0.1, 1.0, 10.0]), 0.0) == 1.0)


def test_kernels_match_quadrature_at_random_points():
    rng = np.random.default_rng(11)
    for s, T in zip(rng.uniform(0.01, 6.0, 50), rng.choice([0.0, 0.3, 1.0, 4.0], 50)):
        eta = float(dissipation_kernel(OHMIC, s))
        assert eta == pytest.approx(reference_kernel(OHMIC, s, 0.0, "sin"), rel=1e-8, abs=1e-10)
        nu = float(noise_kernel(OHMIC, s, T))
        assert nu == pytest.approx(reference_kernel(OHMIC, s, T, "cos"), rel=1e-8, abs=1e-10)


def test_kernel_closed_form_and_limits():
    s = 0.73
    L = OHMIC.cutoff
    closed = 2 * 0.1 / np.pi * (np.sin(L * s) / s**2 - L * np.cos(L * s) / s)
    assert float(dissipation_kernel(OHMIC, s)) == pytest.approx(closed, rel=1e-12)
    assert float(dissipation_kernel(OHMIC, 0.0)) == 0.0
    assert float(noise_kernel(OHMIC, 1e-5, 0.0)) == pytest.approx(2 * 0.1 / np.pi * L**2 / 2, rel=1e-6)


def test_frequency_shift_anchor_ohmic():
    got = position_second_order_asymptotic(OHMIC, 0.0).d_omega2
    assert got == pytest.approx(-4 / np.pi * 2.0, rel=0.01)
    assert OHMIC.static_shift() == pytest.approx(-2.546, abs=1e-3)


@pytest.mark.parametrize("coupling", ["position", "symmetric"])
def test_free_bath_gives_zero_coefficients(coupling):
    t = np.linspace(0, 5, 21)
    sd = SpectralDensity(0.0)
    if coupling == "position":
        c = coefficients_position(sd, 1.0, t, method="second_order")
    else:
        c = coefficients_symmetric(sd, 1.0, t)
    for arr in (c.d_omega2, c.gamma, c.diffusion, c.anomalous):
        assert np.all(arr == 0.0)


def test_equipartition_at_high_temperature():
    a = position_second_order_asymptotic(OHMIC, 100.0)
    assert a.diffusion / (2 * a.gamma) == pytest.approx(100.0, rel=0.02)
    dx, dp = asymptotic_dispersions(coefficients_position(OHMIC, 100.0, np.array([0.0, 1.0])), check_settled=False)
    assert dp**2 == pytest.approx(100.0, rel=0.02)
    dx, dp = asymptotic_dispersions(coefficients_symmetric(OHMIC, 100.0, np.array([0.0, 1.0])), check_settled=False)
    assert dp**2 == pytest.approx(100.0, rel=0.02)


@pytest.mark.parametrize("T", [0.0, 0.3, 1.0, 10.0])
def test_symmetric_coupling_has_no_critical_squeezing(T):
    dx, dp = asymptotic_dispersions(coefficients_symmetric(OHMIC, T, np.array([0.0, 1.0])), check_settled=False)
    assert abs(0.5 * np.log(dx / dp)) < 1e-8
    phi, r_crit = plus_mode_equilibrium(SystemConfig(coupling="symmetric"), OHMIC, T)
    assert abs(r_crit) < 1e-8
    assert phi == pytest.approx(thermal_phi(1.0, T), rel=1e-9)


def test_position_coupling_has_critical_squeezing_at_zero_temperature():
    phi, r_crit = plus_mode_equilibrium(SystemConfig(coupling="position"), OHMIC, 0.0)
    assert abs(r_crit) > 1e-3
    assert phi >= 0.5


def test_position_coupling_is_thermal_at_high_temperature():
    phi, _ = plus_mode_equilibrium(SystemConfig(coupling="position"), OHMIC, 50.0)
    assert phi == pytest.approx(thermal_phi(1.0, 50.0), rel=0.02)


def test_exact_and_second_order_agree_on_late_coefficients():
    t = np.array([0.0, 1.0])
    exact = coefficients_position(OHMIC, 1.0, t).asymptotic
    second = coefficients_position(OHMIC, 1.0, t, method="second_order").asymptotic
    assert exact.gamma == pytest.approx(second.gamma, rel=0.05)


def test_asymptotic_values_independent_of_grid_step():
    coarse = coefficients_position(OHMIC, 1.0, np.arange(0.0, 30.0001, 0.02), method="second_order")
    fine = coefficients_position(OHMIC, 1.0, np.arange(0.0, 30.0001, 0.01), method="second_order")
    for name in ("d_omega2", "gamma", "diffusion", "anomalous"):
        assert getattr(coarse, name)[-1] == pytest.approx(getattr(fine, name)[-1], rel=5e-3)


def test_sub_ohmic_settles_faster():
    t = np.arange(0.0, 40.0, 0.02)

    def settle_time(n, tol=0.05):
        c = coefficients_position(SpectralDensity(0.1, 20.0, n), 1.0, t, method="second_order")
        off = np.nonzero(np.abs(c.gamma / c.asymptotic.gamma - 1.0) >= tol)[0]
        return c.t[off[-1] + 1]

    assert settle_time(0.5) < settle_time(1.0)


def test_renormalize_position():
    bare = renormalize(SystemConfig(coupling="position"), -2.546)
    assert bare.c12 == pytest.approx(2.546)
    M, W2, c12, ct = renormalized_parameters(bare, -2.546)
    assert (M, W2, c12, ct) == pytest.approx((1.0, 1.0, 0.0, 0.0), abs=1e-12)


def test_renormalize_symmetric_round_trip():
    phys = SystemConfig(mass=1.3, omega=0.9, coupling="symmetric")
    for d in (-0.5, -2.0, 0.1):
        bare = renormalize(phys, d)
        M, W2, c12, ct = renormalized_parameters(bare, d)
        assert (M, W2, c12, ct) == pytest.approx((1.3, 0.81, 0.0, 0.0), abs=1e-12)


def test_renormalize_identity_without_shift():
    phys = SystemConfig(mass=2.0, omega=1.5)
    assert renormalize(phys, 0.0) == phys


def test_renormalize_rejects_destabilising_shift():
    with pytest.raises(InstabilityError):
        renormalize(SystemConfig(coupling="position"), 0.6)


def test_discretized_bath():
    bath = discretize_bath(OHMIC, 200)
    assert bath.integrated_density() == pytest.approx(2 / np.pi * 0.1 * 20.0**2 / 2, rel=0.005)
    assert bath.integrated_density() == pytest.approx(OHMIC.integral(), rel=0.005)
    coarse = discretize_bath(OHMIC, 2)
    assert coarse.N == 2 and np.all(coarse.couplings > 0)
    assert np.all(discretize_bath(SpectralDensity(0.0), 10).couplings == 0.0)
    with pytest.raises(DomainError):
        discretize_bath(OHMIC, 1)


def test_spectral_density_rejects_bad_parameters():
    for kw in ({"gamma0": -0.1}, {"gamma0": 0.1, "cutoff": 0.0}, {"gamma0": 0.1, "n": 0.0}):
        with pytest.raises(DomainError):
            SpectralDensity(**kw)
