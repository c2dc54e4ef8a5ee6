import numpy as np
import pytest
from scipy.integrate import quad

from qbmdiscord.environment import PLUS_MODE_FACTOR, SpectralDensity, position_second_order_asymptotic
from qbmdiscord.errors import DomainError
from qbmdiscord.memory import (
    DEFAULT_STEP,
    _cached_solution,
    damping_and_frequency,
    default_handoff,
    equilibrium_moments,
    exact_asymptotic,
    exact_position_coefficients,
    noise_moments,
    response_kernel,
    response_pole,
    solve_fundamental,
)

OHMIC = SpectralDensity(0.1, 20.0, 1.0)


def test_free_fundamental_solutions():
    fs = solve_fundamental(SpectralDensity(0.0), 2.0, 10.0)
    w = np.sqrt(2.0)
    assert np.max(np.abs(fs.u[:, 0] - np.cos(w * fs.t))) < 1e-4
    assert np.max(np.abs(fs.u[:, 1] - np.sin(w * fs.t) / w)) < 1e-4
    gamma, omega2 = damping_and_frequency(fs)
    assert np.allclose(gamma[1:], 0.0, atol=1e-9)
    assert np.allclose(omega2[1:], 2.0, rtol=1e-9)


def test_verlet_is_second_order():
    bare2 = 1.0 - PLUS_MODE_FACTOR * OHMIC.static_shift()
    errs = []
    ref = solve_fundamental(OHMIC, bare2, 5.0, 0.0005).u[-1]
    for h in (0.004, 0.002):
        errs.append(np.max(np.abs(solve_fundamental(OHMIC, bare2, 5.0, h).u[-1] - ref)))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_pole_is_a_root_and_matches_weak_coupling_rate():
    bare2 = 1.0 - PLUS_MODE_FACTOR * OHMIC.static_shift()
    z = response_pole(OHMIC, bare2, complex(1.0, -0.1))
    assert z.imag < 0
    assert abs(z.real - 1.0) < 0.05
    assert -z.imag == pytest.approx(position_second_order_asymptotic(OHMIC, 0.0).gamma, rel=0.05)


@pytest.mark.parametrize("n", [0.5, 1.0, 2.0])
def test_response_kernel_matches_principal_value(n):
    sd = SpectralDensity(0.1, 20.0, n)
    for z in (0.7, 1.0, 3.0):
        ref, _ = quad(lambda w: PLUS_MODE_FACTOR * float(sd(w)) * w / (w + z), 0.0, sd.cutoff, weight="cauchy", wvar=z)
        assert float(response_kernel(sd, z)[0]) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("T", [0.0, 1.0])
def test_time_domain_moments_reach_equilibrium(T):
    asym, (x2, p2), bare2 = exact_asymptotic(OHMIC, T)
    fs = _cached_solution(OHMIC, bare2, 20.0, DEFAULT_STEP)
    mom = noise_moments(OHMIC, T, fs, np.array([len(fs.t) - 1]))
    assert mom["X"][0] == pytest.approx(x2, rel=2e-3)
    assert mom["P"][0] == pytest.approx(p2, rel=2e-3)


def test_equilibrium_uncertainty_and_equipartition():
    bare2 = 1.0 - PLUS_MODE_FACTOR * OHMIC.static_shift()
    x2, p2 = equilibrium_moments(OHMIC, 0.0, bare2)
    assert x2 * p2 >= 0.25
    x2, p2 = equilibrium_moments(OHMIC, 100.0, bare2)
    assert p2 == pytest.approx(100.0, rel=0.02)
    assert x2 == pytest.approx(100.0, rel=0.02)


def test_exact_coefficients_hand_off_to_asymptotic_values():
    t = np.array([0.0, 5.0, 25.0, 40.0])
    c = exact_position_coefficients(OHMIC, 1.0, t)
    assert default_handoff(OHMIC) == 20.0
    assert c.gamma[0] == 0.0 and c.diffusion[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(c.gamma[2:] == c.asymptotic.gamma)
    assert c.equilibrium is not None and c.method == "exact"


def test_exact_coefficients_vanish_without_bath():
    c = exact_position_coefficients(SpectralDensity(0.0), 1.0, np.linspace(0, 5, 6))
    for arr in (c.d_omega2, c.gamma, c.diffusion, c.anomalous):
        assert np.all(arr == 0.0)


def test_exact_coefficients_reject_bad_step():
    with pytest.raises(DomainError):
        exact_position_coefficients(OHMIC, 1.0, np.array([0.0, 1.0]), h=0.0)
