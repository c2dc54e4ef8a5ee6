import io

import numpy as np
import pytest
from scipy.linalg import expm

from qbmdiscord.asymptotics import asymptotic_invariants, asymptotic_params
from qbmdiscord.dynamics import (
    TRAJECTORY_COLUMNS,
    bare_system,
    evolve,
    evolve_minus_mode,
    full_bath_oracle,
    oracle_hamiltonian,
    output_times,
    rotation_matrix,
    write_trajectory_csv,
)
from qbmdiscord.environment import SpectralDensity, SystemConfig, discretize_bath
from qbmdiscord.errors import DomainError, ResourceError
from qbmdiscord.gaussian_core import build_initial_state, normal_mode_transform

OHMIC = SpectralDensity(0.1, 20.0, 1.0)
POSITION = SystemConfig(coupling="position")
SYMMETRIC = SystemConfig(coupling="symmetric")


def minus_phi(point):
    return np.sqrt(np.linalg.det(point.cov_pm.sigma[2:, 2:]))


def test_rotation_is_symplectic():
    for t in (0.0, 0.3, 2.0, 11.0):
        assert np.linalg.det(rotation_matrix(t, 1.7, 0.8)) == pytest.approx(1.0, abs=1e-14)


def test_minus_mode_rotation_preserves_purity():
    init = np.diag([2.0, 0.125])
    for t in (0.5, 1.0, 3.0):
        out = evolve_minus_mode(init, POSITION, t)
        assert np.linalg.det(out) == pytest.approx(0.25, rel=1e-12)
    assert np.allclose(evolve_minus_mode(init, POSITION, np.pi), init)


def test_output_times():
    assert np.allclose(output_times(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(DomainError):
        output_times(1.0, 0.0)


@pytest.mark.parametrize("sc", [POSITION, SYMMETRIC])
def test_free_evolution_is_pure_rotation(sc):
    init = build_initial_state("entangled", 0.8)
    pts = evolve(init, sc, SpectralDensity(0.0), 1.0, 6.0, 0.5)
    for p in pts:
        c, s = np.cos(p.t), np.sin(p.t)
        E = np.array([[c, s], [-s, c]])
        pm0 = normal_mode_transform(init).sigma
        assert np.allclose(p.cov_pm.sigma[:2, :2], E @ pm0[:2, :2] @ E.T, atol=1e-8)
        assert np.linalg.det(p.cov_pm.sigma[:2, :2]) == pytest.approx(0.25, abs=1e-8)


@pytest.mark.parametrize("kind", ["separable", "entangled"])
def test_minus_mode_purity_conserved(kind):
    pts = evolve(build_initial_state(kind, 1.0, 1.5), POSITION, OHMIC, 1.0, 10.0, 0.5)
    for p in pts:
        assert minus_phi(p) == pytest.approx(1.5, abs=1e-9)


def test_symmetric_initial_states_keep_normal_modes_decoupled():
    pts = evolve(build_initial_state("separable", 0.7), POSITION, OHMIC, 0.5, 8.0, 0.5)
    for p in pts:
        assert np.max(np.abs(p.cov_pm.sigma[:2, 2:])) < 1e-12


def test_symmetric_coupling_relaxes_to_ground_state():
    pts = evolve(build_initial_state("entangled", 1.0), SYMMETRIC, OHMIC, 0.0, 60.0, 1.0)
    plus = pts[-1].cov_pm.sigma[:2, :2]
    assert np.sqrt(np.linalg.det(plus)) == pytest.approx(0.5, rel=0.05)


def test_position_coupling_equilibrium_is_squeezed():
    pts = evolve(build_initial_state("entangled", 1.0), POSITION, OHMIC, 0.0, 60.0, 1.0)
    X, P = np.diag(pts[-1].cov_pm.sigma[:2, :2])
    assert abs(0.25 * np.log(X / P)) > 1e-3


@pytest.mark.parametrize("sc", [POSITION, SYMMETRIC])
def test_late_state_matches_asymptotic_closed_form(sc):
    T, r = 1.0, 0.6
    pts = evolve(build_initial_state("entangled", r), sc, OHMIC, T, 250.0, 2.5)
    p = asymptotic_params(sc, OHMIC, T, r)
    got = pts[-1].invariants.as_tuple()
    ref = asymptotic_invariants(p, pts[-1].t).as_tuple()
    for a, b in zip(got, ref):
        assert a == pytest.approx(b, rel=0.01, abs=1e-3)


def test_negative_squeezing_loses_discord_faster():
    t_max = 2 * np.pi

    def area(r):
        pts = evolve(build_initial_state("entangled", r), POSITION, OHMIC, 0.0, t_max, 0.05)
        return np.trapezoid([p.discord.discord for p in pts], dx=0.05)

    assert area(-1.0) < area(1.0)


def test_trajectory_csv():
    pts = evolve(build_initial_state("entangled", 0.5), POSITION, OHMIC, 0.0, 1.0, 0.5)
    buf = io.StringIO()
    write_trajectory_csv(pts, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 4


def test_evolve_rejects_mismatched_mass():
    with pytest.raises(DomainError):
        evolve(build_initial_state("entangled", 0.5), POSITION, SpectralDensity(0.1, mass=2.0), 0.0, 1.0, 0.5)


def test_oracle_without_bath_is_bare_rotation():
    init = build_initial_state("entangled", 0.9)
    bath = discretize_bath(SpectralDensity(0.0), 20)
    out = full_bath_oracle(init, bath, POSITION, 0.0, 5.0, 0.5)
    for k, cov in enumerate(out):
        t = 0.5 * k
        R = rotation_matrix(t, 1.0, 1.0)
        S = np.kron(np.eye(2), R)
        assert np.allclose(cov.sigma, S @ init.sigma @ S.T, atol=1e-10)


@pytest.mark.parametrize("sc", [POSITION, SYMMETRIC])
def test_oracle_flow_is_symplectic(sc):
    bath = discretize_bath(OHMIC, 40)
    H = oracle_hamiltonian(bare_system(sc, bath), bath)
    dim = H.shape[0]
    J = np.kron(np.eye(dim // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    S = expm(J @ H * 0.7)
    assert np.linalg.det(S) == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(S @ J @ S.T, J, atol=1e-9)


def test_oracle_cap():
    with pytest.raises(ResourceError):
        full_bath_oracle(build_initial_state("entangled", 0.5), discretize_bath(OHMIC, 50), POSITION, 0.0, 1.0, 0.5, cap=10)


def test_small_bath_recurs():
    # a coarse bath returns energy to the system; the reduced engine does not
    init = build_initial_state("entangled", 1.0)
    sd = SpectralDensity(0.1, 20.0, 1.0)
    t_rec = 2 * np.pi / (sd.cutoff / 50)
    out = full_bath_oracle(init, discretize_bath(sd, 50), POSITION, 0.0, t_rec + 2.0, 0.1)
    ref = evolve(init, POSITION, sd, 0.0, t_rec + 2.0, 0.1)
    early = max(abs(normal_mode_transform(o).sigma[0, 0] - p.cov_pm.sigma[0, 0]) for o, p in zip(out[:100], ref[:100]))
    late = max(abs(normal_mode_transform(o).sigma[0, 0] - p.cov_pm.sigma[0, 0]) for o, p in zip(out[-40:], ref[-40:]))
    assert late > 5 * early
