"""Time evolution of the two-mode covariance matrix.

Covariances are dimensionless with respect to the physical ``(M, Omega)`` of
the ``SystemConfig`` passed in (vacuum ``I/2``).  The ``-`` mode rotates
freely; the ``+`` mode follows the master equation, integrated for its three
second moments together with the drift propagator that carries the ``+/-``
cross block.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .correlations import DiscordResult, gaussian_discord, log_negativity
from .environment import (
    BathDiscretization,
    CoefficientSet,
    SpectralDensity,
    SystemConfig,
    coefficients_position,
    coefficients_symmetric,
    renormalize,
)
from .errors import DomainError, IntegrationError, PhysicalityError, ResourceError
from .gaussian_core import (
    Basis,
    CouplingKind,
    LocalInvariants,
    TwoModeCov,
    invariants,
    normal_mode_transform,
    partial_transpose_nu_minus,
    plus_minus_state,
    symplectic_eigenvalues,
)

TRAJECTORY_TOL = 1e-6
ODE_RTOL = 1e-9
ODE_ATOL = 1e-12
COEFF_STEP = 0.01
SECOND_ORDER_SPAN = 100.0
ORACLE_N_CAP = 2000


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    cov_pm: TwoModeCov
    cov_12: TwoModeCov
    invariants: LocalInvariants
    EN: float
    discord: DiscordResult


def rotation_matrix(t: float, mass: float, omega: float) -> NDArray[np.float64]:
    """Free evolution of ``(x, p)`` for an oscillator of the given mass and frequency."""
    c, s = np.cos(omega * t), np.sin(omega * t)
    mw = mass * omega
    return np.array([[c, s / mw], [-mw * s, c]])


def _dimensionless_rotation(t: float, sc: SystemConfig, scale: float) -> NDArray[np.float64]:
    m_minus = sc.normal_mode_masses()[1]
    w_minus = float(np.sqrt(sc.normal_mode_omega2()[1]))
    k = np.sqrt(scale)
    return np.diag([k, 1.0 / k]) @ rotation_matrix(t, m_minus, w_minus) @ np.diag([1.0 / k, k])


def evolve_minus_mode(init: NDArray[np.float64], sc: SystemConfig, t: float, scale: float | None = None) -> NDArray[np.float64]:
    """``E(t) sigma_- E(t)^T`` for a dimensionless 2x2 block.

    ``sc`` holds bare parameters; ``scale`` is the ``M Omega`` used to make
    ``init`` dimensionless (defaults to the ``-`` mode's own ``m_- w_-``).
    """
    if scale is None:
        scale = sc.normal_mode_masses()[1] * float(np.sqrt(sc.normal_mode_omega2()[1]))
    E = _dimensionless_rotation(t, sc, scale)
    return E @ np.asarray(init, dtype=float) @ E.T


# --- + mode engine --------------------------------------------------------------------------


class CoefficientTable:
    """Cubic interpolation of ``(Omega_+^2, gamma, D, f)``; asymptotic values past the grid."""

    def __init__(self, coeffs: CoefficientSet):
        self.coeffs = coeffs
        data = np.column_stack([coeffs.omega_plus2, coeffs.gamma, coeffs.diffusion, coeffs.anomalous])
        self.t_end = float(coeffs.t[-1])
        self.spline = CubicSpline(coeffs.t, data) if len(coeffs.t) > 3 else None
        self._grid = coeffs.t
        self._data = data
        a = coeffs.asymptotic
        self.asymptotic = np.array([a.omega_plus**2, a.gamma, a.diffusion, a.anomalous])
        self.step = float(np.min(np.diff(coeffs.t)))

    def __call__(self, t: float) -> NDArray[np.float64]:
        if t > self.t_end:
            return self.asymptotic
        if self.spline is None:
            return np.array([np.interp(t, self._grid, col) for col in self._data.T])
        return self.spline(t)


def _rhs(kind: CouplingKind, omega: float, mass: float, table: CoefficientTable):
    mw = mass * omega

    def position(t, y):
        w2, g, D, f = table(t)
        X, P, S = y[0], y[1], y[2]
        k = w2 / omega
        phi = y[3:].reshape(2, 2)
        drift = np.array([[0.0, omega], [-k, -2.0 * g]])
        return np.concatenate(
            [
                [2.0 * omega * S, -2.0 * k * S - 4.0 * g * P + 2.0 * D / mw, omega * P - k * X - 2.0 * g * S - f],
                (drift @ phi).ravel(),
            ]
        )

    def symmetric(t, y):
        w2, g, D, _ = table(t)
        wp = np.sqrt(w2)
        X, P, S = y[0], y[1], y[2]
        phi = y[3:].reshape(2, 2)
        drift = np.array([[-2.0 * g, wp], [-wp, -2.0 * g]])
        return np.concatenate(
            [
                [2.0 * wp * S - 4.0 * g * X + 2.0 * D, -2.0 * wp * S - 4.0 * g * P + 2.0 * D, wp * (P - X) - 4.0 * g * S],
                (drift @ phi).ravel(),
            ]
        )

    return position if kind is CouplingKind.POSITION else symmetric


@dataclass(frozen=True)
class PlusModeTrace:
    t: NDArray[np.float64]
    moments: NDArray[np.float64]  # (n, 3): X, P, S dimensionless
    propagator: NDArray[np.float64]  # (n, 2, 2) drift propagator of the means


def evolve_plus_mode(
    init: NDArray[np.float64], coeffs: CoefficientSet, sc: SystemConfig, t_out: Sequence[float]
) -> PlusModeTrace:
    """Integrate the ``+`` mode second moments at the output times.

    ``init`` is the dimensionless 2x2 ``+`` block; ``sc`` the physical system.
    """
    init = np.asarray(init, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    if np.any(np.diff(t_out) <= 0) or t_out[0] < 0:
        raise DomainError("output times must be increasing and non-negative")
    table = CoefficientTable(coeffs)
    rhs = _rhs(coeffs.kind, sc.omega, sc.mass, table)
    y0 = np.concatenate([[init[0, 0], init[1, 1], init[0, 1]], np.eye(2).ravel()])
    out = np.empty((len(t_out), 7))
    # dense coefficients first, then the constant asymptotic regime
    split = min(table.t_end, float(t_out[-1]))
    first = t_out <= split
    t_eval = np.union1d(t_out[first], [split])
    y_split = y0
    if split > 0:
        sol = _integrate(rhs, 0.0, split, y0, t_eval, table.step)
        out[first] = sol.y.T[np.searchsorted(t_eval, t_out[first])]
        y_split = sol.y[:, -1]
    else:
        out[first] = y0
    if (~first).any():
        sol = _integrate(rhs, split, float(t_out[-1]), y_split, t_out[~first], np.inf)
        out[~first] = sol.y.T
    return PlusModeTrace(t=t_out, moments=out[:, :3], propagator=out[:, 3:].reshape(-1, 2, 2))


def _integrate(rhs, t0: float, t1: float, y0, t_eval, max_step: float):
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", t_eval=t_eval, rtol=ODE_RTOL, atol=ODE_ATOL, max_step=max_step)
    if not sol.success:
        raise IntegrationError(f"moment integration failed: {sol.message}")
    return sol


def coefficients_for(sc: SystemConfig, sd: SpectralDensity, T: float, t_max: float, method: str = "exact") -> CoefficientSet:
    """Coefficient grid covering ``[0, t_max]`` for the engine."""
    if sc.coupling is CouplingKind.POSITION and method == "exact":
        from .memory import default_handoff

        span = min(t_max, default_handoff(sd))
        grid = np.arange(0.0, span + 0.5 * COEFF_STEP, COEFF_STEP)
        return coefficients_position(sd, T, grid, sc.omega, method="exact")
    span = min(t_max, SECOND_ORDER_SPAN)
    grid = np.arange(0.0, span + 0.5 * COEFF_STEP, COEFF_STEP * 2)
    if sc.coupling is CouplingKind.POSITION:
        return coefficients_position(sd, T, grid, sc.omega, method=method)
    return coefficients_symmetric(sd, T, grid, sc.omega)


def output_times(t_max: float, dt_out: float) -> NDArray[np.float64]:
    if t_max <= 0 or dt_out <= 0:
        raise DomainError("t_max and dt_out must be positive")
    n = int(np.floor(t_max / dt_out + 1e-9))
    return np.arange(n + 1) * dt_out


def evolve(
    init: TwoModeCov,
    sc: SystemConfig,
    sd: SpectralDensity,
    T: float,
    t_max: float,
    dt_out: float,
    method: str = "exact",
    coeffs: CoefficientSet | None = None,
) -> list[TrajectoryPoint]:
    """Trajectory of the two-mode state; ``sc`` is the physical system ``(M, Omega)``."""
    if abs(sd.mass - sc.mass) > 1e-12:
        raise DomainError("spectral density mass must equal the system mass")
    if T < 0:
        raise DomainError("temperature must be >= 0")
    t_out = output_times(t_max, dt_out)
    if coeffs is None:
        coeffs = coefficients_for(sc, sd, T, t_max, method)
    pm0 = normal_mode_transform(init, Basis.TO_PLUS_MINUS).sigma
    trace = evolve_plus_mode(pm0[:2, :2], coeffs, sc, t_out)
    minus0, cross0 = pm0[2:, 2:], pm0[:2, 2:]
    points = []
    for i, t in enumerate(t_out):
        # bare and physical minus modes coincide: free rotation at Omega
        c, s = np.cos(sc.omega * t), np.sin(sc.omega * t)
        E = np.array([[c, s], [-s, c]])
        X, P, S = trace.moments[i]
        plus = np.array([[X, S], [S, P]])
        cross = trace.propagator[i] @ cross0 @ E.T
        points.append(make_point(float(t), plus_minus_state(plus, E @ minus0 @ E.T, cross)))
    return points


def make_point(t: float, sigma_pm: NDArray[np.float64]) -> TrajectoryPoint:
    cov_pm = TwoModeCov(sigma_pm, check=False)
    cov_12 = TwoModeCov(normal_mode_transform(cov_pm, Basis.TO_12).sigma, check=False)
    inv = invariants(cov_12)
    nu = symplectic_eigenvalues(inv).nu_minus
    if nu < 0.5 - TRAJECTORY_TOL:
        raise PhysicalityError(f"nu_minus={nu:.9f} below 1/2 at t={t}")
    return TrajectoryPoint(t=t, cov_pm=cov_pm, cov_12=cov_12, invariants=inv, EN=log_negativity(inv), discord=gaussian_discord(inv))


TRAJECTORY_COLUMNS = ("t", "A", "B", "C", "D", "nu_tilde_minus", "EN", "discord", "g", "branch")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def trajectory_rows(points: Iterable[TrajectoryPoint]) -> list[list[str]]:
    rows = []
    for p in points:
        inv = p.invariants
        rows.append(
            [_fmt(p.t), _fmt(inv.A), _fmt(inv.B), _fmt(inv.C), _fmt(inv.D), _fmt(partial_transpose_nu_minus(inv)),
             _fmt(p.EN), _fmt(p.discord.discord), _fmt(p.discord.g), p.discord.branch.value]
        )
    return rows


def write_trajectory_csv(points: Iterable[TrajectoryPoint], target: str | Path | io.TextIOBase) -> None:
    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        w.writerows(trajectory_rows(points))

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            dump(fh)
    else:
        dump(target)


# --- full-bath oracle ---------------------------------------------------------------------------


def bare_system(sc: SystemConfig, bath: BathDiscretization) -> SystemConfig:
    """Bare parameters for the discretised bath, renormalised with its own static shift."""
    if sc.coupling is CouplingKind.POSITION:
        shift = -float(np.sum(bath.couplings**2 / (bath.masses * bath.frequencies**2))) / sc.mass
        return renormalize(sc, shift)
    # symmetric coupling: the + mode sees sum_k g_k^2 delta(w - w_k), g_k^2 = 4 c_k^2 / (2 m_k w_k M Omega)
    G = 4.0 * bath.couplings**2 / (2.0 * bath.masses * bath.frequencies * sc.mass * sc.omega)
    dw = -float(np.sum(G / (bath.frequencies - sc.omega)))
    return renormalize(sc, (sc.omega - 0.5 * dw) * dw)


def oracle_hamiltonian(bare: SystemConfig, bath: BathDiscretization) -> NDArray[np.float64]:
    """Quadratic form ``H = z^T H z / 2`` over ``(x1, p1, x2, p2, q_1, pi_1, ...)``."""
    N = bath.N
    dim = 2 * N + 4
    m, w = bare.mass, bare.omega
    H = np.zeros((dim, dim))
    for j in (0, 2):
        H[j, j] = m * w * w
        H[j + 1, j + 1] = 1.0 / m
    H[0, 2] = H[2, 0] = m * bare.c12
    H[1, 3] = H[3, 1] = bare.c12_tilde / (m * w * w)
    q = 4 + 2 * np.arange(N)
    H[q, q] = bath.masses * bath.frequencies**2
    H[q + 1, q + 1] = 1.0 / bath.masses
    for j in (0, 2):
        H[j, q] = H[q, j] = bath.couplings
    if bare.coupling is CouplingKind.SYMMETRIC:
        tilde = bath.couplings / (m * w * bath.masses * bath.frequencies)
        for j in (1, 3):
            H[j, q + 1] = H[q + 1, j] = tilde
    return H


def full_bath_oracle(
    init: TwoModeCov,
    bath: BathDiscretization,
    sc: SystemConfig,
    T: float,
    t_max: float,
    dt_out: float,
    cap: int = ORACLE_N_CAP,
) -> list[TwoModeCov]:
    """System block of the exact global evolution, dimensionless w.r.t. ``sc``.

    ``sc`` is the physical system; bare parameters include the counterterms.
    """
    if bath.N > cap:
        raise ResourceError(f"N={bath.N} exceeds the oracle cap {cap}")
    bare = bare_system(sc, bath)
    H = oracle_hamiltonian(bare, bath)
    dim = H.shape[0]
    Jm = np.zeros((dim, dim))
    idx = np.arange(0, dim, 2)
    Jm[idx, idx + 1] = 1.0
    Jm[idx + 1, idx] = -1.0
    k = np.sqrt(sc.mass * sc.omega)
    scale = np.diag([1.0 / k, k, 1.0 / k, k])
    sigma0 = np.zeros((dim, dim))
    sigma0[:4, :4] = scale @ init.sigma @ scale
    coth = 1.0 / np.tanh(bath.frequencies / (2.0 * T)) if T > 0 else np.ones(bath.N)
    q = 4 + 2 * np.arange(bath.N)
    sigma0[q, q] = coth / (2.0 * bath.masses * bath.frequencies)
    sigma0[q + 1, q + 1] = coth * bath.masses * bath.frequencies / 2.0
    t_out = output_times(t_max, dt_out)
    step = expm(Jm @ H * dt_out)
    rows = np.eye(dim)[:4]
    back = np.diag([k, 1.0 / k, k, 1.0 / k])
    out = []
    for _ in t_out:
        sys = rows @ sigma0 @ rows.T
        out.append(TwoModeCov(back @ sys @ back, check=False))
        rows = rows @ step
    return out
