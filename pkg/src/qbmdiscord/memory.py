"""Exact (all-order) master-equation coefficients for position coupling.

The ``+`` mode obeys the generalized Langevin equation

    m x'' + m wb^2 x - 2 int_0^t eta_+(t - s) x(s) ds = xi(t),

with ``wb^2 = Omega^2 - 2 * static_shift`` so that the zero-frequency response
is that of an oscillator at ``Omega``.  Its fundamental solutions ``u1``
(``u1(0) = 1``, ``u1'(0) = 0``) and ``u2`` (``u2(0) = 0``, ``u2'(0) = 1``)
fix the damping and frequency of the time-local master equation; the
noise-driven second moments fix the diffusion and anomalous coefficients.
Past a hand-off time the coefficients are frozen at asymptotic values taken
from the damped pole of the susceptibility and the fluctuation-dissipation
relation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import newton

from .environment import (
    PLUS_MODE_FACTOR,
    AsymptoticCoefficients,
    CoefficientSet,
    SpectralDensity,
    _check_grid,
    coth_factor,
    dissipation_kernel,
    frequency_grid,
)
from .errors import ConvergenceError, DomainError, QuadratureError
from .gaussian_core import CouplingKind

DEFAULT_STEP = 0.0025
DEFAULT_WINDOW = 40.0


@dataclass(frozen=True)
class FundamentalSolutions:
    t: NDArray[np.float64]
    u: NDArray[np.float64]  # shape (n, 2): columns u1, u2
    v: NDArray[np.float64]
    a: NDArray[np.float64]
    bare_omega2: float
    mass: float


def solve_fundamental(sd: SpectralDensity, bare_omega2: float, t_end: float, h: float = DEFAULT_STEP) -> FundamentalSolutions:
    """Velocity Verlet with a trapezoidal memory integral.

    ``eta(0) = 0`` makes the memory term explicit at every step.
    """
    n = int(np.ceil(t_end / h))
    t = np.arange(n + 1) * h
    K = (2.0 / sd.mass) * PLUS_MODE_FACTOR * dissipation_kernel(sd, t)
    u = np.zeros((n + 1, 2))
    v = np.zeros((n + 1, 2))
    a = np.zeros((n + 1, 2))
    u[0] = (1.0, 0.0)
    v[0] = (0.0, 1.0)
    a[0] = -bare_omega2 * u[0]
    for i in range(n):
        u[i + 1] = u[i] + h * v[i] + 0.5 * h * h * a[i]
        mem = h * (0.5 * K[i + 1] * u[0] + K[i:0:-1] @ u[1 : i + 1])
        a[i + 1] = -bare_omega2 * u[i + 1] + mem
        v[i + 1] = v[i] + 0.5 * h * (a[i] + a[i + 1])
    return FundamentalSolutions(t=t, u=u, v=v, a=a, bare_omega2=bare_omega2, mass=sd.mass)


def damping_and_frequency(fs: FundamentalSolutions) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``gamma(t)`` and ``Omega_+^2(t)`` with ``u'' + 2 gamma u' + Omega^2 u = 0`` for both solutions."""
    u1, u2 = fs.u[:, 0], fs.u[:, 1]
    v1, v2 = fs.v[:, 0], fs.v[:, 1]
    a1, a2 = fs.a[:, 0], fs.a[:, 1]
    det = v1 * u2 - u1 * v2
    two_gamma = (a2 * u1 - a1 * u2) / det
    omega2 = (a1 * v2 - a2 * v1) / det
    return 0.5 * two_gamma, omega2


def noise_moments(
    sd: SpectralDensity, T: float, fs: FundamentalSolutions, idx: NDArray[np.intp], n_freq: int = 3000, chunk: int = 48
) -> dict[str, NDArray[np.float64]]:
    """Noise-driven moments and their derivatives at ``fs.t[idx]``.

    ``U(w, t) = int_0^t u2 e^{i w s} ds`` and ``V`` the same with ``u2'``;
    ``X = (1/m^2) int J_+ coth |U|^2``, ``P = int J_+ coth |V|^2``,
    ``S = (1/m) int J_+ coth Re(U V*)``.
    """
    m, h = fs.mass, fs.t[1] - fs.t[0]
    w, wq = frequency_grid(sd.cutoff, n_freq)
    weight = PLUS_MODE_FACTOR * sd(w) * coth_factor(w, T) * wq
    keep = weight != 0
    w, weight = w[keep], weight[keep]
    u2, v2 = fs.u[:, 1], fs.v[:, 1]
    last = int(idx.max()) + 1
    tt = fs.t[:last]
    u2, v2 = u2[:last], v2[:last]
    out = {k: np.zeros(len(idx)) for k in ("X", "P", "S", "dP", "dS")}
    u2i, v2i = u2[idx], v2[idx]
    for lo in range(0, len(w), chunk):
        wc, wt = w[lo : lo + chunk], weight[lo : lo + chunk]
        E = np.exp(1j * np.outer(wc, tt))
        fu, fv = E * u2, E * v2
        U = h * (np.cumsum(fu, axis=1) - 0.5 * fu[:, :1] - 0.5 * fu)[:, idx]
        V = h * (np.cumsum(fv, axis=1) - 0.5 * fv[:, :1] - 0.5 * fv)[:, idx]
        Et = E[:, idx]
        Vc = np.conj(V)
        out["X"] += wt @ (np.abs(U) ** 2)
        out["P"] += wt @ (np.abs(V) ** 2)
        out["S"] += wt @ np.real(U * Vc)
        out["dP"] += wt @ (2.0 * np.real(v2i * Et * Vc))
        out["dS"] += wt @ np.real(u2i * Et * Vc + U * v2i * np.conj(Et))
    out["X"] /= m * m
    out["S"] /= m
    out["dS"] /= m
    return out


# --- equilibrium from the fluctuation-dissipation relation ---------------------------------


def _density_continued(sd: SpectralDensity, z: ArrayLike) -> NDArray[np.complex128]:
    """``J_+`` continued off the real axis (power law, principal branch)."""
    z = np.asarray(z, dtype=complex)
    return PLUS_MODE_FACTOR * (2.0 / np.pi) * sd.mass * sd.gamma0 * z * (z / sd.cutoff) ** (sd.n - 1.0)


def response_kernel(sd: SpectralDensity, z: ArrayLike, n_nodes: int = 400) -> NDArray:
    """``PV int_0^cutoff J_+(w) w / (w^2 - z^2) dw``, continued analytically in ``z``.

    Real for ``0 < z < cutoff``; complex input gives the continuation from the
    real axis, used to locate the damped pole.
    """
    z = np.atleast_1d(np.asarray(z))
    L = sd.cutoff
    log_term = np.log((L - z) / (L + z))
    if np.isrealobj(z):
        log_term = np.log(np.abs((L - z) / (L + z)))
    if sd.n == 1.0:
        pre = PLUS_MODE_FACTOR * 2.0 * sd.mass * sd.gamma0 / np.pi
        return pre * (L + 0.5 * z * log_term)
    x, wx = frequency_grid(L, n_nodes)
    F = PLUS_MODE_FACTOR * sd(x) * x
    Fz = _density_continued(sd, z) * z
    if np.isrealobj(z):
        Fz = Fz.real
    diff = x[None, :] ** 2 - z[:, None] ** 2
    close = np.abs(diff) < 1e-12
    quot = np.where(close, 0.0, (F[None, :] - Fz[:, None]) / np.where(close, 1.0, diff))
    return quot @ wx + Fz * log_term / (2.0 * z)


def response_pole(sd: SpectralDensity, bare_omega2: float, guess: complex) -> complex:
    """Root ``z = w_r - i g_r`` of ``m (wb^2 - z^2) - 2 eta^(z)`` below the real axis."""
    m = sd.mass

    def F(z):
        eta = response_kernel(sd, np.array([z]))[0] + 0.5j * np.pi * _density_continued(sd, z)
        return m * (bare_omega2 - z * z) - 2.0 * eta

    try:
        z = newton(F, guess, tol=1e-13, maxiter=200)
    except RuntimeError as exc:
        raise ConvergenceError(f"pole search failed: {exc}") from exc
    if not (z.real > 0 and z.imag < 0 and abs(F(z)) < 1e-8 * m * max(1.0, bare_omega2)):
        raise ConvergenceError(f"pole search converged to an unphysical root {z}")
    return complex(z)


def susceptibility_imag(sd: SpectralDensity, bare_omega2: float, omega: ArrayLike) -> NDArray[np.float64]:
    """``Im chi(w)`` of the ``+`` mode, ``chi^-1 = m (wb^2 - w^2) - 2 eta^(w)``."""
    w = np.asarray(omega, dtype=float)
    m = sd.mass
    re = m * (bare_omega2 - w * w) - 2.0 * response_kernel(sd, w)
    im = -np.pi * PLUS_MODE_FACTOR * sd(w)
    return -im / (re * re + im * im)


def equilibrium_moments(sd: SpectralDensity, T: float, bare_omega2: float, peak: float = 1.0) -> tuple[float, float]:
    """``(<x^2>, <p^2>)`` of the ``+`` mode in the coupled thermal state."""
    m = sd.mass

    def fx(w):
        return float(coth_factor(w, T) * susceptibility_imag(sd, bare_omega2, w)[0]) if w > 0 else 0.0

    def fp(w):
        return w * w * fx(w)

    pts = [p for p in (0.5 * peak, peak, 1.5 * peak) if 0 < p < sd.cutoff]
    opts = dict(points=pts, limit=800, epsabs=1e-13, epsrel=1e-10)
    x2, ex = quad(fx, 0.0, sd.cutoff, **opts)
    p2, ep = quad(fp, 0.0, sd.cutoff, **opts)
    if ex > 1e-7 * abs(x2) or ep > 1e-7 * abs(p2):
        raise QuadratureError("equilibrium moment quadrature did not converge")
    return x2 / np.pi, m * m * p2 / np.pi


# --- assembly ------------------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _cached_solution(sd: SpectralDensity, bare_omega2: float, t_end: float, h: float) -> FundamentalSolutions:
    return solve_fundamental(sd, bare_omega2, t_end, h)


def default_handoff(sd: SpectralDensity) -> float:
    """End of the exact window.

    With a hard cutoff the time-local coefficients pick up edge oscillations
    that grow relative to the decaying fundamental solutions; two damping
    times keep them well conditioned.
    """
    return float(min(DEFAULT_WINDOW, 2.0 / sd.gamma0)) if sd.gamma0 > 0 else DEFAULT_WINDOW


def exact_asymptotic(sd: SpectralDensity, T: float, omega: float = 1.0) -> tuple[AsymptoticCoefficients, tuple[float, float], float]:
    """Asymptotic coefficients, equilibrium ``(<x^2>, <p^2>)`` and bare ``wb^2``.

    Damping and frequency come from the pole ``w_r - i g_r`` of the
    susceptibility (``gamma = g_r``, ``Omega_+^2 = w_r^2 + g_r^2``); ``D`` and
    ``f`` are then fixed so that the master equation relaxes to the exact
    equilibrium moments.
    """
    m = sd.mass
    bare2 = omega**2 - PLUS_MODE_FACTOR * sd.static_shift()
    if sd.gamma0 == 0:
        phi = 0.5 * float(coth_factor(omega, T))
        return AsymptoticCoefficients(0.0, 0.0, 0.0, 0.0, omega), (phi / (m * omega), phi * m * omega), bare2
    z = _pole_cached(sd, bare2, omega)
    g_inf = -z.imag
    w2_inf = z.real**2 + z.imag**2
    x2, p2 = _equilibrium_cached(sd, T, bare2, z.real)
    asym = AsymptoticCoefficients(
        d_omega2=(w2_inf - bare2) / PLUS_MODE_FACTOR,
        gamma=g_inf,
        diffusion=2.0 * g_inf * p2,
        anomalous=p2 / m - m * w2_inf * x2,
        omega_plus=float(np.sqrt(w2_inf)),
    )
    return asym, (x2, p2), bare2


@lru_cache(maxsize=64)
def _pole_cached(sd: SpectralDensity, bare2: float, omega: float) -> complex:
    return response_pole(sd, bare2, complex(omega, -0.5 * np.pi * sd.gamma0 * PLUS_MODE_FACTOR / 2.0))


@lru_cache(maxsize=4096)
def _equilibrium_cached(sd: SpectralDensity, T: float, bare2: float, peak: float) -> tuple[float, float]:
    return equilibrium_moments(sd, T, bare2, peak=peak)


def exact_position_coefficients(
    sd: SpectralDensity,
    T: float,
    t: ArrayLike,
    omega: float = 1.0,
    h: float = DEFAULT_STEP,
    handoff: float | None = None,
    n_freq: int = 3000,
    stride: int = 4,
) -> CoefficientSet:
    """Coefficient traces on ``t``; values past ``handoff`` are the asymptotic ones."""
    t = _check_grid(t)
    window = default_handoff(sd) if handoff is None else handoff
    if h <= 0 or window <= 0:
        raise DomainError("step and hand-off time must be positive")
    m = sd.mass
    asym, eq, bare2 = exact_asymptotic(sd, T, omega)
    n_t = len(t)
    d_om = np.full(n_t, asym.d_omega2)
    gam = np.full(n_t, asym.gamma)
    dif = np.full(n_t, asym.diffusion)
    anom = np.full(n_t, asym.anomalous)
    w2 = np.full(n_t, asym.omega_plus**2)
    inside = t <= window
    if sd.gamma0 == 0:
        d_om[:] = gam[:] = dif[:] = anom[:] = 0.0
    elif inside.any():
        fs = _cached_solution(sd, bare2, window, h)
        g_fine, w2_fine = damping_and_frequency(fs)
        t_need = t[inside][-1]
        last = min(int(np.ceil(t_need / h)) + 2 * stride, len(fs.t) - 1)
        idx = np.arange(0, last + 1, stride)
        if idx[-1] != last:
            idx = np.append(idx, last)
        mom = noise_moments(sd, T, fs, idx, n_freq=n_freq)
        gi, w2i = g_fine[idx], w2_fine[idx]
        D_c = 0.5 * (mom["dP"] + 2.0 * m * w2i * mom["S"] + 4.0 * gi * mom["P"])
        f_c = mom["P"] / m - m * w2i * mom["X"] - 2.0 * gi * mom["S"] - mom["dS"]
        tc = fs.t[idx]
        ts = t[inside]
        gam[inside] = np.interp(ts, fs.t, g_fine)
        w2[inside] = np.interp(ts, fs.t, w2_fine)
        d_om[inside] = (w2[inside] - bare2) / PLUS_MODE_FACTOR
        dif[inside] = CubicSpline(tc, D_c)(ts)
        anom[inside] = CubicSpline(tc, f_c)(ts)
    return CoefficientSet(
        kind=CouplingKind.POSITION, t=t, d_omega2=d_om, gamma=gam, diffusion=dif, anomalous=anom,
        omega_plus2=w2, asymptotic=asym, temperature=T, mass=m, omega=omega,
        bare_omega_plus2=bare2, method="exact", equilibrium=eq,
    )
