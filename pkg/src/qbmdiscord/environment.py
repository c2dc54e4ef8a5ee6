"""Bosonic environment: spectral densities, kernels and master-equation coefficients.

Conventions
-----------
``SpectralDensity`` describes the bath seen by *each* oscillator through
``(x1 + x2) sum_k c_k q_k``.  The ``+`` normal mode therefore couples with
``sqrt(2) c_k`` and sees ``J_plus = 2 J``.  Reported frequency shifts
``d_omega2`` are per oscillator, so the ``+`` mode frequency moves by
``2 * d_omega2`` and the counterterm ``c12 = -d_omega2`` keeps both normal
modes resonant.

Symmetric coupling is handled in dimensionless ``+`` mode quadratures
``X = sqrt(M Omega) x``, ``P = p / sqrt(M Omega)``; the coupling is then
``sum_k g_k (X Q_k + P P_k)`` with ``sum_k g_k^2 delta(w - w_k) = 4 J(w) / (M Omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.special import roots_legendre

from .errors import ConvergenceError, DomainError, InstabilityError, QuadratureError
from .gaussian_core import CouplingKind

PLUS_MODE_FACTOR = 2.0
KERNEL_RTOL = 1e-8


@dataclass(frozen=True)
class SpectralDensity:
    """``J(w) = (2/pi) m gamma0 w (w / cutoff)^(n-1)`` for ``w <= cutoff``, else 0."""

    gamma0: float
    cutoff: float = 20.0
    n: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma0 < 0:
            raise DomainError("gamma0 must be >= 0")
        if self.cutoff <= 0:
            raise DomainError("cutoff must be > 0")
        if self.n <= 0:
            raise DomainError("Ohmicity exponent n must be > 0")
        if self.mass <= 0:
            raise DomainError("mass must be > 0")

    def __call__(self, omega: ArrayLike) -> NDArray[np.float64]:
        w = np.asarray(omega, dtype=float)
        inside = (w >= 0) & (w <= self.cutoff)
        safe = np.where(inside & (w > 0), w, 1.0)
        val = (2.0 / np.pi) * self.mass * self.gamma0 * safe * (safe / self.cutoff) ** (self.n - 1.0)
        return np.where(inside & (w > 0), val, 0.0)

    def integral(self) -> float:
        """``int_0^cutoff J(w) dw``."""
        return (2.0 / np.pi) * self.mass * self.gamma0 * self.cutoff**2 / (self.n + 1.0)

    def static_shift(self) -> float:
        """``-(2/m) int J(w)/w dw = -(4/pi) gamma0 cutoff / n`` (per oscillator)."""
        return -(4.0 / np.pi) * self.gamma0 * self.cutoff / self.n


def spectral_density(sd: SpectralDensity, omega: ArrayLike) -> NDArray[np.float64]:
    return sd(omega)


def coth_factor(omega: ArrayLike, T: float) -> NDArray[np.float64]:
    """``coth(w / 2T)``; identically 1 at ``T = 0``."""
    w = np.asarray(omega, dtype=float)
    if T <= 0:
        return np.ones_like(w)
    x = np.maximum(w, 1e-300) / (2.0 * T)
    return np.where(x > 40.0, 1.0, 1.0 / np.tanh(np.minimum(x, 40.0)))


# --- kernels -------------------------------------------------------------------------


def _kernel_quad(sd: SpectralDensity, s: float, T: float, weight: str) -> float:
    def integrand(w):
        return float(sd(w) * coth_factor(w, T)) if w > 0 else 0.0

    scale = sd.integral() * max(1.0, sd.cutoff)
    if s == 0.0:
        if weight == "sin":
            return 0.0
        val, err = quad(integrand, 0.0, sd.cutoff, epsabs=1e-14 * scale, epsrel=KERNEL_RTOL, limit=400)
    else:
        val, err = quad(integrand, 0.0, sd.cutoff, weight=weight, wvar=s,
                        epsabs=1e-14 * scale, epsrel=KERNEL_RTOL, limit=400)
    if err > max(KERNEL_RTOL * abs(val), 1e-12 * scale):
        raise QuadratureError(f"kernel quadrature at s={s} reached only {err:.2e}")
    return val


def dissipation_kernel(sd: SpectralDensity, s: ArrayLike) -> NDArray[np.float64]:
    """``eta(s) = int_0^cutoff J(w) sin(w s) dw`` (per oscillator)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise DomainError("kernel needs s >= 0")
    if sd.gamma0 == 0:
        out = np.zeros_like(s_arr)
    elif sd.n == 1.0:
        out = _eta_ohmic(sd, s_arr)
    else:
        out = np.array([_kernel_quad(sd, float(x), 0.0, "sin") for x in s_arr])
    return out if np.ndim(s) else out[0]


def noise_kernel(sd: SpectralDensity, s: ArrayLike, T: float) -> NDArray[np.float64]:
    """``nu(s) = int_0^cutoff J(w) coth(w/2T) cos(w s) dw`` (per oscillator)."""
    if T < 0:
        raise DomainError("temperature must be >= 0")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise DomainError("kernel needs s >= 0")
    if sd.gamma0 == 0:
        out = np.zeros_like(s_arr)
    elif sd.n == 1.0 and T == 0:
        out = _nu_ohmic_zero_t(sd, s_arr)
    else:
        out = np.array([_kernel_quad(sd, float(x), T, "cos") for x in s_arr])
    return out if np.ndim(s) else out[0]


def _eta_ohmic(sd: SpectralDensity, s: NDArray[np.float64]) -> NDArray[np.float64]:
    pre = 2.0 * sd.mass * sd.gamma0 / np.pi
    L = sd.cutoff
    x = L * s
    small = x < 1e-2
    ss = np.where(small, 1.0, s)
    exact = np.sin(L * ss) / ss**2 - L * np.cos(L * ss) / ss
    series = L**3 * s * (1.0 / 3.0 - x**2 / 30.0 + x**4 / 840.0)
    return pre * np.where(small, series, exact)


def _nu_ohmic_zero_t(sd: SpectralDensity, s: NDArray[np.float64]) -> NDArray[np.float64]:
    pre = 2.0 * sd.mass * sd.gamma0 / np.pi
    L = sd.cutoff
    x = L * s
    small = x < 1e-2
    ss = np.where(small, 1.0, s)
    exact = (np.cos(L * ss) - 1.0) / ss**2 + L * np.sin(L * ss) / ss
    series = L**2 * (0.5 - x**2 / 8.0 + x**4 / 144.0)
    return pre * np.where(small, series, exact)


# --- frequency quadrature ---------------------------------------------------------------


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    y, w = roots_legendre(n)
    return 0.5 * (y + 1.0), 0.5 * w


def frequency_grid(cutoff: float, n_nodes: int = 3000) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes and weights on ``(0, cutoff)`` after ``w = cutoff * y^2``.

    The substitution removes the ``w^(n-1)`` endpoint behaviour of ``J coth``.
    """
    y, wy = _legendre(n_nodes)
    return cutoff * y * y, wy * 2.0 * cutoff * y


def _pv_weighted(func, a: float, b: float, pole: float) -> float:
    """``PV int_a^b func(w) / (w - pole) dw``."""
    if not a < pole < b:
        val, _ = quad(lambda w: func(w) / (w - pole), a, b, limit=400, epsrel=1e-11)
        return val
    val, err = quad(func, a, b, weight="cauchy", wvar=pole, limit=400, epsrel=1e-11)
    if not np.isfinite(val):
        raise QuadratureError("principal value integral failed")
    return val


# --- systems and renormalisation ------------------------------------------------------------


@dataclass(frozen=True)
class SystemConfig:
    """Parameters of the two oscillators.

    ``mass``/``omega`` are the bare local values, ``c12``/``c12_tilde`` the
    bare position and momentum couplings.
    """

    mass: float = 1.0
    omega: float = 1.0
    c12: float = 0.0
    c12_tilde: float = 0.0
    coupling: CouplingKind = CouplingKind.POSITION

    def __post_init__(self) -> None:
        object.__setattr__(self, "coupling", CouplingKind(self.coupling))
        if self.mass <= 0 or self.omega <= 0:
            raise DomainError("mass and omega must be positive")
        wp2, wm2 = self.normal_mode_omega2()
        if wp2 <= 0 or wm2 <= 0:
            raise InstabilityError(f"normal-mode frequencies squared ({wp2:.3g}, {wm2:.3g}) not positive")

    def normal_mode_masses(self) -> tuple[float, float]:
        w2 = self.omega**2
        return (self.mass / (1.0 + self.c12_tilde / w2), self.mass / (1.0 - self.c12_tilde / w2))

    def normal_mode_omega2(self) -> tuple[float, float]:
        w2 = self.omega**2
        plus = w2 * (1.0 + self.c12 / w2) * (1.0 + self.c12_tilde / w2)
        minus = w2 * (1.0 - self.c12 / w2) * (1.0 - self.c12_tilde / w2)
        return plus, minus


def renormalized_parameters(sc: SystemConfig, d_omega2: float) -> tuple[float, float, float, float]:
    """Map bare parameters to ``(M, Omega^2, C12, C12_tilde)`` given a shift.

    Position coupling shifts the local frequency by ``d_omega2`` and the
    coupling by ``d_omega2``; symmetric coupling follows the dressed map with
    ``k = 1 + d_omega2 / (2 omega^2)``.
    """
    if sc.coupling is CouplingKind.POSITION:
        return sc.mass, sc.omega**2 + d_omega2, sc.c12 + d_omega2, sc.c12_tilde
    k = 1.0 + d_omega2 / (2.0 * sc.omega**2)
    return (
        sc.mass / k,
        sc.omega**2 * k * k,
        (sc.c12 + d_omega2 / 2.0) * k,
        (sc.c12_tilde + d_omega2 / 2.0) * k,
    )


def renormalize(physical: SystemConfig, d_omega2_inf: float) -> SystemConfig:
    """Bare parameters whose renormalised values are ``physical`` with zero couplings.

    ``physical.mass``/``physical.omega`` are the requested ``M``/``Omega``; its
    couplings are ignored (taken as zero after renormalisation).
    """
    M, Om = physical.mass, physical.omega
    d = d_omega2_inf
    if d == 0.0:
        return replace(physical, c12=0.0, c12_tilde=0.0)
    if physical.coupling is CouplingKind.POSITION:
        if Om**2 - 2.0 * d <= 0 or Om**2 - d <= 0:
            raise InstabilityError("frequency shift destabilises the + mode")
        return SystemConfig(mass=M, omega=float(np.sqrt(Om**2 - d)), c12=-d, c12_tilde=0.0,
                            coupling=CouplingKind.POSITION)
    disc = Om**2 - 2.0 * d
    if disc <= 0:
        raise InstabilityError("no bare frequency reproduces the requested Omega")
    w = 0.5 * (Om + np.sqrt(disc))
    k = 1.0 + d / (2.0 * w * w)
    if k <= 0:
        raise InstabilityError("renormalised mass would be negative")
    return SystemConfig(mass=M * k, omega=float(w), c12=-d / 2.0, c12_tilde=-d / 2.0,
                        coupling=CouplingKind.SYMMETRIC)


# --- coefficient sets ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticCoefficients:
    d_omega2: float
    gamma: float
    diffusion: float
    anomalous: float
    omega_plus: float


@dataclass(frozen=True)
class CoefficientSet:
    """Time-dependent coefficients of the ``+`` mode master equation.

    Position coupling (dimensionful, mass ``mass``): ``omega_plus2`` is the
    renormalised ``+`` frequency squared (it may dip below zero during the
    initial slip), ``gamma``/``diffusion``/``anomalous``
    are ``gamma(t)``, ``D(t)``, ``f(t)``.

    Symmetric coupling (dimensionless quadratures): ``omega_plus2`` is the
    square of the renormalised ``+`` frequency, ``gamma``/``diffusion`` are the symmetric
    damping and diffusion, ``anomalous`` is zero.

    Beyond ``t[-1]`` the asymptotic values apply.
    """

    kind: CouplingKind
    t: NDArray[np.float64]
    d_omega2: NDArray[np.float64]
    gamma: NDArray[np.float64]
    diffusion: NDArray[np.float64]
    anomalous: NDArray[np.float64]
    omega_plus2: NDArray[np.float64]
    asymptotic: AsymptoticCoefficients
    temperature: float
    mass: float = 1.0
    omega: float = 1.0
    bare_omega_plus2: float = 1.0
    method: str = "second_order"
    equilibrium: tuple[float, float] | None = field(default=None)

    def csv_columns(self) -> tuple[list[str], list[NDArray[np.float64]]]:
        if self.kind is CouplingKind.POSITION:
            return ["t", "dOmega2", "gamma", "D", "f"], [self.t, self.d_omega2, self.gamma, self.diffusion, self.anomalous]
        return ["t", "dOmega2_t", "gamma_t", "D_t"], [self.t, self.d_omega2, self.gamma, self.diffusion]

    def relative_drift(self, fraction: float = 0.1) -> float:
        """Largest relative change of ``gamma`` and ``omega_plus2`` over the final ``fraction`` of the grid."""
        k = max(1, int(len(self.t) * (1.0 - fraction)))
        drift = 0.0
        for arr in (self.gamma, self.omega_plus2):
            tail = arr[k:]
            scale = max(abs(arr[-1]), 1e-300)
            drift = max(drift, float((tail.max() - tail.min()) / scale))
        return drift


def _sinc_t(x: NDArray[np.float64], t: float) -> NDArray[np.float64]:
    """``sin(x t) / x`` with the limit ``t`` at ``x = 0``."""
    return t * np.sinc(x * t / np.pi)


def _one_minus_cos_over(x: NDArray[np.float64], t: float) -> NDArray[np.float64]:
    """``(1 - cos(x t)) / x``, zero at ``x = 0``."""
    half = 0.5 * x * t
    return t * np.sin(half) * np.sinc(half / np.pi)


def _check_grid(t: ArrayLike) -> NDArray[np.float64]:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0) or t[0] < 0:
        raise DomainError("time grid must be increasing, non-negative, with >= 2 points")
    return t


def position_second_order(
    sd: SpectralDensity, T: float, t: ArrayLike, omega: float = 1.0, n_nodes: int = 3000
) -> CoefficientSet:
    """Second-order coefficients for position coupling with kernels at ``omega``.

    ``d_omega2(t) = -(2/m) int_0^t eta(s) cos(omega s) ds`` (per oscillator),
    ``gamma(t) = 1/(m omega) int eta_+ sin``, ``D(t) = int nu_+ cos`` and
    ``f(t) = -1/(m omega) int nu_+ sin`` with ``eta_+ = 2 eta``, ``nu_+ = 2 nu``.
    The time integrals are done analytically inside a frequency quadrature.
    """
    t = _check_grid(t)
    m, W = sd.mass, omega
    w, wq = frequency_grid(sd.cutoff, n_nodes)
    J = sd(w) * wq
    Jp = PLUS_MODE_FACTOR * J
    Jc = Jp * coth_factor(w, T)
    out = {k: np.empty_like(t) for k in ("d", "g", "D", "f")}
    for i, ti in enumerate(t):
        sin_sin = 0.5 * (_sinc_t(w - W, ti) - _sinc_t(w + W, ti))
        sin_cos = 0.5 * (_one_minus_cos_over(w + W, ti) + _one_minus_cos_over(w - W, ti))
        cos_cos = 0.5 * (_sinc_t(w - W, ti) + _sinc_t(w + W, ti))
        cos_sin = 0.5 * (_one_minus_cos_over(W + w, ti) + _one_minus_cos_over(W - w, ti))
        out["d"][i] = -(2.0 / m) * np.dot(J, sin_cos)
        out["g"][i] = np.dot(Jp, sin_sin) / (m * W)
        out["D"][i] = np.dot(Jc, cos_cos)
        out["f"][i] = -np.dot(Jc, cos_sin) / (m * W)
    asym = position_second_order_asymptotic(sd, T, omega)
    bare2 = omega**2 - PLUS_MODE_FACTOR * asym.d_omega2
    return CoefficientSet(
        kind=CouplingKind.POSITION, t=t, d_omega2=out["d"], gamma=out["g"], diffusion=out["D"],
        anomalous=out["f"], omega_plus2=bare2 + PLUS_MODE_FACTOR * out["d"], asymptotic=asym,
        temperature=T, mass=m, omega=omega, bare_omega_plus2=bare2, method="second_order",
    )


def position_second_order_asymptotic(sd: SpectralDensity, T: float, omega: float = 1.0) -> AsymptoticCoefficients:
    m, W, L = sd.mass, omega, sd.cutoff
    if sd.gamma0 == 0:
        return AsymptoticCoefficients(0.0, 0.0, 0.0, 0.0, W)
    Jw = float(sd(W)) if W < L else 0.0
    d = -(2.0 / m) * _pv_weighted(lambda x: sd(x) * x / (x + W), 0.0, L, W)
    gamma = PLUS_MODE_FACTOR * np.pi * Jw / (2.0 * m * W)
    diff = PLUS_MODE_FACTOR * 0.5 * np.pi * Jw * float(coth_factor(W, T))
    f = (PLUS_MODE_FACTOR / m) * _pv_weighted(lambda x: sd(x) * coth_factor(x, T) / (x + W), 0.0, L, W)
    return AsymptoticCoefficients(d_omega2=d, gamma=gamma, diffusion=diff, anomalous=f, omega_plus=W)


def symmetric_coupling_density(sd: SpectralDensity, omega: float, w: ArrayLike) -> NDArray[np.float64]:
    """``G(w) = 4 J(w) / (M Omega)``: rotating-wave coupling density of the ``+`` mode."""
    return 2.0 * PLUS_MODE_FACTOR * sd(w) / (sd.mass * omega)


def symmetric_second_order(
    sd: SpectralDensity, T: float, t: ArrayLike, omega: float = 1.0, n_nodes: int = 3000
) -> CoefficientSet:
    """Second-order coefficients for symmetric (position + momentum) coupling.

    ``gamma~(t) = 1/2 int_0^t ds int G(w) cos((w - Omega) s) dw``,
    ``D~(t)`` the same with ``coth(w/2T)``, frequency shift
    ``dw(t) = -int_0^t ds int G(w) sin((w - Omega) s) dw``.
    ``d_omega2`` reports ``omega_bare * dw`` so that the bare parameters follow
    ``renormalize``.
    """
    t = _check_grid(t)
    W = omega
    w, wq = frequency_grid(sd.cutoff, n_nodes)
    G = symmetric_coupling_density(sd, W, w) * wq
    Gc = G * coth_factor(w, T)
    gam, dif, dw = (np.empty_like(t) for _ in range(3))
    for i, ti in enumerate(t):
        sc = _sinc_t(w - W, ti)
        gam[i] = 0.5 * np.dot(G, sc)
        dif[i] = 0.5 * np.dot(Gc, sc)
        dw[i] = -np.dot(G, _one_minus_cos_over(w - W, ti))
    asym = symmetric_second_order_asymptotic(sd, T, omega)
    dw_inf = _symmetric_shift(sd, W)
    w_bare_local = W - 0.5 * dw_inf
    bare_plus = W - dw_inf
    return CoefficientSet(
        kind=CouplingKind.SYMMETRIC, t=t, d_omega2=w_bare_local * dw, gamma=gam, diffusion=dif,
        anomalous=np.zeros_like(t), omega_plus2=(bare_plus + dw) ** 2, asymptotic=asym, temperature=T,
        mass=sd.mass, omega=W, bare_omega_plus2=bare_plus**2, method="second_order",
    )


def _symmetric_shift(sd: SpectralDensity, omega: float) -> float:
    if sd.gamma0 == 0:
        return 0.0
    return -_pv_weighted(lambda x: symmetric_coupling_density(sd, omega, x), 0.0, sd.cutoff, omega)


def symmetric_second_order_asymptotic(sd: SpectralDensity, T: float, omega: float = 1.0) -> AsymptoticCoefficients:
    W = omega
    dw = _symmetric_shift(sd, W)
    G = float(symmetric_coupling_density(sd, W, W)) if W < sd.cutoff else 0.0
    gamma = 0.5 * np.pi * G
    diff = gamma * float(coth_factor(W, T))
    return AsymptoticCoefficients(d_omega2=(W - 0.5 * dw) * dw, gamma=gamma, diffusion=diff,
                                  anomalous=0.0, omega_plus=W)


def coefficients_position(
    sd: SpectralDensity, T: float, t: ArrayLike, omega: float = 1.0, method: str = "exact", **kw
) -> CoefficientSet:
    """Coefficients for position coupling.

    ``method="exact"`` extracts them from the fundamental solutions of the
    ``+`` mode Langevin equation (non-perturbative); ``"second_order"`` uses the
    kernel integrals.
    """
    if T < 0:
        raise DomainError("temperature must be >= 0")
    if method == "second_order":
        return position_second_order(sd, T, t, omega, **kw)
    if method == "exact":
        from .memory import exact_position_coefficients

        return exact_position_coefficients(sd, T, t, omega, **kw)
    raise DomainError(f"unknown method {method!r}")


def coefficients_symmetric(sd: SpectralDensity, T: float, t: ArrayLike, omega: float = 1.0, **kw) -> CoefficientSet:
    if T < 0:
        raise DomainError("temperature must be >= 0")
    return symmetric_second_order(sd, T, t, omega, **kw)


def asymptotic_dispersions(
    coeffs: CoefficientSet, check_settled: bool = True, drift_tol: float = 1e-2
) -> tuple[float, float]:
    """Asymptotic ``(dx_+, dp_+)`` in physical units.

    Position coupling: ``m W dx = sqrt(D/2gamma - m f)``, ``dp = sqrt(D/2gamma)``.
    Symmetric coupling: ``M Omega dx = dp = sqrt(M Omega D~/2gamma~)``.
    Raises ``ConvergenceError`` when the time trace is still drifting.
    """
    if check_settled and len(coeffs.t) > 2 and coeffs.asymptotic.gamma > 0:
        drift = coeffs.relative_drift()
        if drift > drift_tol:
            raise ConvergenceError(f"coefficients still drifting ({drift:.2e}) at t={coeffs.t[-1]}")
    a = coeffs.asymptotic
    m = coeffs.mass
    if coeffs.equilibrium is not None:
        x2, p2 = coeffs.equilibrium
        return float(np.sqrt(x2)), float(np.sqrt(p2))
    if a.gamma <= 0:
        raise ConvergenceError("no damping: the + mode has no asymptotic state")
    if coeffs.kind is CouplingKind.POSITION:
        p2 = a.diffusion / (2.0 * a.gamma)
        x_term = p2 - m * a.anomalous
        if x_term <= 0:
            raise ConvergenceError("asymptotic position variance is not positive")
        return float(np.sqrt(x_term) / (m * a.omega_plus)), float(np.sqrt(p2))
    v = a.diffusion / (2.0 * a.gamma)
    mw = m * coeffs.omega
    return float(np.sqrt(v / mw)), float(np.sqrt(v * mw))


# --- discretised bath -------------------------------------------------------------------------------


@dataclass(frozen=True)
class BathDiscretization:
    """Midpoint discretisation of ``J`` on ``(0, cutoff]`` with unit masses."""

    frequencies: NDArray[np.float64]
    couplings: NDArray[np.float64]
    masses: NDArray[np.float64]
    spacing: float

    @property
    def N(self) -> int:
        return len(self.frequencies)

    def integrated_density(self) -> float:
        """Riemann sum ``sum_k c_k^2 / (2 m_k w_k)``; approximates ``int J``."""
        return float(np.sum(self.couplings**2 / (2.0 * self.masses * self.frequencies)))


def discretize_bath(sd: SpectralDensity, N: int) -> BathDiscretization:
    if N < 2:
        raise DomainError("need at least two bath modes")
    dw = sd.cutoff / N
    w = (np.arange(N) + 0.5) * dw
    masses = np.ones(N)
    c = np.sqrt(2.0 * masses * w * sd(w) * dw)
    return BathDiscretization(frequencies=w, couplings=c, masses=masses, spacing=dw)
