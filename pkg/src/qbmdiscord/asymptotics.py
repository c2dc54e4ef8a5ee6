"""Asymptotic two-mode state, its entanglement and discord phases.

At long times the ``+`` mode reaches a stationary state with purity
parameter ``phi_plus`` and squeezing ``r_crit`` while the ``-`` mode keeps
rotating with its initial ``phi_minus`` and squeezing ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from .correlations import Branch, discriminant, gaussian_discord
from .environment import (
    SpectralDensity,
    SystemConfig,
    asymptotic_dispersions,
    coefficients_position,
    coefficients_symmetric,
)
from .errors import DomainError, RootNotBracketed
from .gaussian_core import PHYS_TOL, CouplingKind, LocalInvariants, entropy_f, thermal_phi

PERIOD_SAMPLES = 257
TIE_TOL = 1e-9


class EntanglementPhase(str, Enum):
    SD = "SD"
    NSD = "NSD"
    SDR = "SDR"


class DiscordMeasurementPhase(str, Enum):
    HM = "HM"
    HT = "HT"
    TIME_DEPENDENT = "TD"


@dataclass(frozen=True)
class AsymptoticParams:
    phi_plus: float
    phi_minus: float
    r: float
    r_crit: float
    omega_minus: float = 1.0

    def __post_init__(self) -> None:
        if self.phi_plus < 0.5 - PHYS_TOL or self.phi_minus < 0.5 - PHYS_TOL:
            raise DomainError("phi_plus and phi_minus must be >= 1/2")
        if self.omega_minus <= 0:
            raise DomainError("omega_minus must be positive")

    @property
    def period(self) -> float:
        return np.pi / self.omega_minus

    def period_grid(self, n: int = PERIOD_SAMPLES) -> NDArray[np.float64]:
        return np.linspace(0.0, self.period, n)


def h_function(t, r: float, r_crit: float, omega_minus: float = 1.0):
    c2 = np.cos(omega_minus * np.asarray(t)) ** 2
    return c2 * np.cosh(2.0 * (r - r_crit)) + (1.0 - c2) * np.cosh(2.0 * (r + r_crit))


def asymptotic_invariants(p: AsymptoticParams, t: float) -> LocalInvariants:
    h = float(h_function(t, p.r, p.r_crit, p.omega_minus))
    pp, pm = p.phi_plus, p.phi_minus
    return LocalInvariants(
        A=(pp * pp + pm * pm + 2.0 * pp * pm * h) / 4.0,
        B=(pp * pp + pm * pm + 2.0 * pp * pm * h) / 4.0,
        C=(pp * pp + pm * pm - 2.0 * pp * pm * h) / 4.0,
        D=(pp * pm) ** 2,
    )


def s_crit(p: AsymptoticParams) -> float:
    return 0.5 * np.log(4.0 * p.phi_plus * p.phi_minus)


def entanglement_function(p: AsymptoticParams, t):
    """``E(t) = arccosh(h)/2 - S_crit``; ``E_N = max(0, E)``."""
    return 0.5 * np.arccosh(h_function(t, p.r, p.r_crit, p.omega_minus)) - s_crit(p)


def asymptotic_EN(p: AsymptoticParams, t: float) -> float:
    return float(max(0.0, entanglement_function(p, t)))


@dataclass(frozen=True)
class ENDecomposition:
    E_tilde: float
    delta_EN: float
    S_crit: float

    @property
    def upper(self) -> float:
        return max(0.0, self.E_tilde + self.delta_EN)

    @property
    def lower(self) -> float:
        return max(0.0, self.E_tilde - self.delta_EN)


def en_decomposition(p: AsymptoticParams) -> ENDecomposition:
    a, b = abs(p.r), abs(p.r_crit)
    sc = s_crit(p)
    return ENDecomposition(E_tilde=max(a, b) - sc, delta_EN=min(a, b), S_crit=sc)


def entanglement_phase(p: AsymptoticParams, n: int = PERIOD_SAMPLES) -> EntanglementPhase:
    E = entanglement_function(p, p.period_grid(n))
    if E.max() <= TIE_TOL:
        return EntanglementPhase.SD
    if E.min() > 0:
        return EntanglementPhase.NSD
    return EntanglementPhase.SDR


def discriminant_trace(p: AsymptoticParams, t) -> NDArray[np.float64]:
    return np.array([discriminant(asymptotic_invariants(p, float(x))) for x in np.atleast_1d(t)])


def discord_phase(p: AsymptoticParams, n: int = PERIOD_SAMPLES) -> DiscordMeasurementPhase:
    g = discriminant_trace(p, p.period_grid(n))
    if np.all(g > 0):
        return DiscordMeasurementPhase.HM
    if np.all(g <= 0):
        return DiscordMeasurementPhase.HT
    return DiscordMeasurementPhase.TIME_DEPENDENT


def discord_phase_boundaries(p: AsymptoticParams, n: int = PERIOD_SAMPLES, tol: float = 1e-6) -> list[float]:
    """Times within one period where ``g`` changes sign, located by bisection."""
    t = p.period_grid(n)
    g = discriminant_trace(p, t)
    roots = []
    for i in np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]:
        f = lambda x: discriminant(asymptotic_invariants(p, x))  # noqa: E731
        roots.append(brentq(f, t[i], t[i + 1], xtol=tol * p.period))
    return roots


def h_crit(phi_plus: float) -> float:
    """``h`` at which homodyne and heterodyne give the same conditional determinant (``phi_- = 1/2``, ``r_crit = 0``)."""
    if phi_plus < 0.5 - PHYS_TOL:
        raise DomainError("phi_plus must be >= 1/2")
    p = phi_plus
    # h >= 1 always; at phi_+ = 1/2 the formula gives 1 up to roundoff
    return max(1.0, -p / 3.0 + np.sqrt(16.0 * p * p + 56.0 + p**-2) / 6.0 - 1.0 / (12.0 * p))


def effective_T0(phi_minus: float, omega: float = 1.0) -> float:
    """Temperature at which a thermal state of frequency ``omega`` has ``phi = phi_minus``."""
    if phi_minus < 0.5 - PHYS_TOL:
        raise DomainError("phi_minus must be >= 1/2")
    if phi_minus <= 0.5:
        return 0.0
    return omega / (2.0 * np.arctanh(0.5 / phi_minus))


def t_prime(r: float, omega: float = 1.0) -> float:
    """Temperature solving ``cosh(2r) = h_crit(phi_+(T))`` with ``phi_+ = coth(omega/2T)/2``."""
    if r < 0:
        raise RootNotBracketed("r below the zero-temperature boundary (r = 0)")
    target = np.cosh(2.0 * r)
    if target == 1.0:
        return 0.0
    hi = 1.0
    while h_crit(hi) < target:
        hi *= 2.0
        if hi > 1e300:
            raise RootNotBracketed("no phi_plus reaches the requested h")
    phi = brentq(lambda x: h_crit(x) / target - 1.0, 0.5, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return effective_T0(phi, omega)


def d_sup(phi_plus: float, phi_minus: float, entropy=entropy_f) -> float:
    """Discord of the high-temperature asymptotic state."""
    return entropy(phi_plus / 2.0) - entropy(phi_plus) - entropy(phi_minus) + entropy(2.0 * (phi_minus + 0.25))


def d_sup_limit(phi_minus: float) -> float:
    """``phi_plus -> infinity`` limit of ``d_sup``."""
    return -np.log(2.0) - entropy_f(phi_minus) + entropy_f(2.0 * (phi_minus + 0.25))


def _discord_at(p: AsymptoticParams, t: float) -> float:
    return gaussian_discord(asymptotic_invariants(p, t)).discord


def discord_period_stats(p: AsymptoticParams, n: int = PERIOD_SAMPLES) -> tuple[float, float]:
    """Mean and peak-to-peak of the discord over one period."""
    t = p.period_grid(n)
    d = np.array([_discord_at(p, float(x)) for x in t])
    mean = float(np.mean(d[:-1]))
    if np.ptp(d) < 1e-14:
        return mean, 0.0
    hi = _refine_extremum(p, t, d, sign=-1.0)
    lo = _refine_extremum(p, t, d, sign=1.0)
    return mean, float(hi - lo)


def _refine_extremum(p: AsymptoticParams, t: NDArray[np.float64], d: NDArray[np.float64], sign: float) -> float:
    """Golden-section refinement around the best sample; ``sign=-1`` finds a maximum."""
    i = int(np.argmin(sign * d))
    best = float(d[i])
    if 0 < i < len(t) - 1:
        f = lambda x: sign * _discord_at(p, x)  # noqa: E731
        try:
            res = minimize_scalar(f, bracket=(t[i - 1], t[i], t[i + 1]), method="golden", options={"xtol": 1e-8})
            val = sign * res.fun
            best = max(best, val) if sign < 0 else min(best, val)
        except ValueError:
            pass
    return best


# --- from the environment to asymptotic parameters -----------------------------------------------


def plus_mode_equilibrium(sc: SystemConfig, sd: SpectralDensity, T: float, method: str = "exact") -> tuple[float, float]:
    """``(phi_plus, r_crit)`` of the stationary ``+`` mode for physical ``(M, Omega)``."""
    if T < 0:
        raise DomainError("temperature must be >= 0")
    mw = sc.mass * sc.omega
    if sd.gamma0 == 0:
        return thermal_phi(sc.omega, T), 0.0
    if sc.coupling is CouplingKind.SYMMETRIC:
        c = coefficients_symmetric(sd, T, np.array([0.0, 1e-3]), sc.omega)
        dx, dp = asymptotic_dispersions(c, check_settled=False)
    elif method == "exact":
        from .memory import exact_asymptotic

        _, (x2, p2), _ = exact_asymptotic(sd, T, sc.omega)
        dx, dp = float(np.sqrt(x2)), float(np.sqrt(p2))
    else:
        c = coefficients_position(sd, T, np.array([0.0, 1e-3]), sc.omega, method=method)
        dx, dp = asymptotic_dispersions(c, check_settled=False)
    return float(dx * dp), float(0.5 * np.log(mw * dx / dp))


def asymptotic_params(
    sc: SystemConfig, sd: SpectralDensity, T: float, r: float, phi_minus: float = 0.5, method: str = "exact"
) -> AsymptoticParams:
    phi_plus, r_crit = plus_mode_equilibrium(sc, sd, T, method)
    return AsymptoticParams(phi_plus=phi_plus, phi_minus=phi_minus, r=r, r_crit=r_crit, omega_minus=sc.omega)


@dataclass(frozen=True)
class AsymptoticSummary:
    params: AsymptoticParams
    ent_phase: EntanglementPhase
    disc_phase: DiscordMeasurementPhase
    EN_mean: float
    EN_max: float
    EN_min: float
    discord_mean: float
    discord_pp: float

    def row(self) -> dict[str, object]:
        return {
            "ent_phase": self.ent_phase.value,
            "disc_phase": self.disc_phase.value,
            "EN_mean": self.EN_mean,
            "EN_max": self.EN_max,
            "EN_min": self.EN_min,
            "discord_mean": self.discord_mean,
            "discord_pp": self.discord_pp,
        }


def summarize(p: AsymptoticParams) -> AsymptoticSummary:
    t = p.period_grid()
    en = np.maximum(entanglement_function(p, t), 0.0)
    mean, pp = discord_period_stats(p)
    return AsymptoticSummary(
        params=p,
        ent_phase=entanglement_phase(p),
        disc_phase=discord_phase(p),
        EN_mean=float(np.mean(en[:-1])),
        EN_max=float(en.max()),
        EN_min=float(en.min()),
        discord_mean=mean,
        discord_pp=pp,
    )


def branch_label(phase: DiscordMeasurementPhase) -> str:
    return {DiscordMeasurementPhase.HM: Branch.HOMODYNE.value, DiscordMeasurementPhase.HT: Branch.HETERODYNE.value}.get(phase, "TD")
