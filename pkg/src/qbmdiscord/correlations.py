"""Correlation measures of two-mode Gaussian states.

Everything is a function of the local invariants ``(A, B, C, D)``. Discord is
the left (mode 2 measured) Gaussian discord; swap the invariants for the other
side.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from .errors import DomainError
from .gaussian_core import (
    PHYS_TOL,
    LocalInvariants,
    entropy_f,
    partial_transpose_nu_minus,
    symplectic_eigenvalues,
)

NEG_CLAMP = 1e-10
E_MIN_TOL = 1e-7
PURE_B_TOL = 1e-8


class Branch(str, Enum):
    HOMODYNE = "HM"
    HETERODYNE = "HT"


@dataclass(frozen=True)
class DiscordResult:
    discord: float
    e_min: float
    branch: Branch
    g: float


@dataclass(frozen=True)
class MeasurementSeed:
    """Single-mode covariance ``R(theta) diag(nu0 e^{-2s}, nu0 e^{2s}) R(theta)^T``."""

    s: float
    theta: float
    nu0: float = 0.5

    def __post_init__(self) -> None:
        if self.s < 0 or self.nu0 < 0.5 - PHYS_TOL:
            raise DomainError("seed needs s >= 0 and nu0 >= 1/2")

    def covariance(self) -> NDArray[np.float64]:
        return _seed_cov(self.s, self.theta, self.nu0)


def _check_physical(inv: LocalInvariants) -> None:
    if inv.A < 0.25 - PHYS_TOL or inv.B < 0.25 - PHYS_TOL:
        raise DomainError(f"local determinants below 1/4: A={inv.A}, B={inv.B}")
    if symplectic_eigenvalues(inv).nu_minus < 0.5 - PHYS_TOL:
        raise DomainError("invariants describe an unphysical state")
    # standard form needs c+^2 + c-^2 >= 2|c+ c-|; pure states sit on the boundary
    ab = inv.A * inv.B
    if ab + inv.C**2 - inv.D < 2.0 * abs(inv.C) * np.sqrt(ab) - PHYS_TOL * max(1.0, ab):
        raise DomainError("no covariance matrix has these invariants")


def _clamp_nonneg(value: float, what: str) -> float:
    if value < -NEG_CLAMP:
        raise DomainError(f"{what} is negative ({value:.3g})")
    return max(value, 0.0)


def mutual_information(inv: LocalInvariants) -> float:
    _check_physical(inv)
    spec = symplectic_eigenvalues(inv)
    val = (
        entropy_f(np.sqrt(inv.A))
        + entropy_f(np.sqrt(inv.B))
        - entropy_f(spec.nu_plus)
        - entropy_f(spec.nu_minus)
    )
    return _clamp_nonneg(val, "mutual information")


def discriminant(inv: LocalInvariants) -> float:
    """``g = (D - AB)^2 - (1/4 + B) C^2 (A + 4D)``; positive selects homodyne."""
    A, B, C, D = inv.as_tuple()
    return (D - A * B) ** 2 - (0.25 + B) * C * C * (A + 4.0 * D)


def e_min_homodyne(inv: LocalInvariants) -> float:
    A, B, C, D = inv.as_tuple()
    rad = C**4 + (D - A * B) ** 2 - 2.0 * C * C * (A * B + D)
    return (A * B - C * C + D - np.sqrt(max(rad, 0.0))) / (2.0 * B)


def e_min_heterodyne(inv: LocalInvariants) -> float:
    A, B, C, D = inv.as_tuple()
    q = (0.25 - B) * (A - 4.0 * D)
    if abs(0.25 - B) <= PURE_B_TOL:
        raise DomainError("heterodyne expression is singular for B = 1/4")
    return (2.0 * C * C + q + 2.0 * abs(C) * np.sqrt(max(C * C + q, 0.0))) / (4.0 * (0.25 - B) ** 2)


def e_min(inv: LocalInvariants) -> tuple[float, Branch, float]:
    """Minimum conditional determinant over Gaussian measurements on mode 2.

    Returns ``(value, branch, g)``.  At ``B = 1/4`` (pure mode 2) the heterodyne
    expression has a removable singularity; the homodyne one is used there.
    """
    _check_physical(inv)
    g = discriminant(inv)
    if g > 0:
        value, branch = e_min_homodyne(inv), Branch.HOMODYNE
    else:
        branch = Branch.HETERODYNE
        if abs(inv.B - 0.25) <= PURE_B_TOL:
            value = e_min_homodyne(inv)
        else:
            value = e_min_heterodyne(inv)
    # the square root of a near-zero radicand amplifies roundoff to ~sqrt(eps) * scale
    if value < 0.25 - E_MIN_TOL * max(1.0, inv.A * inv.B):
        raise DomainError(f"E_min={value} below 1/4")
    return float(max(value, 0.25)), branch, float(g)


def gaussian_discord(inv: LocalInvariants) -> DiscordResult:
    value, branch, g = e_min(inv)
    spec = symplectic_eigenvalues(inv)
    d = (
        entropy_f(np.sqrt(inv.B))
        - entropy_f(spec.nu_plus)
        - entropy_f(spec.nu_minus)
        + entropy_f(np.sqrt(value))
    )
    return DiscordResult(discord=_clamp_nonneg(d, "discord"), e_min=value, branch=branch, g=g)


def log_negativity(inv: LocalInvariants) -> float:
    """``max(0, -log(2 nu~_-))`` with ``2 nu~_-^2 = Delta~ - sqrt(Delta~^2 - 4D)``."""
    _check_physical(inv)
    nu = partial_transpose_nu_minus(inv)
    return float(max(0.0, -np.log(2.0 * nu)))


def log_negativity_signed(inv: LocalInvariants) -> float:
    """``-log(2 nu~_-)`` without the clamp at zero."""
    return float(-np.log(2.0 * partial_transpose_nu_minus(inv)))


# --- brute-force oracle over Gaussian measurement seeds ---------------------------


def standard_form(inv: LocalInvariants) -> NDArray[np.float64]:
    """Covariance in standard form with the given invariants.

    ``alpha = a I``, ``beta = b I``, ``gamma = diag(c+, c-)``.
    """
    A, B, C, D = inv.as_tuple()
    a, b = np.sqrt(A), np.sqrt(B)
    ssum = (A * B + C * C - D) / (a * b)
    u = np.sqrt(max(ssum + 2.0 * C, 0.0))
    v = np.sqrt(max(ssum - 2.0 * C, 0.0))
    cp, cm = 0.5 * (u + v), 0.5 * (u - v)
    sigma = np.diag([a, a, b, b]).astype(float)
    sigma[0, 2] = sigma[2, 0] = cp
    sigma[1, 3] = sigma[3, 1] = cm
    return sigma


def _seed_cov(s, theta, nu0) -> NDArray[np.float64]:
    s, theta, nu0 = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float), np.asarray(nu0, float))
    c, sn = np.cos(theta), np.sin(theta)
    lo, hi = nu0 * np.exp(-2 * s), nu0 * np.exp(2 * s)
    out = np.empty(s.shape + (2, 2))
    out[..., 0, 0] = c * c * lo + sn * sn * hi
    out[..., 1, 1] = sn * sn * lo + c * c * hi
    out[..., 0, 1] = out[..., 1, 0] = c * sn * (lo - hi)
    return out


def conditional_det(sigma: NDArray[np.float64], seed_cov: NDArray[np.float64]) -> NDArray[np.float64]:
    """``det(alpha - gamma (beta + sigma0)^-1 gamma^T)`` for a stack of seeds."""
    alpha, beta, gamma = sigma[:2, :2], sigma[2:, 2:], sigma[:2, 2:]
    m = beta + seed_cov
    det_m = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1] / det_m
    inv[..., 1, 1] = m[..., 0, 0] / det_m
    inv[..., 0, 1] = -m[..., 0, 1] / det_m
    inv[..., 1, 0] = -m[..., 1, 0] / det_m
    eps = alpha - gamma @ inv @ gamma.T
    return eps[..., 0, 0] * eps[..., 1, 1] - eps[..., 0, 1] * eps[..., 1, 0]


def brute_force_e_min(
    inv: LocalInvariants,
    s_max: float = 8.0,
    nu0_max: float = 3.0,
    n_s: int = 33,
    n_theta: int = 24,
    n_nu: int = 5,
    n_refine: int = 4,
) -> float:
    """Grid scan over measurement seeds followed by bounded local descent."""
    sigma = standard_form(inv)
    s = np.linspace(0.0, s_max, n_s)
    th = np.linspace(0.0, np.pi, n_theta, endpoint=False)
    nu = np.geomspace(0.5, nu0_max, n_nu)
    S, TH, NU = np.meshgrid(s, th, nu, indexing="ij")
    vals = conditional_det(sigma, _seed_cov(S, TH, NU))
    order = np.argsort(vals, axis=None)[:n_refine]
    best = float(vals.flat[order[0]])

    def obj(p):
        return float(conditional_det(sigma, _seed_cov(p[0], p[1], p[2])))

    bounds = [(0.0, s_max), (-np.pi, 2 * np.pi), (0.5, nu0_max)]
    for idx in order:
        x0 = [S.flat[idx], TH.flat[idx], NU.flat[idx]]
        res = minimize(obj, x0, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12})
        best = min(best, float(res.fun))
    return best


def random_physical_invariants(rng: np.random.Generator, max_squeeze: float = 1.2, max_nu: float = 3.0) -> LocalInvariants:
    """Invariants of ``S diag(nu+, nu+, nu-, nu-) S^T`` with a random symplectic ``S``."""
    nus = 0.5 + rng.exponential(0.6, size=2).clip(max=max_nu)
    if rng.random() < 0.25:
        nus[rng.integers(2)] = 0.5
    sigma = np.diag([nus[0], nus[0], nus[1], nus[1]])
    S = random_symplectic(rng, max_squeeze)
    return _invariants_of(S @ sigma @ S.T)


def _invariants_of(s: NDArray[np.float64]) -> LocalInvariants:
    return LocalInvariants(
        float(np.linalg.det(s[:2, :2])),
        float(np.linalg.det(s[2:, 2:])),
        float(np.linalg.det(s[:2, 2:])),
        float(np.linalg.det(s)),
    )


def _local(r: float, phi: float) -> NDArray[np.float64]:
    c, s = np.cos(phi), np.sin(phi)
    rot = np.array([[c, s], [-s, c]])
    return rot @ np.diag([np.exp(-r), np.exp(r)])


def random_symplectic(rng: np.random.Generator, max_squeeze: float = 1.2) -> NDArray[np.float64]:
    def local_pair():
        out = np.zeros((4, 4))
        out[:2, :2] = _local(rng.uniform(-max_squeeze, max_squeeze), rng.uniform(0, np.pi))
        out[2:, 2:] = _local(rng.uniform(-max_squeeze, max_squeeze), rng.uniform(0, np.pi))
        return out

    t = rng.uniform(0, np.pi / 2)
    bs = np.block([[np.cos(t) * np.eye(2), np.sin(t) * np.eye(2)], [-np.sin(t) * np.eye(2), np.cos(t) * np.eye(2)]])
    r = rng.uniform(0, max_squeeze)
    z = np.diag([1.0, -1.0])
    tms = np.block([[np.cosh(r) * np.eye(2), np.sinh(r) * z], [np.sinh(r) * z, np.cosh(r) * np.eye(2)]])
    return local_pair() @ bs @ tms @ local_pair()
