"""Two-mode Gaussian states: covariance matrices, invariants and entropies.

Quadratures are ordered ``(x1, p1, x2, p2)`` and made dimensionless so that the
vacuum covariance matrix is ``I/2`` (hbar = 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, PhysicalityError

SYM_TOL = 1e-12
PHYS_TOL = 1e-9
RADICAND_TOL = 1e-12

# x_pm = (x1 +- x2)/sqrt(2), same for p; symmetric and orthogonal, hence involutive
_NORMAL_MODE = np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ]
) / np.sqrt(2.0)


class CouplingKind(str, Enum):
    POSITION = "position"
    SYMMETRIC = "symmetric"


class Basis(str, Enum):
    TO_PLUS_MINUS = "to_plus_minus"
    TO_12 = "to_12"


class InitialStateKind(str, Enum):
    SEPARABLE_SQUEEZED = "separable"
    TWO_MODE_SQUEEZED = "entangled"


@dataclass(frozen=True)
class LocalInvariants:
    """Determinants of the blocks of ``[[alpha, gamma], [gamma^T, beta]]`` and of the whole matrix."""

    A: float
    B: float
    C: float
    D: float

    @property
    def delta(self) -> float:
        return self.A + self.B + 2.0 * self.C

    @property
    def delta_tilde(self) -> float:
        return self.A + self.B - 2.0 * self.C

    def swapped(self) -> "LocalInvariants":
        return LocalInvariants(self.B, self.A, self.C, self.D)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.A, self.B, self.C, self.D)


@dataclass(frozen=True)
class SymplecticSpectrum:
    nu_plus: float
    nu_minus: float


@dataclass(frozen=True)
class TwoModeCov:
    """Immutable 4x4 covariance matrix.

    With ``check=True`` (default) the matrix must be symmetric, positive definite
    and satisfy ``nu_minus >= 1/2 - 1e-9``.
    """

    sigma: NDArray[np.float64]
    check: bool = True

    def __post_init__(self) -> None:
        s = np.array(self.sigma, dtype=float)
        if s.shape != (4, 4):
            raise DomainError(f"covariance must be 4x4, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DomainError("covariance contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(s))))
        if np.max(np.abs(s - s.T)) > SYM_TOL * scale:
            raise DomainError("covariance is not symmetric")
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        if self.check:
            if np.min(np.linalg.eigvalsh(s)) <= 0.0:
                raise PhysicalityError("covariance is not positive definite")
            nu = symplectic_eigenvalues(invariants(s)).nu_minus
            if nu < 0.5 - PHYS_TOL:
                raise PhysicalityError(f"smallest symplectic eigenvalue {nu:.3g} < 1/2")

    @property
    def alpha(self) -> NDArray[np.float64]:
        return self.sigma[:2, :2]

    @property
    def beta(self) -> NDArray[np.float64]:
        return self.sigma[2:, 2:]

    @property
    def gamma(self) -> NDArray[np.float64]:
        return self.sigma[:2, 2:]


def _as_matrix(state: TwoModeCov | ArrayLike) -> NDArray[np.float64]:
    if isinstance(state, TwoModeCov):
        return state.sigma
    return np.asarray(state, dtype=float)


def invariants(state: TwoModeCov | ArrayLike) -> LocalInvariants:
    """Local symplectic invariants ``(A, B, C, D)``; no physicality check."""
    s = _as_matrix(state)
    return LocalInvariants(
        A=float(np.linalg.det(s[:2, :2])),
        B=float(np.linalg.det(s[2:, 2:])),
        C=float(np.linalg.det(s[:2, 2:])),
        D=float(np.linalg.det(s)),
    )


def _two_root_pair(delta: float, d: float) -> tuple[float, float]:
    rad = delta * delta - 4.0 * d
    tol = RADICAND_TOL * max(1.0, delta * delta)
    if rad < -tol:
        raise DomainError(f"negative radicand {rad:.3g} in symplectic spectrum")
    # |rad| at roundoff level: a degenerate spectrum, keep both roots equal
    root = np.sqrt(rad) if rad > tol else 0.0
    return 0.5 * (delta + root), 0.5 * (delta - root)


def symplectic_eigenvalues(inv: LocalInvariants) -> SymplecticSpectrum:
    """``2 nu^2 = Delta +- sqrt(Delta^2 - 4D)`` with ``Delta = A + B + 2C``."""
    hi, lo = _two_root_pair(inv.delta, inv.D)
    if lo < 0.0:
        # lo = D / hi is the stable form when the difference cancels
        lo = inv.D / hi if hi > 0 else 0.0
    if lo < 0.0:
        raise DomainError("symplectic eigenvalue squared is negative")
    return SymplecticSpectrum(nu_plus=float(np.sqrt(hi)), nu_minus=float(np.sqrt(lo)))


def partial_transpose_nu_minus(inv: LocalInvariants) -> float:
    """Smallest symplectic eigenvalue of the partially transposed state."""
    hi, lo = _two_root_pair(inv.delta_tilde, inv.D)
    if hi > 0.0:
        lo = inv.D / hi
    if lo < 0.0:
        raise DomainError("partially transposed spectrum is negative")
    return float(np.sqrt(lo))


def entropy_f(x: float) -> float:
    """Entropy (nats) of a single mode with symplectic eigenvalue ``x``.

    ``f(x) = (x + 1/2) log(x + 1/2) - (x - 1/2) log(x - 1/2)``.
    """
    x = float(x)
    if x < 0.5 - PHYS_TOL:
        raise DomainError(f"entropy_f needs x >= 1/2, got {x}")
    if x <= 0.5:
        return 0.0
    lo = x - 0.5
    return (x + 0.5) * np.log(x + 0.5) - lo * np.log(lo)


def von_neumann_entropy(inv: LocalInvariants) -> float:
    spec = symplectic_eigenvalues(inv)
    return entropy_f(spec.nu_plus) + entropy_f(spec.nu_minus)


def normal_mode_transform(state: TwoModeCov | ArrayLike, direction: Basis | str = Basis.TO_PLUS_MINUS) -> TwoModeCov:
    """Congruence with the orthogonal symplectic map between ``(1, 2)`` and ``(+, -)`` modes.

    The map is its own inverse, so ``direction`` only documents intent.
    """
    Basis(direction)
    s = _as_matrix(state)
    out = _NORMAL_MODE @ s @ _NORMAL_MODE.T
    return TwoModeCov(out, check=False)


def to_dimensionless(state: TwoModeCov | ArrayLike, m: float, omega: float) -> TwoModeCov:
    """Rescale ``x -> sqrt(m omega) x`` and ``p -> p / sqrt(m omega)`` on both modes."""
    if m <= 0 or omega <= 0:
        raise DomainError("mass and frequency must be positive")
    k = np.sqrt(m * omega)
    scale = np.diag([k, 1.0 / k, k, 1.0 / k])
    return TwoModeCov(scale @ _as_matrix(state) @ scale, check=False)


def single_mode_cov(phi: float, r: float) -> NDArray[np.float64]:
    """Diagonal single-mode covariance with ``Vxx Vpp = phi^2`` and ``Vxx/Vpp = exp(4 r)``.

    ``r`` follows ``r = (1/2) log(m omega dx/dp)``; positive ``r`` widens position.
    """
    return phi * np.diag([np.exp(2.0 * r), np.exp(-2.0 * r)])


def plus_minus_state(sigma_plus: ArrayLike, sigma_minus: ArrayLike, cross: ArrayLike | None = None) -> NDArray[np.float64]:
    s = np.zeros((4, 4))
    s[:2, :2] = sigma_plus
    s[2:, 2:] = sigma_minus
    if cross is not None:
        s[:2, 2:] = cross
        s[2:, :2] = np.asarray(cross).T
    return s


def build_initial_state(kind: InitialStateKind | str, r: float, phi_minus: float = 0.5) -> TwoModeCov:
    """Initial states sharing minus-mode squeezing ``r`` and purity ``phi_minus``.

    ``separable``: two identical single-mode squeezed thermal states, so both
    normal modes equal that single-mode state.
    ``entangled``: normal modes squeezed oppositely (``-r`` on +, ``r`` on -),
    a two-mode squeezed thermal state in the ``(1, 2)`` basis.
    """
    kind = InitialStateKind(kind)
    if phi_minus < 0.5:
        raise DomainError(f"phi_minus must be >= 1/2, got {phi_minus}")
    minus = single_mode_cov(phi_minus, r)
    plus = minus if kind is InitialStateKind.SEPARABLE_SQUEEZED else single_mode_cov(phi_minus, -r)
    pm = plus_minus_state(plus, minus)
    return TwoModeCov(normal_mode_transform(pm, Basis.TO_12).sigma)


def two_mode_squeezed_vacuum(r: float) -> TwoModeCov:
    """Textbook form ``alpha = beta = cosh(2r)/2 I``, ``gamma = sinh(2r)/2 Z``."""
    c, s = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    z = np.diag([1.0, -1.0])
    return TwoModeCov(np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]]))


def thermal_phi(omega: float, T: float) -> float:
    """``(1/2) coth(omega / 2T)``, equal to 1/2 at ``T = 0``."""
    if T <= 0:
        return 0.5
    x = omega / (2.0 * T)
    return 0.5 / np.tanh(x)
