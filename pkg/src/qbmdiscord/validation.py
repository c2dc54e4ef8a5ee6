"""Built-in oracle checks run by ``qbmdiscord validate``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .asymptotics import d_sup
from .correlations import brute_force_e_min, e_min, random_physical_invariants
from .dynamics import evolve, full_bath_oracle
from .environment import (
    SpectralDensity,
    SystemConfig,
    _kernel_quad,
    coefficients_position,
    discretize_bath,
    dissipation_kernel,
    noise_kernel,
    position_second_order_asymptotic,
)
from .gaussian_core import build_initial_state, entropy_f, normal_mode_transform


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_kernels(rng: np.random.Generator, count: int = 20) -> Check:
    sd = SpectralDensity(0.1, 20.0, 1.0)
    s = rng.uniform(0.0, 5.0, count)
    worst = 0.0
    for x in s:
        for closed, weight in ((dissipation_kernel(sd, x), "sin"), (noise_kernel(sd, x, 0.0), "cos")):
            ref = _kernel_quad(sd, float(x), 0.0, weight)
            worst = max(worst, abs(closed - ref) / max(abs(ref), 1e-12))
    return Check("kernel closed forms vs quadrature", worst < 1e-8, f"worst relative error {worst:.2e}")


def check_e_min(rng: np.random.Generator, count: int = 50) -> Check:
    worst = 0.0
    for _ in range(count):
        inv = random_physical_invariants(rng)
        closed = e_min(inv)[0]
        worst = max(worst, abs(closed - brute_force_e_min(inv)) / closed)
    return Check("E_min closed form vs brute-force measurements", worst < 1e-5, f"worst relative error {worst:.2e} over {count}")


def check_oracle(t_max: float = 5.0) -> Check:
    sd = SpectralDensity(0.1, 20.0, 1.0)
    sc = SystemConfig()
    init = build_initial_state("entangled", 1.0)
    pts = evolve(init, sc, sd, 0.0, t_max, 0.25)
    ref = full_bath_oracle(init, discretize_bath(sd, 400), sc, 0.0, t_max, 0.25)
    worst = 0.0
    for p, o in zip(pts, ref):
        a, b = p.cov_pm.sigma, normal_mode_transform(o).sigma
        d = np.abs(a - b)
        worst = max(worst, float(np.max(np.minimum(d / np.maximum(np.abs(b), 1e-300) / 0.02, d / 1e-3))))
    return Check("reduced dynamics vs full-bath oracle", worst <= 1.0, f"worst error {worst:.3f} of tolerance")


def check_saturation(entropy: Callable[[float], float] = entropy_f) -> Check:
    value = d_sup(1e6, 0.5, entropy=entropy)
    ok = abs(value - np.log(2.0)) <= 0.02 * np.log(2.0)
    return Check("high-temperature discord saturates at log 2", ok, f"D_sup = {value:.6f}")


def check_shift_anchor() -> Check:
    sd = SpectralDensity(0.1, 20.0, 1.0)
    got = position_second_order_asymptotic(sd, 0.0).d_omega2
    ref = sd.static_shift()
    rel = abs(got / ref - 1.0)
    return Check("Ohmic frequency-shift anchor", rel < 0.01, f"{got:.5f} vs {ref:.5f}")


def check_free_bath() -> Check:
    sd = SpectralDensity(0.0, 20.0, 1.0)
    c = coefficients_position(sd, 1.0, np.linspace(0.0, 5.0, 11))
    zero = all(np.all(a == 0) for a in (c.d_omega2, c.gamma, c.diffusion, c.anomalous))
    return Check("gamma0 = 0 gives vanishing coefficients", zero, "all zero" if zero else "nonzero entries")


def run_validation(seed: int = 0, entropy: Callable[[float], float] = entropy_f, quick: bool = False) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = [
        check_free_bath(),
        check_kernels(rng),
        check_shift_anchor(),
        check_saturation(entropy),
        check_e_min(rng, 10 if quick else 50),
    ]
    if not quick:
        checks.append(check_oracle())
    return checks


def flipped_entropy(x: float) -> float:
    """Entropy with the sign of the second term flipped; a fault for exercising the suite."""
    x = float(x)
    if x <= 0.5:
        return 0.0
    return (x + 0.5) * np.log(x + 0.5) + (x - 0.5) * np.log(x - 0.5)
