"""Scaled cumulant generating function of ``A_t^{V,F}`` and the upper-deviation rate.

``C(theta) = -lambda0(theta)`` where ``lambda0(theta)`` is the bottom of the
spectrum of the ``(theta V, theta F)``-tilted form.  Levels ``gamma`` above
the quasi-ergodic mean are reached by ``theta_gamma = Psi^{-1}(gamma) < 0``
with ``Psi = -C'``.  The rate is computed from the Legendre data
``C - theta C'`` and, independently, from the bilinear form at the tilted
ground state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import FkWeight, SymmetricChain, base_form, tilted_generator
from .spectral import ground_state

THETA_MIN = -50.0
THETA_FLOOR = -1e4
MAX_BISECT = 200
CONVEX_TOL = 1e-8


class InfeasibleLevel(ValueError):
    """``gamma`` lies outside the open image ``Psi((theta_min, 0))``."""

    def __init__(self, gamma, lo, hi):
        super().__init__(f"gamma={gamma!r} outside attainable interval ({lo!r}, {hi!r}) = (Psi(0-), Psi(theta_min))")
        self.gamma = gamma
        self.interval = (lo, hi)


def _theta_ok(theta, extend):
    if theta > 0 and not extend:
        raise ValueError(
            f"theta={theta} > 0 is outside the upper-deviation range; pass extend=True to allow it"
        )


def scgf(chain: SymmetricChain, weight: FkWeight, theta: float, extend: bool = False) -> float:
    _theta_ok(theta, extend)
    return -ground_state(chain, weight.scaled(theta), 1.0).lambda0


def _derivative_from(chain, weight, theta, phi):
    pot = np.sum(weight.V * phi**2 * chain.m)
    jump = np.sum(weight.F * np.outer(phi, phi) * np.exp(-theta * weight.F) * chain.q * chain.m[:, None])
    return -float(pot + jump)


def scgf_derivative(chain: SymmetricChain, weight: FkWeight, theta: float, extend: bool = False) -> float:
    """``C'(theta)`` from the theta-ground state (first-order perturbation coefficient)."""
    _theta_ok(theta, extend)
    phi = ground_state(chain, weight.scaled(theta), 1.0).phi0
    return _derivative_from(chain, weight, theta, phi)


def psi(chain, weight, theta, extend=False) -> float:
    """Deviation level ``Psi(theta) = -C'(theta)``."""
    return -scgf_derivative(chain, weight, theta, extend)


def finite_time_scgf(chain, weight, theta, t, x=None):
    """``(1/t) log E_x[exp(-theta A_t^{V,F}); t < zeta]``; all states when ``x`` is None."""
    L = tilted_generator(chain, weight, theta).L
    val = np.log(expm(t * L) @ np.ones(chain.n)) / t
    return val if x is None else float(val[x])


def attainable_interval(chain, weight, theta_min=THETA_MIN):
    """``(Psi(0-), Psi(theta_min))`` with ``theta_min`` as passed."""
    return psi(chain, weight, 0.0), psi(chain, weight, theta_min)


def psi_inverse(chain: SymmetricChain, weight: FkWeight, gamma: float, theta_min: float = THETA_MIN) -> float:
    """Bisection for ``Psi(theta) = gamma`` on ``[theta_min, 0]``.

    ``theta_min`` doubles (down to ``THETA_FLOOR``) while ``gamma`` exceeds
    ``Psi(theta_min)``.  Boundary and lower levels are rejected.
    """
    if weight.is_zero:
        raise InfeasibleLevel(gamma, 0.0, 0.0)
    lo_level = psi(chain, weight, 0.0)
    hi_level = psi(chain, weight, theta_min)
    while not gamma < hi_level and theta_min > THETA_FLOOR:
        theta_min = max(2.0 * theta_min, THETA_FLOOR)
        hi_level = psi(chain, weight, theta_min)
    if not (lo_level < gamma < hi_level):
        raise InfeasibleLevel(gamma, lo_level, hi_level)

    tol = 1e-10 * max(1.0, abs(gamma))
    a, b = theta_min, 0.0  # Psi(a) > gamma > Psi(b)
    for _ in range(MAX_BISECT):
        mid = 0.5 * (a + b)
        if not a < mid < b:
            break
        if psi(chain, weight, mid) > gamma:
            a = mid
        else:
            b = mid
        if b - a <= 1e-14 * max(1.0, abs(b)):
            break
    theta = 0.5 * (a + b)
    miss = abs(psi(chain, weight, theta) - gamma)
    if miss > tol:
        raise ArithmeticError(f"bisection stalled: |Psi(theta) - gamma| = {miss:.3g}")
    return float(theta)


@dataclass(frozen=True)
class RatePoint:
    gamma: float
    theta_gamma: float
    rate_legendre: float
    rate_bilinear: float
    agreement: float


def bilinear_rate_form(chain, weight, theta, phi) -> float:
    """``E(phi, phi) + iint phi phi (1 - e^{-theta F} - theta F e^{-theta F}) dN dm``."""
    e = np.exp(-theta * weight.F)
    kern = 1.0 - e - theta * weight.F * e
    jump = np.sum(np.outer(phi, phi) * kern * chain.q * chain.m[:, None])
    return base_form(chain, phi) + float(jump)


def rate(chain: SymmetricChain, weight: FkWeight, gamma: float, theta_min: float = THETA_MIN) -> RatePoint:
    theta = psi_inverse(chain, weight, gamma, theta_min)
    sd = ground_state(chain, weight.scaled(theta), 1.0)
    C = -sd.lambda0
    Cp = _derivative_from(chain, weight, theta, sd.phi0)
    legendre = C - theta * Cp
    bilinear = -bilinear_rate_form(chain, weight, theta, sd.phi0)
    return RatePoint(float(gamma), theta, legendre, bilinear, abs(legendre - bilinear))


@dataclass(frozen=True)
class LdpCurve:
    thetas: np.ndarray
    C: np.ndarray
    Cprime: np.ndarray
    psi: np.ndarray
    phi0_theta: np.ndarray
    degenerate: bool = False

    def second_differences(self):
        return self.C[:-2] - 2 * self.C[1:-1] + self.C[2:]

    def rows(self):
        return [(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(self.thetas, self.C, self.Cprime, self.psi)]


class CurveInvariantError(ArithmeticError):
    pass


def ldp_curve(chain: SymmetricChain, weight: FkWeight, theta_grid, extend: bool = False) -> LdpCurve:
    """C, C', Psi and the tilted ground states along a sorted nonpositive grid."""
    thetas = np.asarray(theta_grid, float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise ValueError("theta grid must be a nonempty 1-d sequence")
    if np.any(np.diff(thetas) <= 0):
        raise ValueError("theta grid must be strictly increasing")
    if not extend and thetas.max() > 0:
        raise ValueError("theta grid must be <= 0 unless extend=True")
    C = np.empty_like(thetas)
    Cp = np.empty_like(thetas)
    phis = np.empty((thetas.size, chain.n))
    for k, th in enumerate(thetas):
        sd = ground_state(chain, weight.scaled(th), 1.0)
        C[k] = -sd.lambda0
        Cp[k] = _derivative_from(chain, weight, th, sd.phi0)
        phis[k] = sd.phi0
    curve = LdpCurve(thetas, C, Cp, -Cp, phis, degenerate=weight.is_zero)
    if curve.degenerate:
        return curve
    if thetas.size >= 3:
        d2 = curve.second_differences()
        if d2.min() < -CONVEX_TOL:
            raise CurveInvariantError(f"C fails convexity on the grid (second difference {d2.min():.3g})")
    if np.any(np.diff(curve.psi) >= 0):
        raise CurveInvariantError("Psi is not strictly decreasing on the grid")
    return curve


def rate_floor(chain, weight) -> float:
    """``C(0)``: the rate approached as ``gamma`` decreases to the mean (survival decay)."""
    return scgf(chain, weight, 0.0)


__all__ = [
    "InfeasibleLevel", "LdpCurve", "RatePoint", "CurveInvariantError", "attainable_interval",
    "bilinear_rate_form", "finite_time_scgf", "ldp_curve", "psi", "psi_inverse", "rate", "rate_floor",
    "scgf", "scgf_derivative",
]
