"""Exact time-t conditional laws and moments via (block) matrix exponentials.

Time integrals of the form ``int_0^t e^{sL} B e^{(t-s)L} ds`` are read off
the upper-right block of ``expm(t [[L, B], [0, L]])``; the double integral
needed for second moments comes from the 3x3 block analogue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import FkWeight, Observable, SymmetricChain, tilted_generator
from .spectral import ground_state, qe_quantities

UNDERFLOW = 1e-300


@dataclass(frozen=True)
class MomentReport:
    t: float
    per_state_mean: np.ndarray
    limit_mean: float
    per_state_second: np.ndarray | None = None
    limit_second: float | None = None

    @property
    def variance(self):
        if self.per_state_second is None:
            return None
        return self.per_state_second - self.per_state_mean**2

    def rows(self):
        """CSV rows ``t, state, mean, second, limit_mean, abs_error``."""
        out = []
        for x, mean in enumerate(self.per_state_mean):
            second = "" if self.per_state_second is None else float(self.per_state_second[x])
            out.append((self.t, x, float(mean), second, self.limit_mean, abs(float(mean) - self.limit_mean)))
        return out


def _check_t(t, allow_zero=False):
    if not np.isfinite(t) or t < 0 or (t == 0 and not allow_zero):
        raise ValueError(f"time must be {'nonnegative' if allow_zero else 'positive'} and finite, got {t}")


def _generator(chain, weight, shift=0.0):
    L = np.array(tilted_generator(chain, weight, 1.0).L)
    if shift:
        L[np.diag_indices_from(L)] += shift
    return L


def _jump_matrix(chain, weight, G):
    return chain.q * np.asarray(G, float) * np.exp(-weight.F)


def perturbation(chain: SymmetricChain, weight: FkWeight, obs: Observable) -> np.ndarray:
    """``B = diag(Vp) + q * G * e^{-F}``: generator of the observable's increments."""
    return np.diag(obs.Vp) + _jump_matrix(chain, weight, obs.G)


def block_integral(L, B, t):
    """``int_0^t e^{sL} B e^{(t-s)L} ds`` and ``e^{tL}``."""
    n = L.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = L
    M[n:, n:] = L
    M[:n, n:] = B
    E = expm(t * M)
    return E[:n, n:], E[:n, :n]


def double_block_integral(L, B, t):
    """``int_0^t int_0^{t-s} e^{sL} B e^{rL} B e^{(t-s-r)L} dr ds``."""
    n = L.shape[0]
    M = np.zeros((3 * n, 3 * n))
    for k in range(3):
        M[k * n:(k + 1) * n, k * n:(k + 1) * n] = L
    M[:n, n:2 * n] = B
    M[n:2 * n, 2 * n:] = B
    E = expm(t * M)
    return E[:n, 2 * n:], E[:n, n:2 * n], E[:n, :n]


def _with_underflow_guard(chain, weight, compute):
    """Run ``compute(L)``; retry on the lambda0-compensated generator if survival underflows."""
    out = compute(_generator(chain, weight))
    if np.min(out[-1]) < UNDERFLOW:
        lam = ground_state(chain, weight).lambda0
        out = compute(_generator(chain, weight, shift=lam))
    return out


def survival(chain: SymmetricChain, weight: FkWeight, t: float) -> np.ndarray:
    """Compensated survival factor ``e^{lambda0 t} E_x[W_t]``.

    ``t = inf`` returns the limit ``phi0(x) int phi0 dm``.
    """
    sd = ground_state(chain, weight)
    if t == np.inf:
        return sd.phi0 * np.dot(sd.phi0, chain.m)
    _check_t(t, allow_zero=True)
    return expm(t * _generator(chain, weight, shift=sd.lambda0)) @ np.ones(chain.n)


def endpoint_conditional(chain: SymmetricChain, weight: FkWeight, t: float, f) -> np.ndarray:
    """``x -> E_{x|t}[f(X_t)]`` under the Feynman-Kac conditioned law."""
    _check_t(t)
    f = np.asarray(f, float)

    def compute(L):
        P = expm(t * L)
        return P @ f, P @ np.ones(chain.n)

    num, den = _with_underflow_guard(chain, weight, compute)
    if np.min(den) <= 0:
        raise ZeroDivisionError("conditioning on an event of zero weight")
    return num / den


def two_time_conditional(chain, weight, t, p, q, f, g) -> np.ndarray:
    """``x -> E_{x|t}[f(X_{pt}) g(X_{qt})]`` for ``0 < p < q <= 1``."""
    _check_t(t)
    if not (0.0 < p < q <= 1.0):
        raise ValueError(f"need 0 < p < q <= 1, got p={p}, q={q}")
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    one = np.ones(chain.n)

    def compute(L):
        tail = expm((1.0 - q) * t * L) @ one
        mid = expm((q - p) * t * L) @ (g * tail)
        num = expm(p * t * L) @ (f * mid)
        return num, expm(t * L) @ one

    num, den = _with_underflow_guard(chain, weight, compute)
    return num / den


def penalization_limit(chain: SymmetricChain, weight: FkWeight, f, s: float) -> np.ndarray:
    """``lim_{t->inf} E_{x|t}[f(X_s)] = phi0^{-1} e^{lambda0 s} e^{sL} (f phi0)``."""
    _check_t(s, allow_zero=True)
    sd = ground_state(chain, weight)
    f = np.asarray(f, float)
    P = expm(s * _generator(chain, weight, shift=sd.lambda0))
    return (P @ (f * sd.phi0)) / sd.phi0


def limit_mean(chain, weight, obs) -> float:
    sd = ground_state(chain, weight)
    return qe_quantities(chain, weight, sd).limit(obs)


def conditional_mean(chain: SymmetricChain, weight: FkWeight, obs: Observable, t: float) -> MomentReport:
    """``E_{x|t}[A_t^{Vp,G} / t]`` for every start state, plus its t -> inf limit."""
    _check_t(t)
    B = perturbation(chain, weight, obs)
    one = np.ones(chain.n)

    def compute(L):
        omega, P = block_integral(L, B, t)
        return omega @ one, P @ one

    num, den = _with_underflow_guard(chain, weight, compute)
    return MomentReport(float(t), num / den / t, limit_mean(chain, weight, obs))


def conditional_second_moment(chain: SymmetricChain, weight: FkWeight, obs: Observable, t: float) -> MomentReport:
    """First and second conditional moments of ``A_t^{Vp,G} / t``.

    The squared same-jump contribution uses ``q G^2 e^{-F}``; every other
    pair (continuous x continuous, continuous x jump, distinct jumps) comes
    from the double integral with ``B`` twice.
    """
    _check_t(t)
    B = perturbation(chain, weight, obs)
    Bsq = _jump_matrix(chain, weight, np.asarray(obs.G) ** 2)
    one = np.ones(chain.n)

    def compute(L):
        omega2, omega1, P = double_block_integral(L, B, t)
        omega_sq, _ = block_integral(L, Bsq, t)
        return omega1 @ one, 2.0 * (omega2 @ one) + omega_sq @ one, P @ one

    first, second, den = _with_underflow_guard(chain, weight, compute)
    lim = limit_mean(chain, weight, obs)
    return MomentReport(float(t), first / den / t, lim, second / den / t**2, lim**2)
