"""Path simulation of the killed chain and Monte Carlo estimators built on it.

All estimators are deterministic functions of ``(seed, n_paths)``: path ``k``
draws from its own counter-based stream, so results do not depend on how
paths are scheduled across threads or backends.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import FkWeight, Observable, SymmetricChain
from .spectral import DoobChain, doob_transform, ground_state

CEMETERY = -1
ESS_WARN = 10.0


class DegenerateConditioning(ArithmeticError):
    """No simulated path carried positive Feynman-Kac weight."""

    def __init__(self, msg, survival_estimate):
        super().__init__(f"{msg} (survival estimate {survival_estimate:.3g})")
        self.survival_estimate = survival_estimate


class LowESSWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PathRecord:
    alive_at_t: bool
    A_weight: float
    A_obs: float
    endpoint: int
    n_jumps: int
    occupation: np.ndarray


@dataclass(frozen=True)
class PathBatch:
    alive: np.ndarray
    A_weight: np.ndarray
    A_obs: np.ndarray
    endpoint: np.ndarray
    n_jumps: np.ndarray
    occupation: np.ndarray

    def __len__(self):
        return self.alive.shape[0]

    def record(self, k) -> PathRecord:
        return PathRecord(
            bool(self.alive[k]),
            float(self.A_weight[k]),
            float(self.A_obs[k]),
            int(self.endpoint[k]),
            int(self.n_jumps[k]),
            self.occupation[k].copy(),
        )


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_paths: int
    ess: float
    warning: str | None = None


def _check_start(chain, x):
    if not 0 <= int(x) < chain.n:
        raise ValueError(f"start state {x} outside 0..{chain.n - 1}")


def simulate_paths(chain: SymmetricChain, weight: FkWeight, obs: Observable, t: float, x: int,
                   n_paths: int, seed: int, offset: int = 0, backend: str | None = None) -> PathBatch:
    """Gillespie simulation of paths ``offset .. offset+n_paths-1`` from state ``x``."""
    if not t > 0:
        raise ValueError("t must be positive")
    _check_start(chain, x)
    out = _kernels.simulate(chain.q, chain.kappa, weight.V, weight.F, obs.Vp, obs.G,
                            t, x, seed, n_paths, offset=offset, backend=backend)
    return PathBatch(*out)


def sample_path(chain, weight, obs, t, x, seed, path=0, backend=None) -> PathRecord:
    """One exact-in-law path; ``(seed, path)`` selects the random stream."""
    return simulate_paths(chain, weight, obs, t, x, 1, seed, offset=path, backend=backend).record(0)


def _ess(w):
    s2 = np.sum(w * w)
    return float(np.sum(w) ** 2 / s2) if s2 > 0 else 0.0


def fk_estimate(chain: SymmetricChain, weight: FkWeight, obs: Observable, t: float, x: int,
                n_paths: int, seed: int, backend: str | None = None) -> McEstimate:
    """Self-normalized estimate of ``E_{x|t}[A_t^{Vp,G} / t]``.

    Weights are ``exp(-A_t^{V,F}) 1{t < zeta}``; the standard error is the
    first-order delta-method error of the ratio.
    """
    batch = simulate_paths(chain, weight, obs, t, x, n_paths, seed, backend=backend)
    alive = batch.alive
    if not alive.any():
        raise DegenerateConditioning("degenerate conditioning: no path survived", 0.0)
    logw = np.where(alive, -batch.A_weight, -np.inf)
    w = np.exp(logw - logw.max())
    y = batch.A_obs / t
    wsum = w.sum()
    value = float(np.sum(w * y) / wsum)
    resid = np.where(alive, y - value, 0.0)
    stderr = float(np.sqrt(np.sum(w**2 * resid**2)) / wsum)
    return McEstimate(value, stderr, int(n_paths), _ess(w))


def doob_occupation(doob: DoobChain, T: float, x: int, seed: int, backend: str | None = None) -> np.ndarray:
    """Occupation fractions of one trajectory of the conservative Doob chain up to ``T``."""
    if not T > 0:
        raise ValueError("T must be positive")
    n = doob.n
    if not 0 <= x < n:
        raise ValueError(f"start state {x} outside 0..{n - 1}")
    zn, znn = np.zeros(n), np.zeros((n, n))
    out = _kernels.simulate(doob.rates, zn, zn, znn, zn, znn, T, x, seed, 1, backend=backend)
    occ = out[5][0]
    return occ / occ.sum()


def tail_probability(chain: SymmetricChain, weight: FkWeight, gamma: float, t: float, x: int,
                     theta_tilt: float, n_paths: int, seed: int, backend: str | None = None) -> McEstimate:
    """Importance-sampling estimate of ``P_x(A_t^{V,F} / t >= gamma, t < zeta)``.

    Paths follow the Doob chain of the ``theta_tilt``-tilted semigroup and are
    reweighted by the inverse ground-state martingale
    ``e^{-lambda0 t} phi0(x) / phi0(X_t) e^{theta A_t}``.
    """
    if theta_tilt > 0:
        raise ValueError("theta_tilt must be <= 0")
    _check_start(chain, x)
    sd = ground_state(chain, weight, theta_tilt)
    doob = doob_transform(chain, weight, sd)
    zn = np.zeros(chain.n)
    out = _kernels.simulate(doob.rates, zn, weight.V, weight.F, zn, np.zeros((chain.n, chain.n)),
                            t, x, seed, n_paths, backend=backend)
    A = out[1]
    end = out[3]
    phi = sd.phi0
    logw = -sd.lambda0 * t + np.log(phi[x]) - np.log(phi[end]) + theta_tilt * A
    hit = A >= gamma * t
    w = np.where(hit, np.exp(logw), 0.0)
    value = float(w.mean())
    stderr = float(w.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else float("inf")
    ess = _ess(w)
    warning = None
    if ess < ESS_WARN:
        warning = f"effective sample size {ess:.3g} below {ESS_WARN:g}; variance estimate unreliable"
        warnings.warn(warning, LowESSWarning, stacklevel=2)
    return McEstimate(value, stderr, int(n_paths), ess, warning)
