"""Ground states, the Doob ground-state transform and the quasi-ergodic limit measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FkWeight, SymmetricChain, tilted_generator

POSITIVITY_TOL = 1e-10
GAP_TOL = 1e-10
EIGEN_RTOL = 1e-8


class SpectralError(ArithmeticError):
    """Eigenproblem failed or produced a non-Perron ground state."""


@dataclass(frozen=True)
class SpectralData:
    lambda0: float
    phi0: np.ndarray
    spectrum: np.ndarray
    gap: float
    theta: float = 1.0


@dataclass(frozen=True)
class DoobChain:
    rates: np.ndarray
    stationary: np.ndarray

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def generator(self) -> np.ndarray:
        G = self.rates.copy()
        np.fill_diagonal(G, -self.rates.sum(axis=1))
        return G


@dataclass(frozen=True)
class QeQuantities:
    nu: np.ndarray
    eta: np.ndarray
    Jphi: np.ndarray

    def limit(self, obs) -> float:
        """Quasi-ergodic limit ``int Vp d eta + iint G d Jphi`` of ``A_t^{Vp,G} / t``."""
        return float(np.dot(obs.Vp, self.eta) + np.sum(obs.G * self.Jphi))


def ground_state(chain: SymmetricChain, weight: FkWeight, theta: float = 1.0) -> SpectralData:
    """Principal eigenpair of ``-L`` for the ``theta``-tilted generator.

    Solved on the m-symmetrized matrix so the spectrum is real; ``phi0`` is
    positive and normalized in ``L^2(m)``.
    """
    gen = tilted_generator(chain, weight, theta)
    S = -gen.symmetrized()
    S = 0.5 * (S + S.T)
    try:
        w, vecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails on finite input
        raise SpectralError(f"eigensolver did not converge: {exc}") from exc
    v = vecs[:, 0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    if v.min() < -POSITIVITY_TOL:
        raise SpectralError(
            f"ground state has a negative entry {v.min():.3g}; chain is not irreducible"
        )
    v = np.clip(v, 0.0, None)
    if not (v > 0).all():
        raise SpectralError("ground state vanishes somewhere; chain is not irreducible")
    v = v / np.linalg.norm(v)
    phi0 = v / np.sqrt(chain.m)
    gap = float(w[1] - w[0]) if w.size > 1 else float("inf")
    if gap < GAP_TOL:
        raise SpectralError(f"degenerate principal eigenvalue (gap {gap:.3g})")
    phi0.setflags(write=False)
    w.setflags(write=False)
    return SpectralData(float(w[0]), phi0, w, gap, float(theta))


def _check_eigenpair(chain, weight, spectral):
    L = tilted_generator(chain, weight, spectral.theta).L
    resid = -L @ spectral.phi0 - spectral.lambda0 * spectral.phi0
    scale = max(1.0, abs(spectral.lambda0)) * np.abs(spectral.phi0).max()
    if np.abs(resid).max() > EIGEN_RTOL * scale:
        raise ValueError("stale spectral data: (lambda0, phi0) is not an eigenpair of this chain and weight")


def _tilted_jumps(chain, weight, theta):
    return chain.q * np.exp(-theta * weight.F)


def doob_transform(chain: SymmetricChain, weight: FkWeight, spectral: SpectralData) -> DoobChain:
    """Conservative chain with rates ``q_ij e^{-theta F_ij} phi0_j / phi0_i``.

    ``theta`` is taken from ``spectral`` so tilted families reuse the same
    weight object.
    """
    _check_eigenpair(chain, weight, spectral)
    phi = spectral.phi0
    rates = _tilted_jumps(chain, weight, spectral.theta) * phi[None, :] / phi[:, None]
    np.fill_diagonal(rates, 0.0)
    eta = phi**2 * chain.m
    eta = eta / eta.sum()
    return DoobChain(rates, eta)


def qe_quantities(chain: SymmetricChain, weight: FkWeight, spectral: SpectralData) -> QeQuantities:
    _check_eigenpair(chain, weight, spectral)
    phi = spectral.phi0
    nu = phi * chain.m
    nu = nu / nu.sum()
    eta = phi**2 * chain.m
    eta = eta / eta.sum()
    J = np.outer(phi, phi) * _tilted_jumps(chain, weight, spectral.theta) * chain.m[:, None]
    J = 0.5 * (J + J.T)
    return QeQuantities(nu, eta, J)
