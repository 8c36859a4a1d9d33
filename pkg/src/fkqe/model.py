"""Finite-state symmetric chains with killing, Feynman-Kac weights and observables.

A chain lives on states ``0..n-1`` plus a cemetery.  It is described by a
symmetrizing measure ``m``, jump rates ``q`` (zero diagonal) and killing
rates ``kappa``.  The additive clock of the Levy system is ``H_t = t``, so
``q[i, j]`` is exactly the Levy kernel mass ``N(i, {j})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

SYMMETRY_RTOL = 1e-12


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SymmetricChain:
    m: np.ndarray
    q: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", _frozen(self.m, 1, "m"))
        object.__setattr__(self, "q", _frozen(self.q, 2, "q"))
        object.__setattr__(self, "kappa", _frozen(self.kappa, 1, "kappa"))

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        """Total event rate per state: jumps plus killing."""
        return self.q.sum(axis=1) + self.kappa

    def scaled(self, c: float) -> "SymmetricChain":
        return SymmetricChain(self.m, c * self.q, c * self.kappa)

    def __eq__(self, other):
        if not isinstance(other, SymmetricChain):
            return NotImplemented
        return (
            np.array_equal(self.m, other.m)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.kappa, other.kappa)
        )


@dataclass(frozen=True, eq=False)
class FkWeight:
    """Feynman-Kac pair: potential ``V`` (so ``mu = V m``) and jump weight ``F``."""

    V: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "V", _frozen(self.V, 1, "V"))
        object.__setattr__(self, "F", _frozen(self.F, 2, "F"))

    @classmethod
    def zero(cls, n: int) -> "FkWeight":
        return cls(np.zeros(n), np.zeros((n, n)))

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.V) or np.any(self.F))

    def scaled(self, theta: float) -> "FkWeight":
        return FkWeight(theta * self.V, theta * self.F)

    def __eq__(self, other):
        if not isinstance(other, FkWeight):
            return NotImplemented
        return np.array_equal(self.V, other.V) and np.array_equal(self.F, other.F)


@dataclass(frozen=True, eq=False)
class Observable:
    """Additive functional ``int Vp(X_s) ds + sum G(X_{s-}, X_s)``."""

    Vp: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Vp", _frozen(self.Vp, 1, "Vp"))
        object.__setattr__(self, "G", _frozen(self.G, 2, "G"))

    @classmethod
    def occupation(cls, n: int, state: int) -> "Observable":
        Vp = np.zeros(n)
        Vp[state] = 1.0
        return cls(Vp, np.zeros((n, n)))

    @classmethod
    def jump_count(cls, n: int) -> "Observable":
        return cls(np.zeros(n), 1.0 - np.eye(n))

    @classmethod
    def clock(cls, n: int) -> "Observable":
        return cls(np.ones(n), np.zeros((n, n)))

    def __add__(self, other):
        return Observable(self.Vp + other.Vp, self.G + other.G)

    def __mul__(self, c):
        return Observable(c * self.Vp, c * self.G)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Observable):
            return NotImplemented
        return np.array_equal(self.Vp, other.Vp) and np.array_equal(self.G, other.G)


@dataclass(frozen=True)
class GeneratorMatrix:
    L: np.ndarray
    theta: float
    basis_measure: np.ndarray

    def symmetrized(self) -> np.ndarray:
        """``D_sqrt(m) L D_sqrt(m)^-1``, symmetric whenever L is m-symmetric."""
        s = np.sqrt(self.basis_measure)
        return s[:, None] * self.L / s[None, :]


@dataclass(frozen=True)
class Violation:
    rule: str
    indices: tuple
    magnitude: float
    message: str = ""

    def __str__(self):
        msg = f"{self.rule}: {self.message}" if self.message else self.rule
        return f"{msg} (worst at {self.indices}, magnitude {self.magnitude:.6g})"


@dataclass(frozen=True)
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def rules(self):
        return [v.rule for v in self.violations]

    def render(self) -> str:
        if self.passed:
            return "validation passed"
        lines = ["validation failed:"]
        lines += [f"  - {v}" for v in self.violations]
        return "\n".join(lines)


class ValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(report.render())
        self.report = report


def _worst(mask_vals):
    """Index tuple and value of the largest entry of a nonnegative array."""
    idx = np.unravel_index(int(np.argmax(mask_vals)), mask_vals.shape)
    return tuple(int(i) for i in idx), float(mask_vals[idx])


def _check_matrix(out, name, M, n, symmetric=False, nonneg=False, rtol_ref=None):
    if M.shape != (n, n):
        out.append(Violation("dimension", (), float("nan"), f"{name} has shape {M.shape}, expected {(n, n)}"))
        return False
    bad = ~np.isfinite(M)
    if bad.any():
        out.append(Violation(f"{name}-finite", _worst(bad.astype(float))[0], float("inf"), f"{name} has non-finite entries"))
        return False
    diag = np.abs(np.diag(M))
    if diag.max(initial=0.0) > 0:
        i, mag = _worst(diag)
        out.append(Violation(f"{name}-zero-diagonal", (i[0], i[0]), mag, f"{name} must vanish on the diagonal"))
    if nonneg and (M < 0).any():
        idx, mag = _worst(np.maximum(-M, 0.0))
        out.append(Violation(f"{name}-nonnegative", idx, mag, f"{name} has negative entries"))
    if symmetric:
        asym = np.abs(M - M.T)
        if asym.max(initial=0.0) > 0:
            idx, mag = _worst(asym)
            out.append(Violation(f"{name}-symmetry", idx, mag, f"{name}[i,j] != {name}[j,i]"))
    return True


def validate(chain: SymmetricChain, weight: FkWeight | None = None, obs: Observable | None = None) -> ValidationReport:
    """Check the standing assumptions on a chain and, optionally, a weight and observable.

    Never raises; every failed rule is listed with its worst offender.
    """
    out = []
    n = chain.n
    m, q, kappa = chain.m, chain.q, chain.kappa

    if n < 1:
        return ValidationReport([Violation("dimension", (), 0.0, "chain has no states")])
    if kappa.shape != (n,):
        out.append(Violation("dimension", (), float("nan"), f"kappa has shape {kappa.shape}, expected {(n,)}"))
    q_ok = _check_matrix(out, "q", q, n, nonneg=True)

    if not np.all(np.isfinite(m)) or (m <= 0).any():
        bad = np.where(np.isfinite(m), np.maximum(-m, 0.0) + (m == 0), np.inf)
        i, mag = _worst(bad)
        out.append(Violation("m-positive", i, mag, "symmetrizing measure must be strictly positive"))
    elif q_ok:
        flux = m[:, None] * q
        asym = np.abs(flux - flux.T)
        tol = SYMMETRY_RTOL * np.maximum(1.0, flux)
        excess = np.where(asym > tol, asym, 0.0)
        if excess.any():
            idx, mag = _worst(excess)
            out.append(Violation("m-symmetry", idx, mag, "m_i q_ij != m_j q_ji"))

    if q_ok:
        ncomp, _ = connected_components(q > 0, directed=True, connection="strong")
        if ncomp > 1:
            out.append(Violation("irreducibility", (), float(ncomp), f"jump graph has {ncomp} strongly connected components"))

    if kappa.shape == (n,):
        if not np.all(np.isfinite(kappa)):
            out.append(Violation("kappa-finite", _worst((~np.isfinite(kappa)).astype(float))[0], float("inf"), "killing rates must be finite"))
        elif (kappa < 0).any():
            i, mag = _worst(np.maximum(-kappa, 0.0))
            out.append(Violation("kappa-nonnegative", i, mag, "killing rates must be nonnegative"))
        elif not (kappa > 0).any():
            out.append(Violation("explosiveness", (), 0.0, "no killing (process conservative, violates explosiveness)"))

    if weight is not None:
        if weight.V.shape != (n,):
            out.append(Violation("dimension", (), float("nan"), f"V has shape {weight.V.shape}, expected {(n,)}"))
        elif not np.all(np.isfinite(weight.V)):
            out.append(Violation("V-finite", _worst((~np.isfinite(weight.V)).astype(float))[0], float("inf"), "potential must be finite"))
        _check_matrix(out, "F", weight.F, n, symmetric=True)

    if obs is not None:
        if obs.Vp.shape != (n,):
            out.append(Violation("dimension", (), float("nan"), f"Vp has shape {obs.Vp.shape}, expected {(n,)}"))
        elif not np.all(np.isfinite(obs.Vp)):
            out.append(Violation("Vp-finite", _worst((~np.isfinite(obs.Vp)).astype(float))[0], float("inf"), "Vp must be finite"))
        _check_matrix(out, "G", obs.G, n)

    return ValidationReport(out)


def require_valid(chain, weight=None, obs=None):
    report = validate(chain, weight, obs)
    if not report.passed:
        raise ValidationError(report)
    return report


def _check_dims(chain, weight):
    n = chain.n
    if weight.V.shape != (n,) or weight.F.shape != (n, n):
        raise ValueError(
            f"weight dimensions {weight.V.shape}/{weight.F.shape} do not match a chain with n={n}"
        )


def tilted_generator(chain: SymmetricChain, weight: FkWeight, theta: float = 1.0) -> GeneratorMatrix:
    """Generator of the semigroup ``E_x[exp(-theta A_t^{V,F}) f(X_t); t < zeta]``."""
    _check_dims(chain, weight)
    off = chain.q * np.exp(-theta * weight.F)
    L = off.copy()
    np.fill_diagonal(L, -(chain.q.sum(axis=1) + chain.kappa + theta * weight.V))
    L.setflags(write=False)
    return GeneratorMatrix(L, float(theta), chain.m)


def base_form(chain: SymmetricChain, u) -> float:
    """Dirichlet form of the killed chain, ``sum_{i<j} m_i q_ij (u_i-u_j)^2 + sum kappa m u^2``."""
    u = np.asarray(u, dtype=float)
    diff = u[:, None] - u[None, :]
    jump = 0.5 * np.sum(chain.m[:, None] * chain.q * diff**2)
    return float(jump + np.sum(chain.kappa * chain.m * u**2))


def dirichlet_form(chain: SymmetricChain, weight: FkWeight, theta: float, u) -> float:
    """Quadratic form of the tilted generator evaluated at ``u``.

    Equals ``-<u, L u>_m`` for ``L = tilted_generator(chain, weight, theta)``.
    """
    _check_dims(chain, weight)
    u = np.asarray(u, dtype=float)
    if u.shape != (chain.n,):
        raise ValueError(f"u has shape {u.shape}, expected {(chain.n,)}")
    potential = theta * np.sum(u**2 * weight.V * chain.m)
    jump = np.sum(np.outer(u, u) * (-np.expm1(-theta * weight.F)) * chain.q * chain.m[:, None])
    return base_form(chain, u) + float(potential) + float(jump)


def build_discrete_stable(n_grid: int, alpha: float, radius: float = 1.0, scale: float = 1.0) -> SymmetricChain:
    """Discretize the absorbing alpha-stable process on ``(-radius, radius)``.

    Grid points are ``x_i = -radius + i h`` for ``i = 1..n_grid`` with
    ``h = 2 radius / (n_grid + 1)``.  Killing is the stable kernel's mass
    outside the interval, in closed form.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if scale <= 0:
        raise ValueError("scale must be positive")
    h = 2.0 * radius / (n_grid + 1)
    x = -radius + h * np.arange(1, n_grid + 1)
    # symmetrize grid roundoff so reflection symmetry is exact
    x = 0.5 * (x - x[::-1])
    dist = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dist, 1.0)
    q = scale * h / dist ** (1.0 + alpha)
    np.fill_diagonal(q, 0.0)
    kappa = (scale / alpha) * ((radius - x) ** -alpha + (radius + x) ** -alpha)
    return SymmetricChain(np.full(n_grid, h), q, kappa)


def grid_points(n_grid: int, radius: float = 1.0) -> np.ndarray:
    h = 2.0 * radius / (n_grid + 1)
    x = -radius + h * np.arange(1, n_grid + 1)
    return 0.5 * (x - x[::-1])


def golden2(kappa=(1.0, 0.0)) -> SymmetricChain:
    """Two states, unit rates both ways, killing at state 0 only."""
    return SymmetricChain(np.ones(2), np.array([[0.0, 1.0], [1.0, 0.0]]), np.asarray(kappa, float))
