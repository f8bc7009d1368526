"""Closed-form Kolmogorov functions for diagonal linear drift.

For ``F(x) = a x`` with ``a < lambda_1`` the truncated solution started at x
is Gaussian with independent modes, mean ``c_k(t) x_k`` where
``c_k(t) = exp((a - lambda_k) t)`` and variance ``sigma_k^2(t)``.  Hence
``mu(t, x) = E Phi(X(t, x))`` and its first two derivatives are explicit
for cosine, linear and diagonal quadratic test functionals.

All evaluators accept ``x`` with leading batch axes.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, DomainError
from .noise import CovarianceSpec, exact_ou_variance
from .spectral import SpectralVector, eigenvalues, semigroup_factors

FD_REL_STEP = 1e-4


@dataclass(frozen=True)
class TestFunctional:
    """Phi(x) = cos<x,g>, <x,g> or sum_k w_k x_k^2.

    ``quadratic_diag`` has an unbounded first derivative, so it lies outside
    the C_b^2 class; it is kept as a diagnostic and flagged as such.
    """

    __test__ = False  # not a pytest class

    kind: str
    g: np.ndarray

    def __post_init__(self):
        if self.kind not in ("cosine", "linear", "quadratic_diag"):
            raise DomainError(f"unknown functional kind {self.kind!r}")
        g = np.array(self.g, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(g)):
            raise DomainError("functional coefficients must be finite")
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    def __eq__(self, other):
        if not isinstance(other, TestFunctional):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.g, other.g)

    __hash__ = None

    @property
    def supplementary(self):
        return self.kind == "quadratic_diag"

    @property
    def n(self):
        return self.g.shape[0]

    @classmethod
    def cosine(cls, g):
        return cls("cosine", _coeffs(g))

    @classmethod
    def linear(cls, g):
        return cls("linear", _coeffs(g))

    @classmethod
    def quadratic_diag(cls, weights):
        return cls("quadratic_diag", _coeffs(weights))

    def resized(self, n):
        g = np.zeros(n)
        k = min(n, self.n)
        g[:k] = self.g[:k]
        return TestFunctional(self.kind, g)

    def value(self, x):
        x = _as_array(x)
        if self.kind == "cosine":
            return np.cos(x @ self.g)
        if self.kind == "linear":
            return x @ self.g
        return (x * x) @ self.g

    def gradient(self, x):
        x = _as_array(x)
        if self.kind == "cosine":
            return -np.sin(x @ self.g)[..., None] * self.g
        if self.kind == "linear":
            return np.broadcast_to(self.g, x.shape).copy()
        return 2.0 * self.g * x

    def expectation(self, mean, var):
        """E Phi(X) for X ~ N(mean, diag(var))."""
        mean, var = _as_array(mean), _as_array(var)
        if self.kind == "cosine":
            return np.cos(mean @ self.g) * np.exp(-0.5 * (var @ (self.g * self.g)))
        if self.kind == "linear":
            return mean @ self.g
        return (mean * mean + var) @ self.g

    def to_config(self):
        key = "w_modes" if self.kind == "quadratic_diag" else "g_modes"
        return {"kind": self.kind, key: [[k + 1, float(v)] for k, v in enumerate(self.g) if v != 0]}

    @classmethod
    def from_config(cls, cfg, n):
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise ConfigError("functional must be an object with a 'kind' key")
        kind = cfg["kind"]
        coeffs = np.zeros(n)
        modes = cfg.get("g_modes", cfg.get("w_modes"))
        try:
            if modes == "ones" or (modes is None and kind == "quadratic_diag"):
                coeffs[:] = 1.0
            else:
                for k, val in modes:
                    if not 1 <= int(k) <= n:
                        raise ConfigError(f"functional mode {k} outside 1..{n}")
                    coeffs[int(k) - 1] = float(val)
            return cls(kind, coeffs)
        except (TypeError, ValueError, DomainError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad functional config {cfg!r}: {exc}") from exc


def _coeffs(g):
    return g.coeffs if isinstance(g, SpectralVector) else np.asarray(g, dtype=np.float64)


def _as_array(x):
    return x.coeffs if isinstance(x, SpectralVector) else np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class GaussianState:
    """Independent per-mode Gaussian law on H_n."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(_as_array(self.mean), dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        if mean.shape != var.shape:
            raise DomainError("mean and variance dimensions differ")
        if np.any(var < 0):
            raise DomainError("variances must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


@dataclass(frozen=True)
class KolmogorovField:
    """mu(t, x) = E Phi(X^n(t, x)) for dX = (A_n X + a X) dt + B_n dW."""

    drift_rate: float
    cov: CovarianceSpec
    functional: TestFunctional
    n: int

    def __post_init__(self):
        if self.drift_rate >= eigenvalues(1)[0]:
            raise DomainError("drift rate must stay below lambda_1 = pi^2")
        if self.functional.n != self.n:
            object.__setattr__(self, "functional", self.functional.resized(self.n))

    # building blocks
    def _lam(self):
        return eigenvalues(self.n)

    def mean_factor(self, t):
        """c_k(t) = exp((a - lambda_k) t)."""
        return np.exp((self.drift_rate - self._lam()) * t)

    def variance(self, t):
        if t == 0:
            return np.zeros(self.n)
        return exact_ou_variance(self.cov, t, self.n, self.drift_rate)

    def _damping(self, t):
        """exp(-1/2 sum g_k^2 sigma_k^2(t)) for the cosine kind."""
        g = self.functional.g
        return math.exp(-0.5 * float(self.variance(t) @ (g * g)))

    def _h(self, t):
        return self.functional.g * self.mean_factor(t)

    # Hessian contracted with a diagonal operator diag(d), as a function of x
    def hess_trace(self, t, x, d):
        """Tr[D^2 mu(t, x) diag(d)]."""
        x = _as_array(x)
        kind = self.functional.kind
        if kind == "linear":
            return np.zeros(x.shape[:-1])
        c = self.mean_factor(t)
        if kind == "quadratic_diag":
            val = float(np.sum(2.0 * self.functional.g * c * c * d))
            return np.full(x.shape[:-1], val)
        h = self._h(t)
        return -np.cos(x @ h) * self._damping(t) * float(np.sum(h * h * d))


def propagate_law(field, t, x):
    """Law of X^n(t, x): mean ``c_k(t) x_k``, variance ``sigma_k^2(t)``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return GaussianState(field.mean_factor(t) * _as_array(x), field.variance(t))


def mu(field, t, x):
    if t < 0:
        raise DomainError("t must be >= 0")
    x = _as_array(x)
    f = field.functional
    if f.kind == "cosine":
        return np.cos(x @ field._h(t)) * field._damping(t)
    c = field.mean_factor(t)
    if f.kind == "linear":
        return x @ (f.g * c)
    return (x * x) @ (f.g * c * c) + float(f.g @ field.variance(t))


def grad_mu(field, t, x):
    if t < 0:
        raise DomainError("t must be >= 0")
    x = _as_array(x)
    f = field.functional
    h = field._h(t)
    if f.kind == "cosine":
        return (-np.sin(x @ h) * field._damping(t))[..., None] * h
    if f.kind == "linear":
        return np.broadcast_to(h, x.shape).copy()
    c = field.mean_factor(t)
    return 2.0 * f.g * c * c * x


def hess_mu_quadratic_form(field, t, x, w1, w2):
    """D^2 mu(t, x)(w1, w2); symmetric in (w1, w2) bit for bit."""
    if t < 0:
        raise DomainError("t must be >= 0")
    x, w1, w2 = _as_array(x), _as_array(w1), _as_array(w2)
    f = field.functional
    if f.kind == "linear":
        return np.zeros(np.broadcast(x[..., 0], w1[..., 0], w2[..., 0]).shape)
    c = field.mean_factor(t)
    if f.kind == "quadratic_diag":
        return (w1 * w2) @ (2.0 * f.g * c * c)
    h = field._h(t)
    return -np.cos(x @ h) * field._damping(t) * ((w1 @ h) * (w2 @ h))


# -- transformed function nu(t, y) = mu(t, E_n(-t) y) -------------------------

def nu(field, t, y):
    return mu(field, t, semigroup_factors(field.n, -t) * _as_array(y))


def grad_nu(field, t, y):
    inv = semigroup_factors(field.n, -t)
    return inv * grad_mu(field, t, inv * _as_array(y))


def hess_nu(field, t, y, w1, w2):
    inv = semigroup_factors(field.n, -t)
    return hess_mu_quadratic_form(
        field, t, inv * _as_array(y), inv * _as_array(w1), inv * _as_array(w2)
    )


# -- PDE residuals -------------------------------------------------------------

def _time_derivative(fn, t):
    h = FD_REL_STEP * max(1.0, t)
    if t - 2 * h <= 0:
        raise DomainError(f"t={t} too close to 0 for the 5-point stencil (h={h})")
    return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h)


def kolmogorov_residual(field, t, x):
    """d mu/dt - <A x + F x, D mu> - 1/2 Tr[D^2 mu B B*] at (t, x)."""
    x = _as_array(x)
    dmu_dt = _time_derivative(lambda s: mu(field, s, x), t)
    drift = (field.drift_rate - field._lam()) * x
    q = field.cov.q(field.n)
    rhs = grad_mu(field, t, x) @ drift + 0.5 * field.hess_trace(t, x, q)
    return float(dmu_dt - rhs)


def nu_residual(field, t, y):
    """d nu/dt - <E(t) F(E(-t) y), D nu> - 1/2 Tr[D^2 nu E(t) B (E(t) B)*]."""
    y = _as_array(y)
    dnu_dt = _time_derivative(lambda s: nu(field, s, y), t)
    # E(t) F(E(-t) y) = a y for diagonal linear drift
    drift = field.drift_rate * y
    fac = semigroup_factors(field.n, t)
    q = field.cov.q(field.n)
    inv = semigroup_factors(field.n, -t)
    # D^2 nu(e_k, e_k) = inv_k^2 D^2 mu(e_k, e_k) at E(-t) y
    trace = field.hess_trace(t, inv * y, inv * inv * fac * fac * q)
    rhs = grad_nu(field, t, y) @ drift + 0.5 * trace
    return float(dnu_dt - rhs)
