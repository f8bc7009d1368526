"""Diagonal spectral calculus for the Dirichlet Laplacian on (0, 1).

The basis is ``e_k(xi) = sqrt(2) sin(k pi xi)`` with ``A e_k = -lambda_k e_k``
and ``lambda_k = (k pi)^2``.  Every operator here is diagonal in that basis,
so semigroups, fractional powers and operator norms are computed mode-wise.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, RangeError

# exp(x) overflows binary64 just above x = 709.78
INVERSE_SEMIGROUP_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class SpectralVector:
    """Coefficients ``v_1..v_n`` of an element of H_n."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64, copy=True).reshape(-1)
        if c.size < 1:
            raise DomainError("a SpectralVector needs at least one mode")
        if not np.all(np.isfinite(c)):
            raise DomainError("SpectralVector coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(int(n)))

    @classmethod
    def basis(cls, k, n):
        """The unit vector e_k in H_n."""
        if not 1 <= k <= n:
            raise DomainError(f"mode {k} outside 1..{n}")
        c = np.zeros(int(n))
        c[k - 1] = 1.0
        return cls(c)

    def __add__(self, other):
        _check_same_dim(self, other)
        return SpectralVector(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_dim(self, other)
        return SpectralVector(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralVector(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVector(-self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, SpectralVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __len__(self):
        return self.n

    def dot(self, other):
        _check_same_dim(self, other)
        return float(self.coeffs @ other.coeffs)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))


def _check_same_dim(a, b):
    if a.n != b.n:
        raise DomainError(f"dimension mismatch: {a.n} != {b.n}")


def _finite_real(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def eigenvalue(k):
    """lambda_k = (k pi)^2."""
    if int(k) != k or k < 1:
        raise DomainError(f"eigenvalue index must be a positive integer, got {k}")
    return (int(k) * math.pi) ** 2


def eigenvalues(n):
    """lambda_1..lambda_n as an array."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return (np.arange(1, int(n) + 1, dtype=np.float64) * np.pi) ** 2


def semigroup_factors(n, t):
    """Diagonal of E_n(t): ``exp(-lambda_k t)``; negative t gives the inverse."""
    t = _finite_real(t, "t")
    lam = eigenvalues(n)
    if t < 0 and lam[-1] * (-t) > INVERSE_SEMIGROUP_LIMIT:
        raise RangeError(
            f"inverse semigroup out of range: lambda_n*|t| = {lam[-1] * -t:.1f} > "
            f"{INVERSE_SEMIGROUP_LIMIT}"
        )
    return np.exp(-lam * t)


def apply_semigroup(v, t):
    """E_n(t) v for t >= 0."""
    t = _finite_real(t, "t")
    if t < 0:
        raise DomainError("forward semigroup needs t >= 0; use apply_inverse_semigroup")
    return SpectralVector(semigroup_factors(v.n, t) * v.coeffs)


def apply_inverse_semigroup(v, t):
    """E_n(-t) v for t >= 0, valid while lambda_n t <= 700."""
    t = _finite_real(t, "t")
    if t < 0:
        raise DomainError("apply_inverse_semigroup takes t >= 0")
    return SpectralVector(semigroup_factors(v.n, -t) * v.coeffs)


def power_factors(n, gamma):
    gamma = _finite_real(gamma, "gamma")
    return eigenvalues(n) ** gamma


def apply_fractional_power(v, gamma):
    """(-A)^gamma v."""
    return SpectralVector(power_factors(v.n, gamma) * v.coeffs)


def sobolev_norm(v, gamma):
    """The Hdot^gamma norm ``(sum_k lambda_k^gamma v_k^2)^(1/2)``."""
    c = v.coeffs if isinstance(v, SpectralVector) else np.asarray(v, dtype=np.float64)
    return float(np.sqrt(np.sum(power_factors(c.shape[-1], gamma) * c * c)))


def sobolev_norms(batch, gamma):
    """Row-wise Hdot^gamma norms of a ``(samples, n)`` array."""
    batch = np.asarray(batch, dtype=np.float64)
    return np.sqrt(np.sum(power_factors(batch.shape[-1], gamma) * batch * batch, axis=-1))


def project(v, m):
    """P_m v: keep modes 1..min(m, n), zero-padded to dimension m."""
    if int(m) != m or m < 1:
        raise DomainError("projection dimension must be a positive integer")
    m = int(m)
    out = np.zeros(m)
    k = min(m, v.n)
    out[:k] = v.coeffs[:k]
    return SpectralVector(out)


@dataclass(frozen=True)
class SmoothingReport:
    gamma: float
    t: float
    norm: float
    maximizer: int
    ratio: float
    bound: float

    @property
    def within_bound(self):
        return self.ratio <= self.bound * (1.0 + 1e-12)


def smoothing_bound_check(gamma, t):
    """Exact ``||(-A)^gamma E(t)||`` and its ratio to ``t^(-gamma)``.

    ``lambda^gamma exp(-lambda t)`` is unimodal in lambda with peak at
    ``gamma / t``, so the supremum over integer modes is attained at one of
    the two modes bracketing ``sqrt(gamma / t) / pi`` (or at k = 1).
    """
    gamma = _finite_real(gamma, "gamma")
    t = _finite_real(t, "t")
    if t <= 0:
        raise DomainError("t must be positive")
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    k_star = math.sqrt(gamma / t) / math.pi
    candidates = {1, max(1, math.floor(k_star)), max(1, math.ceil(k_star))}
    best_k, best = 1, -1.0
    for k in sorted(candidates):
        lam = eigenvalue(k)
        val = math.exp(gamma * math.log(lam) - lam * t)
        if val > best:
            best_k, best = k, val
    ratio = best * t ** gamma
    bound = (gamma / math.e) ** gamma if gamma > 0 else 1.0
    return SmoothingReport(gamma, t, best, best_k, ratio, bound)
