"""Covariance operators diagonal in the sine basis and their Gaussian samplers."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import rng
from .errors import ConfigError, DomainError
from .spectral import SpectralVector, eigenvalues


@dataclass(frozen=True)
class CovarianceSpec:
    """Eigenvalues ``q_k`` of Q against ``e_k``.

    kind is ``"white"`` (q_k = 1), ``"power_decay"`` (q_k = k^-r) or
    ``"custom"`` (explicit values, q_k = 0 beyond the given list).
    """

    kind: str = "white"
    r: float = 0.0
    values: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("white", "power_decay", "custom"):
            raise DomainError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "power_decay" and not self.r > 0:
            raise DomainError("power_decay needs r > 0")
        if self.kind == "custom":
            vals = tuple(float(v) for v in self.values)
            if any(not math.isfinite(v) or v < 0 for v in vals):
                raise DomainError("custom covariance eigenvalues must be finite and >= 0")
            object.__setattr__(self, "values", vals)

    @classmethod
    def white(cls):
        return cls("white")

    @classmethod
    def power_decay(cls, r):
        return cls("power_decay", r=float(r))

    @classmethod
    def custom(cls, values):
        return cls("custom", values=tuple(values))

    def q(self, n):
        k = np.arange(1, int(n) + 1, dtype=np.float64)
        if self.kind == "white":
            return np.ones_like(k)
        if self.kind == "power_decay":
            return k ** (-self.r)
        out = np.zeros(int(n))
        m = min(int(n), len(self.values))
        out[:m] = self.values[:m]
        return out

    def to_config(self):
        if self.kind == "white":
            return {"kind": "white"}
        if self.kind == "power_decay":
            return {"kind": "power_decay", "r": self.r}
        return {"kind": "custom", "values": list(self.values)}

    @classmethod
    def from_config(cls, cfg):
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise ConfigError("covariance must be an object with a 'kind' key")
        kind = cfg["kind"]
        try:
            if kind == "white":
                return cls.white()
            if kind == "power_decay":
                return cls.power_decay(float(cfg["r"]))
            if kind == "custom":
                return cls.custom(cfg["values"])
        except (KeyError, TypeError, DomainError) as exc:
            raise ConfigError(f"bad covariance config {cfg!r}: {exc}") from exc
        raise ConfigError(f"unknown covariance kind {kind!r}")


@dataclass(frozen=True)
class NoiseIncrement:
    """A per-mode Gaussian increment over a time span ``dt``.

    ``filtered`` marks increments that already carry the semigroup factor
    ``exp(-lambda_k dt)``, i.e. draws of ``E_n(dt) B_n dW`` integrated over
    the span, as opposed to raw ``B_n (W(t+dt) - W(t))``.
    """

    values: SpectralVector
    dt: float
    filtered: bool = False


@dataclass(frozen=True)
class HSCondition:
    partial_sum: float
    tail_bound: float
    converges: bool


def hs_condition_value(cov, beta, n_partial):
    """Partial sum and tail bound of ``sum_k lambda_k^(beta-1) q_k``.

    The tail bound is the integral test for the monotone summand
    ``(k pi)^(2(beta-1)) k^-r``; it is infinite when the series diverges.
    """
    if n_partial < 1:
        raise DomainError("n_partial must be >= 1")
    n_partial = int(n_partial)
    lam = eigenvalues(n_partial)
    partial = float(math.fsum(lam ** (beta - 1.0) * cov.q(n_partial)))
    if cov.kind == "custom":
        tail = math.fsum(
            (k * math.pi) ** (2 * (beta - 1.0)) * q
            for k, q in enumerate(cov.values[n_partial:], start=n_partial + 1)
        )
        return HSCondition(partial + tail, 0.0, True)
    r = 0.0 if cov.kind == "white" else cov.r
    p = 2.0 * (beta - 1.0) - r
    if p >= -1.0:
        return HSCondition(partial, math.inf, False)
    tail = math.pi ** (2.0 * (beta - 1.0)) * n_partial ** (p + 1.0) / (-p - 1.0)
    return HSCondition(partial, tail, True)


# -- batched samplers: rows are stream ids -----------------------------------

def raw_increments(cov, dt, n, seed, stream_ids, counter, lane=rng.LANE_INCREMENT):
    """Rows of ``B_n (W(t+dt) - W(t))``: mode-k variance ``dt q_k``."""
    if not dt > 0:
        raise DomainError("increment length must be positive")
    z = rng.standard_normals(seed, stream_ids, counter, n, lane)
    return np.sqrt(dt * cov.q(n)) * z


def filter_increments(raw, dt):
    """Apply ``E_n(dt)`` to raw increments (last axis = modes)."""
    return np.exp(-eigenvalues(raw.shape[-1]) * dt) * raw


def exact_ou_variance(cov, T, n, drift=0.0):
    """Mode variances ``q_k (1 - exp(-2 (lambda_k - a) T)) / (2 (lambda_k - a))``."""
    rate = eigenvalues(n) - drift
    if np.any(rate <= 0):
        raise DomainError("drift must stay below lambda_1")
    return cov.q(n) * -np.expm1(-2.0 * rate * T) / (2.0 * rate)


# -- single-path samplers -----------------------------------------------------

def sample_raw_increment(cov, tau, n, path):
    vals = raw_increments(cov, tau, n, path.seed, [path.stream_id], path.counter)[0]
    return NoiseIncrement(SpectralVector(vals), float(tau), filtered=False)


def sample_filtered_increment(cov, tau, n, path):
    """Draw of ``E_n(tau) B_n dW`` over one step: variance ``tau e^{-2 lambda_k tau} q_k``.

    Bit-identical to filtering ``sample_raw_increment`` at the same path.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    raw = sample_raw_increment(cov, tau, n, path)
    vals = filter_increments(raw.values.coeffs, tau)
    return NoiseIncrement(SpectralVector(vals), float(tau), filtered=True)


def sample_subinterval_pair(cov, tau, s, n, path):
    """Independent raw increments over ``[0, s]`` and ``[s, tau]``."""
    if not 0 < s < tau:
        raise DomainError(f"split point s={s} must lie in (0, tau={tau})")
    q = cov.q(n)
    za = rng.path_normals(path, n, rng.LANE_SPLIT_A)
    zb = rng.path_normals(path, n, rng.LANE_SPLIT_B)
    first = NoiseIncrement(SpectralVector(np.sqrt(s * q) * za), float(s))
    rest = NoiseIncrement(SpectralVector(np.sqrt((tau - s) * q) * zb), float(tau - s))
    return first, rest


def sample_exact_ou_endpoint(cov, T, n, path):
    """Draw of the stochastic convolution ``int_0^T E(T-s) B dW(s)``."""
    if not T > 0:
        raise DomainError("T must be positive")
    z = rng.path_normals(path, n, rng.LANE_EXACT)
    return SpectralVector(np.sqrt(exact_ou_variance(cov, T, n)) * z)
