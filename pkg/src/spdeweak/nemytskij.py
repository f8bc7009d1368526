"""Pointwise nonlinearities F(phi)(xi) = f(xi, phi(xi)) evaluated pseudo-spectrally.

Functions are moved between sine coefficients and values at the interior
nodes ``xi_j = j / (m + 1)`` with a type-I discrete sine transform.  With
``m >= n`` the pair is exact on band-limited data; products of sine series
are not band-limited, so ``m = 2n + 1`` is used by default and the energy
that lands above mode n is available from :func:`aliasing_energy`.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft

from . import rng
from .errors import ConfigError, DomainError
from .spectral import SpectralVector, sobolev_norms, power_factors

SQRT2 = math.sqrt(2.0)
DEALIAS_FACTOR = 2


@dataclass(frozen=True)
class CollocationGrid:
    m_points: int

    def __post_init__(self):
        if int(self.m_points) != self.m_points or self.m_points < 1:
            raise DomainError("m_points must be a positive integer")

    @classmethod
    def for_dimension(cls, n, dealias_factor=DEALIAS_FACTOR):
        return cls(dealias_factor * int(n) + 1)

    @property
    def nodes(self):
        return np.arange(1, self.m_points + 1) / (self.m_points + 1.0)


@dataclass(frozen=True)
class RegularityExponents:
    beta: float = 0.5
    eta: float = 0.3
    delta: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise DomainError("beta must lie in (0, 1]")
        if not 0 <= self.eta < 1:
            raise DomainError("eta must lie in [0, 1)")
        if not 1 <= self.delta < 2:
            raise DomainError("delta must lie in [1, 2)")


def _zero(xi, z):
    return np.zeros(np.broadcast(xi, z).shape)


@dataclass(frozen=True)
class NemytskijSpec:
    """A scalar nonlinearity f(xi, z) with its derivatives and claimed constants.

    All callables take broadcastable arrays ``(xi, z)``.  ``linear_rate`` is
    set for the catalog entry ``f = a z`` so closed-form laws can recognise it.
    """

    f: object
    df_dz: object
    d2f_dz2: object
    d2f_dxidz: object = _zero
    lipschitz_L: float = 1.0
    exponents: RegularityExponents = field(default_factory=RegularityExponents)
    name: str = "custom"
    scale: float = 1.0
    linear_rate: float = None

    def __post_init__(self):
        if not self.lipschitz_L > 0:
            raise DomainError("lipschitz_L must be positive")

    @property
    def is_zero(self):
        return self.name == "zero"

    def to_config(self):
        return {"name": self.name, "scale": self.scale}

    def check_growth(self, z_max=10.0, points=201):
        """Grid spot-check of the growth and derivative bounds against L."""
        xi = np.linspace(0.0, 1.0, 51)[:, None]
        z = np.linspace(-z_max, z_max, points)[None, :]
        L = self.lipschitz_L * (1 + 1e-12)
        return bool(
            np.all(np.abs(self.f(xi, z)) <= L * (np.abs(z) + 1))
            and np.all(np.abs(self.df_dz(xi, z)) <= L)
            and np.all(np.abs(self.d2f_dz2(xi, z)) <= L)
            and np.all(np.abs(self.d2f_dxidz(xi, z)) <= L)
        )


def catalog(name, scale=1.0, exponents=None):
    """Built-in nonlinearities: zero, linear, sin, rational, sin_forced."""
    a = float(scale)
    exponents = exponents or RegularityExponents()
    if name == "zero":
        return NemytskijSpec(_zero, _zero, _zero, _zero, 1.0, exponents, "zero", 0.0, 0.0)
    if name == "linear":
        return NemytskijSpec(
            lambda xi, z: a * np.broadcast_to(z, np.broadcast(xi, z).shape),
            lambda xi, z: np.full(np.broadcast(xi, z).shape, a),
            _zero, _zero, abs(a) or 1.0, exponents, "linear", a, a,
        )
    if name == "sin":
        return NemytskijSpec(
            lambda xi, z: a * np.sin(z) + 0.0 * xi,
            lambda xi, z: a * np.cos(z) + 0.0 * xi,
            lambda xi, z: -a * np.sin(z) + 0.0 * xi,
            _zero, abs(a) or 1.0, exponents, "sin", a,
        )
    if name == "rational":
        # max |d^2/dz^2 z/(1+z^2)| = 1.457 at z = -(sqrt 2 - 1)
        return NemytskijSpec(
            lambda xi, z: a * z / (1 + z * z) + 0.0 * xi,
            lambda xi, z: a * (1 - z * z) / (1 + z * z) ** 2 + 0.0 * xi,
            lambda xi, z: a * 2 * z * (z * z - 3) / (1 + z * z) ** 3 + 0.0 * xi,
            _zero, 1.5 * abs(a) or 1.0, exponents, "rational", a,
        )
    if name == "sin_forced":
        return NemytskijSpec(
            lambda xi, z: a * np.sin(z) + np.sin(np.pi * xi),
            lambda xi, z: a * np.cos(z) + 0.0 * xi,
            lambda xi, z: -a * np.sin(z) + 0.0 * xi,
            _zero, abs(a) + 1.0, exponents, "sin_forced", a,
        )
    raise ConfigError(f"unknown nonlinearity {name!r}")


def from_config(cfg, exponents=None):
    if cfg is None:
        return catalog("zero")
    if isinstance(cfg, str):
        return catalog(cfg, exponents=exponents)
    if not isinstance(cfg, dict) or "name" not in cfg:
        raise ConfigError("nonlinearity must be an object with a 'name' key")
    return catalog(cfg["name"], cfg.get("scale", 1.0), exponents)


# -- transforms ---------------------------------------------------------------

def physical_values(coeffs, m_points):
    """Batched synthesis: last axis of ``coeffs`` holds modes 1..n."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = coeffs.shape[-1]
    if m_points < n:
        raise DomainError(f"grid of {m_points} points cannot represent {n} modes")
    if m_points > n:
        pad = [(0, 0)] * (coeffs.ndim - 1) + [(0, m_points - n)]
        coeffs = np.pad(coeffs, pad)
    return scipy.fft.dst(coeffs, type=1, axis=-1) / SQRT2


def spectral_coeffs(values, n):
    """Batched analysis onto modes 1..n (inverse of :func:`physical_values`)."""
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[-1]
    if n > m:
        raise DomainError(f"cannot extract {n} modes from {m} grid values")
    return scipy.fft.dst(values, type=1, axis=-1)[..., :n] / ((m + 1) * SQRT2)


def to_physical(v, grid):
    return physical_values(v.coeffs, grid.m_points)


def to_spectral(values, grid, n):
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.m_points,):
        raise DomainError(f"expected {grid.m_points} values, got shape {values.shape}")
    return SpectralVector(spectral_coeffs(values, n))


# -- F and its derivatives (batched over leading axes) ------------------------

def _finite_or_raise(values):
    if not np.all(np.isfinite(values)):
        raise DomainError("nonlinearity produced non-finite values")
    return values


def F_batch(spec, coeffs, m_points):
    n = coeffs.shape[-1]
    if spec.is_zero:
        return np.zeros_like(coeffs)
    xi = np.arange(1, m_points + 1) / (m_points + 1.0)
    u = physical_values(coeffs, m_points)
    return spectral_coeffs(_finite_or_raise(spec.f(xi, u)), n)


def F_prime_batch(spec, coeffs, w, m_points):
    n = coeffs.shape[-1]
    xi = np.arange(1, m_points + 1) / (m_points + 1.0)
    u = physical_values(coeffs, m_points)
    wp = physical_values(w, m_points)
    return spectral_coeffs(_finite_or_raise(spec.df_dz(xi, u) * wp), n)


def F_second_batch(spec, coeffs, w1, w2, m_points):
    n = coeffs.shape[-1]
    xi = np.arange(1, m_points + 1) / (m_points + 1.0)
    u = physical_values(coeffs, m_points)
    prod = physical_values(w1, m_points) * physical_values(w2, m_points)
    return spectral_coeffs(_finite_or_raise(spec.d2f_dz2(xi, u) * prod), n)


def evaluate_F(spec, v, grid):
    """P_n F(u) for the band-limited u with coefficients v."""
    return SpectralVector(F_batch(spec, v.coeffs, grid.m_points))


def evaluate_F_prime(spec, v, w, grid):
    """P_n of ``df/dz(xi, u(xi)) w(xi)``."""
    return SpectralVector(F_prime_batch(spec, v.coeffs, w.coeffs, grid.m_points))


def evaluate_F_second(spec, v, w1, w2, grid):
    """P_n of ``d2f/dz2(xi, u(xi)) w1(xi) w2(xi)``; symmetric in (w1, w2)."""
    return SpectralVector(F_second_batch(spec, v.coeffs, w1.coeffs, w2.coeffs, grid.m_points))


def aliasing_energy(spec, v, grid):
    """Energy of ``f(xi, u)`` on the grid that sits above mode n."""
    xi = grid.nodes
    vals = spec.f(xi, to_physical(v, grid))
    full = spectral_coeffs(vals, grid.m_points)
    return float(np.sum(full[v.n:] ** 2))


# -- Assumption spot-check ----------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    n: int
    samples: int
    growth: float
    first_derivative: float
    second_derivative: float
    dual_smoothing: float
    bound: float

    @property
    def ratios(self):
        return {
            "growth": self.growth,
            "first_derivative": self.first_derivative,
            "second_derivative": self.second_derivative,
            "dual_smoothing": self.dual_smoothing,
        }

    @property
    def violations(self):
        return [k for k, v in self.ratios.items() if v > self.bound]

    @property
    def ok(self):
        return not self.violations


def _random_functions(path, counter, samples, n, decay, amplitude):
    streams = path.stream_id + np.arange(samples, dtype=np.uint64)
    z = rng.standard_normals(path.seed, streams, path.counter + counter, n, rng.LANE_PROBE)
    return amplitude * z * np.arange(1, n + 1, dtype=np.float64) ** (-decay)


def check_assumption_31(spec, n, grid=None, samples=1000, path=None, bound=None):
    """Empirical maxima of the four ratios bounded by L in the regularity assumption.

    Probe functions have i.i.d. Gaussian coefficients decaying like 1/k (so
    they stay in L^2 as n grows); the Hdot^1 probe for the dual-norm ratio
    decays like k^-2.  Draws of mode k do not depend on n, so reports for
    different n are directly comparable.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    grid = grid or CollocationGrid.for_dimension(n)
    path = path or rng.SeedPath(0)
    m = grid.m_points
    eta = spec.exponents.eta
    delta = spec.exponents.delta

    phi = _random_functions(path, 0, samples, n, 1.0, 2.0)
    psi = _random_functions(path, 1, samples, n, 1.0, 1.0)
    psi2 = _random_functions(path, 2, samples, n, 1.0, 1.0)
    phi1 = _random_functions(path, 3, samples, n, 2.0, 2.0)

    def norms(x):
        return sobolev_norms(x, 0.0)

    growth = norms(F_batch(spec, phi, m)) / (norms(phi) + 1.0)
    first = norms(F_prime_batch(spec, phi, psi, m)) / norms(psi)
    second_raw = F_second_batch(spec, phi, psi, psi2, m) * power_factors(n, -eta)
    second = norms(second_raw) / (norms(psi) * norms(psi2))
    dual_raw = F_prime_batch(spec, phi1, psi, m) * power_factors(n, -delta / 2.0)
    dual = norms(dual_raw) / ((1.0 + sobolev_norms(phi1, 1.0)) * sobolev_norms(psi, -1.0))
    return AssumptionReport(
        n=n,
        samples=samples,
        growth=float(growth.max()),
        first_derivative=float(first.max()),
        second_derivative=float(second.max()),
        dual_smoothing=float(dual.max()),
        bound=spec.lipschitz_L if bound is None else float(bound),
    )
