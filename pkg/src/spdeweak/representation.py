"""Both sides of the weak-error representation for the exponential Euler scheme.

Left side:  E Phi(Y_M) - E Phi(X^n(T)).
Right side: a sum over steps of time integrals of

  drift term  E < D mu(T - t, Yt), E(t - t_m) F(Y_m) - F(Yt) >
  trace term  1/2 E Tr{ D^2 mu(T - t, Yt) (E(s) B B* E(s) - B B*) },  s = t - t_m

where Yt is the continuous extension of the scheme.  For diagonal linear
drift and the closed-form functionals every expectation is a Gaussian
moment, so both sides are evaluated analytically; otherwise they are
estimated by Monte Carlo over coupled (Y_m, Yt) pairs.

For nonlinear drift at n <= 2 there is no closed-form mu.  Its derivatives
along a direction are then estimated by central differences of Phi over
fine-step paths started at Yt +- h v, all driven by one shared inner
Brownian path per sample.  Additive noise makes that flow pathwise smooth,
so a single inner path per outer sample gives an unbiased estimate up to
the O(h^2) difference bias, which is reported by comparing h with 2h.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from . import rng
from .errors import DomainError
from .kolmogorov import KolmogorovField, TestFunctional, grad_mu, mu
from .montecarlo import SampleStats, map_blocks
from .nemytskij import F_batch
from .noise import exact_ou_variance, filter_increments, raw_increments
from .scheme import (
    coupled_endpoints_batch,
    endpoints_batch,
    exact_law,
    extension_batch,
    scheme_law,
)
from .spectral import eigenvalues, semigroup_factors


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    samples: int = 0


@dataclass(frozen=True)
class RepresentationReport:
    lhs: float
    lhs_stderr: float
    rhs_drift_term: float
    rhs_drift_stderr: float
    rhs_trace_term: float
    rhs_trace_stderr: float
    residual: float
    residual_stderr: float
    quadrature_nodes: int
    quadrature_error: float
    mc_samples: int
    tolerance: float
    passed: bool
    fd_bias: float = 0.0

    def to_dict(self):
        return asdict(self)


def field_for(cfg, functional):
    """The closed-form Kolmogorov field matching a linear-drift configuration."""
    a = cfg.linear_rate
    if a is None:
        raise DomainError("closed-form Kolmogorov field needs F = 0 or F = a x")
    return KolmogorovField(a, cfg.cov, functional.resized(cfg.n), cfg.n)


def gauss_legendre(tau, nodes):
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    return 0.5 * tau * (x + 1.0), 0.5 * tau * w


# -- left-hand side -------------------------------------------------------------

def lhs_weak_error(cfg, functional, samples=0, seed=0, refinement=64, block_size=1024,
                   threads=1):
    """E Phi(Y_M) - E Phi(X^n(T)).

    Linear drift with ``samples == 0``: both laws are Gaussian and known, the
    result is exact.  Linear drift with samples: E Phi(Y_M) by Monte Carlo,
    E Phi(X^n(T)) exact.  Nonlinear drift: Monte Carlo against the
    ``refinement``-times finer scheme on the same Brownian paths.
    """
    functional = functional.resized(cfg.n)
    if cfg.linear_rate is not None:
        exact = float(functional.expectation(*_law(exact_law(cfg))))
        if samples == 0:
            return Estimate(float(functional.expectation(*_law(scheme_law(cfg)))) - exact)

        def block(streams):
            return functional.value(endpoints_batch(cfg, seed, streams)) - exact
    else:
        if samples == 0:
            raise DomainError("nonlinear drift needs Monte Carlo samples")

        def block(streams):
            coarse, fine = coupled_endpoints_batch(cfg, [cfg.M], refinement, seed, streams)
            return functional.value(coarse[cfg.M]) - functional.value(fine)

    stats = SampleStats.from_values(map_blocks(block, samples, block_size, threads))
    return Estimate(stats.mean, stats.stderr, samples)


def _law(state):
    return state.mean, state.var


# -- analytic right-hand side (diagonal linear drift) ----------------------------

def _node_moments(cfg, m, s):
    """Moments of (Y_m, Yt) at t = t_m + s for linear drift.

    Returns the mean/variance of Yt plus the mean of the drift difference
    W = E(s) F(Y_m) - F(Yt) and its per-mode covariance with Yt.
    """
    a = cfg.linear_rate
    law = scheme_law(cfg, m)
    q = cfg.cov.q(cfg.n)
    e = semigroup_factors(cfg.n, s)
    amp = 1.0 + a * s
    yt_mean = e * amp * law.mean
    yt_var = e * e * (amp * amp * law.var + s * q)
    # W = -a e (a s Y_m + R_s)
    w_mean = -a * a * s * e * law.mean
    w_cov = -a * e * e * (a * s * amp * law.var + s * q)
    return yt_mean, yt_var, w_mean, w_cov


def _analytic_integrands(cfg, field, m, s):
    T = cfg.T
    r = T - (m * cfg.tau + s)
    yt_mean, yt_var, w_mean, w_cov = _node_moments(cfg, m, s)
    lam = eigenvalues(cfg.n)
    q = cfg.cov.q(cfg.n)
    gap = q * np.expm1(-2.0 * lam * s)
    kind = field.functional.kind
    c = field.mean_factor(r)
    g = field.functional.g
    if kind == "linear":
        return float(g * c @ w_mean), 0.0
    if kind == "quadratic_diag":
        coef = 2.0 * g * c * c
        drift = float(coef @ (yt_mean * w_mean + w_cov))
        return drift, 0.5 * float(coef @ gap)
    h = g * c
    damp = field._damping(r)
    mz = float(h @ yt_mean)
    env = math.exp(-0.5 * float((h * h) @ yt_var))
    e_sin, e_cos = math.sin(mz) * env, math.cos(mz) * env
    # Gaussian integration by parts: E[sin(Z) U] = E U E sin Z + Cov(U, Z) E cos Z
    drift = -damp * (float(h @ w_mean) * e_sin + float((h * h) @ w_cov) * e_cos)
    trace = -0.5 * damp * e_cos * float((h * h) @ gap)
    return drift, trace


def _analytic_rhs(cfg, field, nodes):
    s_nodes, weights = gauss_legendre(cfg.tau, nodes)
    drift = trace = 0.0
    for m in range(cfg.M):
        for s, w in zip(s_nodes, weights):
            d, t = _analytic_integrands(cfg, field, m, s)
            drift += w * d
            trace += w * t
    return drift, trace


def _quadrature_error(fn, nodes):
    """|I(nodes) - I(nodes // 2)| for each component of fn(nodes)."""
    full = np.asarray(fn(nodes))
    half = np.asarray(fn(max(1, nodes // 2)))
    return full, np.abs(full - half)


# -- Monte Carlo right-hand side ---------------------------------------------------

def _mc_rhs_block(cfg, field, nodes, seed, streams):
    """Per-sample drift and trace contributions, plus Phi(Y_M)."""
    s_nodes, weights = gauss_legendre(cfg.tau, nodes)
    lam = eigenvalues(cfg.n)
    q = cfg.cov.q(cfg.n)
    m_points = cfg.grid.m_points
    spec = cfg.nonlinearity
    drift = np.zeros(len(streams))
    trace = np.zeros(len(streams))

    def observe(m, y):
        if m == cfg.M:
            return
        f_y = F_batch(spec, y, m_points)
        z = rng.standard_normals(seed, streams, m, cfg.n, rng.LANE_SPLIT_A)
        for s, w in zip(s_nodes, weights):
            raw_s = np.sqrt(s * q) * z
            yt = extension_batch(cfg, y, s, raw_s)
            r = cfg.T - (m * cfg.tau + s)
            diff = semigroup_factors(cfg.n, s) * f_y - F_batch(spec, yt, m_points)
            drift[:] += w * np.sum(grad_mu(field, r, yt) * diff, axis=-1)
            gap = q * np.expm1(-2.0 * lam * s)
            trace[:] += w * 0.5 * field.hess_trace(r, yt, gap)

    y_end = endpoints_batch(cfg, seed, streams, observer=observe)
    return drift, trace, field.functional.value(y_end)


def rhs_drift_term(cfg, field, quadrature_nodes=8, samples=0, seed=0, threads=1):
    """Drift summand; exactly zero for F = 0.

    ``field`` is a KolmogorovField, or a TestFunctional for nonlinear drift
    (difference estimator, Monte Carlo only).
    """
    if cfg.nonlinearity.is_zero:
        return Estimate(0.0, 0.0, samples)
    if isinstance(field, TestFunctional):
        drift, _, _, _ = _nested_rhs(cfg, field, quadrature_nodes, samples, seed, threads)
        return Estimate(drift.mean, drift.stderr, samples)
    if samples == 0:
        return Estimate(_analytic_rhs(cfg, field, quadrature_nodes)[0])
    drift, _, _ = _mc_rhs(cfg, field, quadrature_nodes, samples, seed, threads)
    return Estimate(drift.mean, drift.stderr, samples)


def rhs_trace_term(cfg, field, quadrature_nodes=8, samples=0, seed=0, threads=1):
    """Trace summand; the covariance gap is ``diag(q_k (e^{-2 lambda_k s} - 1))``."""
    if isinstance(field, TestFunctional):
        _, trace, _, _ = _nested_rhs(cfg, field, quadrature_nodes, samples, seed, threads)
        return Estimate(trace.mean, trace.stderr, samples)
    if samples == 0:
        return Estimate(_analytic_rhs(cfg, field, quadrature_nodes)[1])
    _, trace, _ = _mc_rhs(cfg, field, quadrature_nodes, samples, seed, threads)
    return Estimate(trace.mean, trace.stderr, samples)


def _mc_rhs(cfg, field, nodes, samples, seed, threads, block_size=4096):
    parts = map_blocks(
        lambda streams: np.stack(_mc_rhs_block(cfg, field, nodes, seed, streams)),
        samples, block_size, threads, axis=1,
    )
    return tuple(SampleStats.from_values(p) for p in parts)


# -- nonlinear drift: difference estimator over inner paths --------------------

NESTED_MAX_N = 2


def _inner_flow(cfg, starts, r, refinement, seed, streams, counter0):
    """Fine exponential Euler from ``starts`` (samples, points, n) over time r.

    Step count ``ceil(r / (tau / refinement))``; every start point of a
    sample sees the same inner Brownian path.  The noise per step carries
    the exact stochastic-convolution variance, so the flow is exact for
    F = 0; the drift takes a predictor-corrector (trapezoid) step.
    """
    k_steps = max(1, math.ceil(r * refinement / cfg.tau - 1e-9))
    dt = r / k_steps
    decay = semigroup_factors(cfg.n, dt)
    sd = np.sqrt(exact_ou_variance(cfg.cov, dt, cfg.n))
    spec, m_points = cfg.nonlinearity, cfg.grid.m_points
    y = starts
    for j in range(k_steps):
        z = rng.standard_normals(seed, streams, counter0 + j, cfg.n, rng.LANE_INNER)
        noise = (sd * z)[:, None, :]
        f_y = decay * F_batch(spec, y, m_points)
        pred = decay * y + dt * f_y + noise
        y = decay * y + 0.5 * dt * (f_y + F_batch(spec, pred, m_points)) + noise
    return y


def _nested_block(cfg, functional, node_sets, fd_step, refinement, seed, streams):
    """Per-sample drift/trace sums for each quadrature rule and step (h, 2h).

    Returns an array (4 * len(node_sets) + 2, samples): for every rule the
    drift and trace at h then at 2h, followed by Phi(Y_M) and Phi of the
    fine path from x0 that stands in for X^n(T).
    """
    n = cfg.n
    lam, q = eigenvalues(n), cfg.cov.q(n)
    spec, m_points = cfg.nonlinearity, cfg.grid.m_points
    eye = np.eye(n)
    rules = [gauss_legendre(cfg.tau, k) for k in node_sets]
    acc = np.zeros((4 * len(rules), len(streams)))
    stride = cfg.M * int(refinement) + 1
    slot = [0]

    def directional(yt, diff, h):
        return [yt + h * diff, yt - h * diff] + [yt + s * h * eye[k] for k in range(n) for s in (1, -1)]

    def observe(m, y):
        if m == cfg.M:
            return
        f_y = F_batch(spec, y, m_points)
        z = rng.standard_normals(seed, streams, m, n, rng.LANE_SPLIT_A)
        for i, (s_nodes, weights) in enumerate(rules):
            for s, w in zip(s_nodes, weights):
                yt = extension_batch(cfg, y, s, np.sqrt(s * q) * z)
                diff = semigroup_factors(n, s) * f_y - F_batch(spec, yt, m_points)
                starts = [yt] + directional(yt, diff, fd_step) + directional(yt, diff, 2 * fd_step)
                r = cfg.T - (m * cfg.tau + s)
                ends = _inner_flow(cfg, np.stack(starts, axis=1), r, refinement, seed, streams,
                                   (slot[0] + 1) * stride)
                slot[0] += 1
                phi = functional.value(ends)
                gap = q * np.expm1(-2.0 * lam * s)
                width = 2 + 2 * n
                for j, h in enumerate((fd_step, 2 * fd_step)):
                    part = phi[:, 1 + j * width: 1 + (j + 1) * width]
                    d1 = (part[:, 0] - part[:, 1]) / (2 * h)
                    d2 = (part[:, 2::2] + part[:, 3::2] - 2 * phi[:, :1]) / (h * h)
                    acc[4 * i + 2 * j] += w * d1
                    acc[4 * i + 2 * j + 1] += w * 0.5 * (d2 @ gap)

    y_end = endpoints_batch(cfg, seed, streams, observer=observe)
    x0 = np.broadcast_to(cfg.x0.coeffs, (len(streams), 1, n))
    ref = _inner_flow(cfg, x0, cfg.T, refinement, seed, streams, 0)[:, 0, :]
    return np.vstack([acc, functional.value(y_end), functional.value(ref)])


def _nested_parts(cfg, functional, node_sets, samples, seed, threads, fd_step, refinement,
                  block_size=2048):
    if cfg.n > NESTED_MAX_N:
        raise DomainError(f"nonlinear representation check is limited to n <= {NESTED_MAX_N}")
    if samples < 2:
        raise DomainError("nonlinear drift needs Monte Carlo samples")
    functional = functional.resized(cfg.n)
    return map_blocks(
        lambda streams: _nested_block(cfg, functional, node_sets, fd_step, refinement, seed, streams),
        samples, block_size, threads, axis=1,
    )


def _nested_rhs(cfg, functional, nodes, samples, seed, threads, fd_step=1e-2, refinement=16):
    parts = _nested_parts(cfg, functional, [nodes], samples, seed, threads, fd_step, refinement)
    return tuple(SampleStats.from_values(p) for p in (parts[0], parts[1], parts[4], parts[5]))


def _verify_nonlinear(cfg, functional, quadrature_nodes, samples, seed, n_stderr, threads,
                      fd_step, refinement):
    half = max(1, quadrature_nodes // 2)
    parts = _nested_parts(cfg, functional, [quadrature_nodes, half], samples, seed, threads,
                          fd_step, refinement)
    drift_s, trace_s = parts[0], parts[1]
    phi_s, ref_s = parts[8], parts[9]
    lhs = SampleStats.from_values(phi_s - ref_s)
    drift = SampleStats.from_values(drift_s)
    trace = SampleStats.from_values(trace_s)
    res = SampleStats.from_values(phi_s - ref_s - drift_s - trace_s)
    rhs = drift.mean + trace.mean
    quad = abs(rhs - SampleStats.from_values(parts[4] + parts[5]).mean)
    # O(h^2) bias: I(h) - I(0) ~ (I(2h) - I(h)) / 3
    fd_bias = abs(SampleStats.from_values(parts[2] + parts[3]).mean - rhs) / 3.0
    tol = n_stderr * res.stderr + quad + fd_bias
    residual = lhs.mean - rhs
    return RepresentationReport(
        lhs.mean, lhs.stderr, drift.mean, drift.stderr, trace.mean, trace.stderr,
        residual, res.stderr, int(quadrature_nodes), quad, int(samples), tol,
        bool(abs(residual) <= tol), fd_bias,
    )


def verify_representation(cfg, functional, quadrature_nodes=32, samples=0, seed=0,
                          atol=1e-6, n_stderr=4.0, threads=1, fd_step=1e-2, refinement=16,
                          estimator="auto"):
    """Evaluate both sides and the residual ``lhs - (drift + trace)``.

    Analytic mode (``samples == 0``, linear drift): pass if
    ``|residual| <= atol + quadrature error``.  Monte Carlo mode: the paths
    that estimate the right side also give E Phi(Y_M), and the residual is
    averaged per sample; pass if ``|residual| <= n_stderr * stderr +
    quadrature error``.

    Nonlinear drift (n <= 2, Monte Carlo only): the Kolmogorov derivatives
    come from the difference estimator with step ``fd_step`` over inner
    paths with step ``tau / refinement``, which also define E Phi(X^n(T)).
    The tolerance adds the quadrature error and the difference bias.
    ``estimator="nested"`` forces that path for linear drift too, which is
    how it is checked against the closed forms.
    """
    if estimator not in ("auto", "nested"):
        raise DomainError(f"unknown estimator {estimator!r}")
    if cfg.linear_rate is None or estimator == "nested":
        return _verify_nonlinear(cfg, functional, quadrature_nodes, samples, seed, n_stderr,
                                 threads, fd_step, refinement)
    field = field_for(cfg, functional)
    if samples == 0:
        lhs = lhs_weak_error(cfg, functional).value
        (drift, trace), qerr = _quadrature_error(
            lambda k: _analytic_rhs(cfg, field, k), quadrature_nodes
        )
        if cfg.nonlinearity.is_zero:
            drift = 0.0
        residual = float(lhs - (drift + trace))
        quad = float(np.sum(qerr))
        tol = atol + quad
        return RepresentationReport(
            lhs, 0.0, float(drift), 0.0, float(trace), 0.0, residual, 0.0,
            int(quadrature_nodes), quad, 0, tol, bool(abs(residual) <= tol),
        )

    exact = float(mu(field, cfg.T, cfg.x0))
    parts = map_blocks(
        lambda streams: np.stack(_mc_rhs_block(cfg, field, quadrature_nodes, seed, streams)),
        samples, 4096, threads, axis=1,
    )
    drift_s, trace_s, phi_s = parts
    lhs = SampleStats.from_values(phi_s - exact)
    drift = SampleStats.from_values(drift_s)
    trace = SampleStats.from_values(trace_s)
    res = SampleStats.from_values(phi_s - exact - drift_s - trace_s)
    # quadrature error from the analytic surrogate of the same configuration
    _, qerr = _quadrature_error(lambda k: _analytic_rhs(cfg, field, k), quadrature_nodes)
    quad = float(np.sum(qerr))
    tol = n_stderr * res.stderr + quad
    residual = lhs.mean - (drift.mean + trace.mean)
    return RepresentationReport(
        lhs.mean, lhs.stderr, drift.mean, drift.stderr, trace.mean, trace.stderr,
        residual, res.stderr, int(quadrature_nodes), quad, int(samples), tol,
        bool(abs(residual) <= tol),
    )
