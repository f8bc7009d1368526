"""Declarative convergence and diagnostic experiments plus their file outputs."""

from dataclasses import dataclass, field
import csv
import hashlib
import io
import json
import logging
import math
import subprocess
from pathlib import Path

import numpy as np

from . import __version__, rng
from .errors import ConfigError, DomainError, FitError
from .kolmogorov import TestFunctional
from .montecarlo import SampleStats, map_blocks
from .nemytskij import RegularityExponents, check_assumption_31, from_config as nonlinearity_from_config
from .noise import CovarianceSpec
from .rates import NOISE_FLOOR, fit_rate
from .representation import lhs_weak_error, verify_representation
from .scheme import (
    SchemeConfig,
    coupled_endpoints_batch,
    endpoints_batch,
    extension_batch,
    integrate,
    power_law_initial,
    scheme_law,
)
from .spectral import SpectralVector, eigenvalues, power_factors

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "simulate",
    "weak_rate_time",
    "weak_rate_spatial",
    "representation_check",
    "moment_diagnostics",
    "assumption_check",
)
DEFAULT_G_MODES = [[1, 1.0], [2, 0.5]]


def _sweep_values(spec, name):
    if isinstance(spec, dict) and "powers_of_two" in spec:
        lo, hi = spec["powers_of_two"]
        step = 1 if hi >= lo else -1
        return [2.0 ** -p for p in range(int(lo), int(hi) + step, step)]
    if isinstance(spec, (list, tuple)) and spec:
        return [float(v) for v in spec]
    raise ConfigError(f"{name} must be a nonempty list or {{'powers_of_two': [lo, hi]}}")


def _steps_for(T, tau):
    M = int(round(T / tau))
    if M < 1 or abs(M * tau - T) > 1e-12 * T:
        raise ConfigError(f"tau={tau} does not divide T={T}")
    return M


def _x0_from_config(spec, n):
    if spec is None:
        return power_law_initial(n)
    if isinstance(spec, dict) and "coeffs" in spec:
        c = np.zeros(n)
        vals = np.asarray(spec["coeffs"], dtype=np.float64)[:n]
        c[: vals.size] = vals
        return SpectralVector(c)
    if isinstance(spec, dict) and spec.get("kind", "power") == "power":
        return power_law_initial(n, float(spec.get("p", 2.5)))
    if isinstance(spec, dict) and spec.get("kind") == "zero":
        return SpectralVector.zeros(n)
    raise ConfigError(f"bad x0 config {spec!r}")


@dataclass
class ExperimentPlan:
    experiment: str
    base: SchemeConfig
    sweep: tuple
    functional: TestFunctional
    samples: int = 0
    refinement: int = 64
    seed: int = 0
    block_size: int = 1024
    quadrature_nodes: int = 32
    n_ref: int = None
    gammas: tuple = (0.0, 0.2, 0.5)
    tolerances: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    x0_spec: object = None

    @classmethod
    def from_config(cls, cfg, seed=None):
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        exp = cfg.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        try:
            T = float(cfg.get("T", 1.0))
            n = int(cfg.get("n", 64))
            cov = CovarianceSpec.from_config(cfg.get("covariance", {"kind": "white"}))
            exps = RegularityExponents(**cfg.get("exponents", {}))
            nonlin = nonlinearity_from_config(cfg.get("nonlinearity"), exps)
            mc = cfg.get("mc", {})
            samples = int(mc.get("samples", 0))
            if samples < 0:
                raise ConfigError("mc.samples must be >= 0")
            sweep = ()
            M = int(cfg.get("M", 1))
            if exp in ("weak_rate_time", "moment_diagnostics"):
                sweep = tuple(_sweep_values(cfg.get("tau_sweep"), "tau_sweep"))
                for tau in sweep:
                    _steps_for(T, tau)
            elif exp == "weak_rate_spatial":
                sweep = tuple(int(v) for v in _sweep_values(cfg.get("N_sweep"), "N_sweep"))
                M = _steps_for(T, float(cfg.get("tau", 2.0 ** -12)))
            elif exp == "assumption_check":
                sweep = tuple(int(v) for v in cfg.get("n_sweep", [n]))
            elif "tau" in cfg:
                M = _steps_for(T, float(cfg["tau"]))
            if exp in ("weak_rate_time", "weak_rate_spatial", "moment_diagnostics"):
                diffs = np.diff(sweep)
                if not (np.all(diffs > 0) or np.all(diffs < 0)):
                    raise ConfigError("sweep must be strictly monotone")
            n_ref = int(cfg.get("N_ref", 4 * max(sweep))) if exp == "weak_rate_spatial" else None
            n_base = n_ref if n_ref else n
            base = SchemeConfig(n_base, T, M, cov, nonlin, _x0_from_config(cfg.get("x0"), n_base))
            functional = TestFunctional.from_config(
                cfg.get("functional", {"kind": "cosine", "g_modes": DEFAULT_G_MODES}), n_base
            )
            seed = int(cfg.get("seed", 0) if seed is None else seed)
            return cls(
                experiment=exp,
                base=base,
                sweep=sweep,
                functional=functional,
                samples=samples,
                refinement=int(mc.get("refinement", 64)),
                seed=seed,
                block_size=int(mc.get("block_size", 1024)),
                quadrature_nodes=int(cfg.get("quadrature_nodes", 32)),
                n_ref=n_ref,
                gammas=tuple(float(g) for g in cfg.get("gammas", (0.0, 0.2, 0.5))),
                tolerances=dict(cfg.get("tolerances", {})),
                config=cfg,
                x0_spec=cfg.get("x0"),
            )
        except (KeyError, TypeError, DomainError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    columns: tuple
    summary: dict
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())


def _slope_checks(plan, fit):
    checks = {}
    tol = plan.tolerances
    if "slope" in tol:
        lo, hi = tol["slope"]
        checks["slope_in_window"] = lo <= fit.slope <= hi
    if "slope_min" in tol:
        checks["slope_min"] = fit.slope >= tol["slope_min"]
    if "r_squared" in tol:
        checks["r_squared"] = fit.r_squared >= tol["r_squared"]
    if tol.get("require_all_points"):
        checks["all_points_above_noise_floor"] = not fit.excluded
    return checks


def _rate_result(plan, rows, h_key="h"):
    points = [(r[h_key], abs(r["error"]), r["stderr"]) for r in rows]
    floor = float(plan.tolerances.get("noise_floor", NOISE_FLOOR))
    summary = {"points": points}
    try:
        fit = fit_rate(points, noise_floor=floor)
        summary["fit"] = fit.to_dict()
        checks = _slope_checks(plan, fit)
    except FitError as exc:
        summary["fit"] = None
        summary["fit_error"] = str(exc)
        checks = {"fit": False}
    return ExperimentResult(plan.experiment, rows, ("h", "error", "stderr", "samples"), summary, checks)


def run_weak_rate_time(plan, threads=1):
    """Weak error against tau at fixed n.

    Linear drift: exact Gaussian expectations.  Nonlinear drift: Monte Carlo
    against one shared fine path (step ``min(tau) / refinement``) that every
    coarse tau coarsens.
    """
    cfg = plan.base
    steps = [_steps_for(cfg.T, tau) for tau in plan.sweep]
    rows = []
    if cfg.linear_rate is not None:
        for tau, M in zip(plan.sweep, steps):
            est = lhs_weak_error(cfg.with_steps(M), plan.functional)
            rows.append({"h": tau, "error": est.value, "stderr": 0.0, "samples": 0})
        return _rate_result(plan, rows)
    if plan.samples < 2:
        raise ConfigError("nonlinear weak-rate runs need mc.samples >= 2")
    phi = plan.functional.resized(cfg.n)

    def block(streams):
        coarse, fine = coupled_endpoints_batch(cfg, steps, plan.refinement, plan.seed, streams)
        ref = phi.value(fine)
        return np.stack([phi.value(coarse[M]) - ref for M in steps])

    diffs = map_blocks(block, plan.samples, plan.block_size, threads, axis=1)
    for tau, d in zip(plan.sweep, diffs):
        st = SampleStats.from_values(d)
        rows.append({"h": tau, "error": st.mean, "stderr": st.stderr, "samples": plan.samples})
    return _rate_result(plan, rows)


def _truncated(cfg, N):
    x0 = SpectralVector(cfg.x0.coeffs[:N])
    return SchemeConfig(N, cfg.T, cfg.M, cfg.cov, cfg.nonlinearity, x0)


def run_weak_rate_spatial(plan, threads=1):
    """Error of the scheme at truncation N against the same scheme at N_ref.

    The fitted abscissa is lambda_N = (N pi)^2.
    """
    ref_cfg = plan.base
    phi_ref = plan.functional.resized(ref_cfg.n)
    rows = []
    if ref_cfg.linear_rate is not None:
        ref_val = float(phi_ref.expectation(*_moments(scheme_law(ref_cfg))))
        for N in plan.sweep:
            cfg = _truncated(ref_cfg, N)
            val = float(plan.functional.resized(N).expectation(*_moments(scheme_law(cfg))))
            rows.append({"h": float(eigenvalues(N)[-1]), "N": N, "error": val - ref_val,
                         "stderr": 0.0, "samples": 0})
    else:
        if plan.samples < 2:
            raise ConfigError("nonlinear spatial runs need mc.samples >= 2")
        cfgs = [_truncated(ref_cfg, N) for N in plan.sweep]

        def block(streams):
            ref = phi_ref.value(endpoints_batch(ref_cfg, plan.seed, streams))
            return np.stack([
                plan.functional.resized(c.n).value(endpoints_batch(c, plan.seed, streams)) - ref
                for c in cfgs
            ])

        diffs = map_blocks(block, plan.samples, plan.block_size, threads, axis=1)
        for N, d in zip(plan.sweep, diffs):
            st = SampleStats.from_values(d)
            rows.append({"h": float(eigenvalues(N)[-1]), "N": N, "error": st.mean,
                         "stderr": st.stderr, "samples": plan.samples})
    res = _rate_result(plan, rows)
    res.columns = ("h", "error", "stderr", "samples")
    return res


def _moments(state):
    return state.mean, state.var


def moment_statistics(cfg, samples, seed, gammas, block_size=1024, threads=1):
    """Monte Carlo L^2(Omega) norms along the scheme path.

    Returns ``sup_m ||(-A)^gamma Y_m||`` for each gamma, ``||(-A)^(1/2) Y_M||``
    and ``sup_m ||Ytilde(t_m + tau/2) - Y_m||``.
    """
    n, M, tau = cfg.n, cfg.M, cfg.tau
    q = cfg.cov.q(n)
    weights = [power_factors(n, 2 * g) for g in gammas]

    def block(streams):
        # rows: per-gamma squared norms at each m, then increments at each m
        out = np.zeros((len(gammas) * (M + 1) + M + 1, len(streams)))

        def observe(m, y):
            sq = y * y
            for i, w in enumerate(weights):
                out[i * (M + 1) + m] = sq @ w
            if m == M:
                out[-1] = sq @ eigenvalues(n)
                return
            z = rng.standard_normals(seed, streams, m, n, rng.LANE_SPLIT_A)
            s = 0.5 * tau
            yt = extension_batch(cfg, y, s, np.sqrt(s * q) * z)
            out[len(gammas) * (M + 1) + m] = np.sum((yt - y) ** 2, axis=-1)

        endpoints_batch(cfg, seed, streams, observer=observe)
        return out

    data = map_blocks(block, samples, block_size, threads, axis=1)
    means = np.array([math.fsum(row) / samples for row in data])
    sup_gamma = [
        float(np.sqrt(means[i * (M + 1):(i + 1) * (M + 1)].max())) for i in range(len(gammas))
    ]
    incr = float(np.sqrt(means[len(gammas) * (M + 1):len(gammas) * (M + 1) + M].max()))
    h1 = float(np.sqrt(means[-1]))
    return {"sup_power_norms": sup_gamma, "h1_endpoint": h1, "increment": incr}


def run_moment_diagnostics(plan, threads=1):
    cfg = plan.base
    samples = max(plan.samples, 2)
    rows = []
    for tau in plan.sweep:
        M = _steps_for(cfg.T, tau)
        st = moment_statistics(cfg.with_steps(M), samples, plan.seed, plan.gammas,
                               plan.block_size, threads)
        row = {"h": tau, "M": M, "samples": samples, "h1_endpoint": st["h1_endpoint"],
               "increment": st["increment"]}
        for g, v in zip(plan.gammas, st["sup_power_norms"]):
            row[f"sup_gamma_{g:g}"] = v
        rows.append(row)
    columns = tuple(rows[0].keys())
    summary = {}
    checks = {}
    tol = plan.tolerances
    taus = [r["h"] for r in rows]
    for key, label in (("increment", "increment_slope"), ("h1_endpoint", "h1_slope")):
        vals = [r[key] for r in rows]
        if len(taus) >= 3 and all(v > 0 for v in vals):
            fit = fit_rate([(t, v, 0.0) for t, v in zip(taus, vals)])
            summary[label] = fit.slope
        else:
            summary[label] = None
    for g in plan.gammas:
        vals = [r[f"sup_gamma_{g:g}"] for r in rows]
        lo, hi = min(vals), max(vals)
        summary[f"variation_gamma_{g:g}"] = (hi - lo) / hi if hi > 0 else 0.0
    if "increment_slope_min" in tol and summary["increment_slope"] is not None:
        checks["increment_slope"] = summary["increment_slope"] >= tol["increment_slope_min"]
    if "h1_slope_min" in tol and summary["h1_slope"] is not None:
        checks["h1_slope"] = summary["h1_slope"] >= tol["h1_slope_min"]
    if "moment_variation_max" in tol:
        g = float(tol.get("moment_gamma", 0.2))
        checks["moment_bounded"] = summary[f"variation_gamma_{g:g}"] < tol["moment_variation_max"]
    return ExperimentResult(plan.experiment, rows, columns, summary, checks)


def run_representation(plan, threads=1):
    tol = plan.tolerances
    rep = verify_representation(
        plan.base,
        plan.functional,
        quadrature_nodes=plan.quadrature_nodes,
        samples=plan.samples,
        seed=plan.seed,
        atol=float(tol.get("representation_atol", 1e-6)),
        n_stderr=float(tol.get("n_stderr", 4.0)),
        threads=threads,
        fd_step=float(plan.config.get("mc", {}).get("fd_step", 1e-2)),
        refinement=plan.refinement,
    )
    row = rep.to_dict()
    return ExperimentResult(plan.experiment, [row], tuple(row.keys()), row,
                            {"representation": rep.passed})


def run_assumption_check(plan, threads=1):
    spec = plan.base.nonlinearity
    samples = max(plan.samples, 1)
    path = rng.SeedPath(plan.seed)
    rows = []
    for n in plan.sweep:
        rep = check_assumption_31(spec, n, samples=samples, path=path,
                                  bound=plan.tolerances.get("bound"))
        rows.append({"n": n, **rep.ratios, "bound": rep.bound, "ok": rep.ok})
    checks = {"within_bound": all(r["ok"] for r in rows)}
    growth = {}
    for a, b in zip(rows, rows[1:]):
        for key in ("growth", "first_derivative", "second_derivative", "dual_smoothing"):
            if a[key] > 0:
                growth[f"{key}_{a['n']}_{b['n']}"] = b[key] / a[key]
    if "max_growth" in plan.tolerances:
        checks["stable_in_n"] = all(v <= plan.tolerances["max_growth"] for v in growth.values())
    return ExperimentResult(plan.experiment, rows, tuple(rows[0].keys()),
                            {"growth_ratios": growth, "grid_check": spec.check_growth()}, checks)


def run_simulate(plan, threads=1):
    cfg = plan.base
    path = integrate(cfg, rng.SeedPath(plan.seed))
    rows = [
        {"k": k + 1, "x0": float(cfg.x0.coeffs[k]), "yM": float(path.endpoint.coeffs[k])}
        for k in range(cfg.n)
    ]
    summary = {"n": cfg.n, "M": cfg.M, "tau": cfg.tau, "T": cfg.T,
               "l2_norm_endpoint": path.endpoint.norm()}
    return ExperimentResult(plan.experiment, rows, ("k", "x0", "yM"), summary, {})


RUNNERS = {
    "simulate": run_simulate,
    "weak_rate_time": run_weak_rate_time,
    "weak_rate_spatial": run_weak_rate_spatial,
    "representation_check": run_representation,
    "moment_diagnostics": run_moment_diagnostics,
    "assumption_check": run_assumption_check,
}


def run(plan, threads=1):
    return RUNNERS[plan.experiment](plan, threads)


# -- outputs ---------------------------------------------------------------------

def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def describe_version():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--tags"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"spdeweak-{__version__}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def render_csv(result, seed, cfg):
    buf = io.StringIO()
    buf.write(f"# version: {describe_version()}\n")
    buf.write(f"# experiment: {result.experiment}\n")
    buf.write(f"# seed: {seed}\n")
    buf.write(f"# config_sha256: {config_hash(cfg)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(row.get(c)) for c in result.columns])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render_json(result, seed, cfg):
    doc = {
        "experiment": result.experiment,
        "version": describe_version(),
        "seed": seed,
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "rows": result.rows,
        "summary": result.summary,
        "checks": result.checks,
        "passed": result.passed,
    }
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_outputs(result, prefix, seed, cfg):
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = Path(f"{prefix}.csv")
    csv_path.write_text(render_csv(result, seed, cfg))
    rate_runs = ("weak_rate_time", "weak_rate_spatial", "simulate")
    suffix = ".summary.json" if result.experiment in rate_runs else ".report.json"
    json_path = Path(f"{prefix}{suffix}")
    json_path.write_text(render_json(result, seed, cfg))
    return csv_path, json_path
