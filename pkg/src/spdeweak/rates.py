"""Log-log least-squares fits of error against a discretisation parameter."""

from dataclasses import dataclass, asdict
import math
import warnings

import numpy as np
from scipy import stats

from .errors import FitError

NOISE_FLOOR = 4.0


@dataclass(frozen=True)
class RateFit:
    points: tuple
    slope: float
    intercept: float
    slope_ci: tuple
    r_squared: float
    weighted: bool
    excluded: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["points"] = [list(p) for p in self.points]
        d["excluded"] = [list(p) for p in self.excluded]
        d["slope_ci"] = list(self.slope_ci)
        return d


def usable_points(points, noise_floor=NOISE_FLOOR):
    """Split points into (kept, excluded).

    A point is excluded when its error is not positive or, if it carries a
    standard error, when ``error < noise_floor * stderr``.
    """
    kept, excluded = [], []
    for p in points:
        h, err = float(p[0]), float(p[1])
        se = float(p[2]) if len(p) > 2 else 0.0
        if not (h > 0 and err > 0) or (se > 0 and err < noise_floor * se):
            excluded.append((h, err, se))
        else:
            kept.append((h, err, se))
    return kept, excluded


def fit_rate(points, noise_floor=NOISE_FLOOR, confidence=0.95):
    """Fit ``log error = intercept + slope * log h``.

    If every usable point has a positive stderr, points are weighted by the
    inverse variance of ``log error`` (``(error / stderr)^2``) and the slope
    interval uses those known variances; otherwise an ordinary fit with a
    Student-t interval is returned.
    """
    kept, excluded = usable_points(points, noise_floor)
    if excluded:
        warnings.warn(f"{len(excluded)} point(s) excluded from rate fit (noise floor or <= 0)")
    if len(kept) < 3:
        raise FitError(f"need at least 3 usable points, have {len(kept)}")
    h = np.array([p[0] for p in kept])
    err = np.array([p[1] for p in kept])
    se = np.array([p[2] for p in kept])
    x, y = np.log(h), np.log(err)
    X = np.column_stack([np.ones_like(x), x])
    weighted = bool(np.all(se > 0))
    w = (err / se) ** 2 if weighted else np.ones_like(x)
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ (XtW @ y)
    resid = y - X @ beta
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(kept) - 2
    if weighted:
        half = stats.norm.ppf(0.5 + confidence / 2) * math.sqrt(cov[1, 1])
    else:
        s2 = ss_res / dof if dof > 0 else 0.0
        half = stats.t.ppf(0.5 + confidence / 2, dof) * math.sqrt(s2 * cov[1, 1])
    slope = float(beta[1])
    return RateFit(
        points=tuple(kept),
        slope=slope,
        intercept=float(beta[0]),
        slope_ci=(slope - half, slope + half),
        r_squared=r2,
        weighted=weighted,
        excluded=tuple(excluded),
    )
