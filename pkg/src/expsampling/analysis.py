"""Error tables, rate fits and quantitative probes of the approximation theorems."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (AtNumericFloorError, BoundViolatedError, ConditionViolationError,
                     InsufficientDataError, MissingDerivativeError)
from .kernels import Kernel, absolute_moment, moment
from .mellin_core import GridSpec, TestFunction, to_log
from .operators import (SamplingConfig, generalized_series, kantorovich_series,
                        safe_margin)

NUMERIC_FLOOR = 1e-13
# Rows below this are treated as exact reproduction and left out of fits.
FIT_FLOOR = 10 * NUMERIC_FLOOR

SUPERCONVERGENT = "superconvergent-constant"
SATURATED = "saturated-at-1/w"
INCONCLUSIVE = "inconclusive"


def exactness_floor(kernel: Kernel, cfg: SamplingConfig | None = None) -> float:
    """Error level that counts as exact reproduction.

    Truncated sums of decaying kernels cannot beat their tail tolerance.
    """
    if kernel.compact:
        return FIT_FLOOR
    return max(FIT_FLOOR, (cfg or SamplingConfig(1.0)).eps)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


@dataclass
class ErrorRow:
    w: float
    sup_error: float
    theory_bound: Optional[float] = None

    @property
    def w_times_error(self) -> float:
        return self.w * self.sup_error


@dataclass
class ErrorTable:
    rows: list
    fitted_rate: Optional[float] = None
    fit_r2: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.w)

    @property
    def w(self):
        return np.array([r.w for r in self.rows])

    @property
    def errors(self):
        return np.array([r.sup_error for r in self.rows])

    def fit(self):
        """Fill fitted_rate/fit_r2 when possible; constants leave them None."""
        try:
            self.fitted_rate, self.fit_r2 = rate_fit(self)
        except (AtNumericFloorError, InsufficientDataError):
            self.fitted_rate = self.fit_r2 = None
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["w", "sup_error", "theory_bound", "w_times_error"])
        for r in self.rows:
            writer.writerow([_fmt(r.w), _fmt(r.sup_error), _fmt(r.theory_bound),
                             _fmt(r.w_times_error)])
        return buf.getvalue()

    def to_dict(self):
        return {
            "rows": [{"w": r.w, "sup_error": r.sup_error, "theory_bound": r.theory_bound,
                      "w_times_error": r.w_times_error} for r in self.rows],
            "fitted_rate": self.fitted_rate,
            "fit_r2": self.fit_r2,
            **self.meta,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def window_points(grid: GridSpec, kernel: Kernel, w: float):
    """Grid log-points shrunk by at least the truncation margin of ``kernel`` at ``w``."""
    return grid.points(max(grid.margin, safe_margin(kernel, w)))


def sup_error(f: TestFunction, kernel: Kernel, cfg: SamplingConfig, grid: GridSpec,
              operator="I"):
    """max over the safe window of |op f(x) - f(x)|, op in {"S", "I"}."""
    series = {"I": kantorovich_series, "S": generalized_series}[operator]
    v = window_points(grid, kernel, cfg.w)
    return float(np.max(np.abs(series(f, kernel, cfg, np.exp(v)) - f.at_log(v))))


def error_table(f, kernel, w_list, grid, operator="I", cfg: SamplingConfig | None = None):
    base = cfg or SamplingConfig(1.0)
    rows = [ErrorRow(float(w), sup_error(f, kernel, replace(base, w=float(w)), grid, operator))
            for w in w_list]
    return ErrorTable(rows, meta={"function": f.id, "kernel": kernel.descriptor,
                                  "operator": operator})


def rate_fit(table: ErrorTable):
    """Negated least-squares slope of log(error) against log(w), and its r^2."""
    w, e = table.w, table.errors
    keep = e > FIT_FLOOR
    if not np.any(keep):
        raise AtNumericFloorError("all errors are at the numeric floor")
    if np.count_nonzero(keep) < 3:
        raise InsufficientDataError("need at least 3 rows above the numeric floor")
    lx, ly = np.log(w[keep]), np.log(e[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(-slope), r2


@dataclass
class VoronovskayaRow:
    w: float
    theorem_deviation: float
    corollary_deviation: float


def voronovskaya_probe(f: TestFunction, kernel: Kernel, x, w_list, eps=1e-10):
    """Deviations from the two asymptotic formulas at a point x.

    theorem:    |w (S_w f(x) - f(x)) - m_1 theta f(x)|
    corollary:  |w (S_w f(x e^{1/(2w)}) - f(x)) - (2 m_1 + 1) theta f(x) / 2|
    """
    if f.theta_log is None:
        raise MissingDerivativeError(f"{f.id} has no analytic Mellin derivative")
    m1 = moment(kernel, 1, 1.0)
    v = float(to_log(x))
    fx = float(f.at_log(v))
    th = float(f.theta_log(np.array(v)))
    rows = []
    for w in w_list:
        cfg = SamplingConfig(float(w), eps=eps)
        s_at = generalized_series(f, kernel, cfg, math.exp(v))
        s_shift = generalized_series(f, kernel, cfg, math.exp(v + 0.5 / w))
        rows.append(VoronovskayaRow(
            float(w),
            abs(w * (s_at - fx) - m1 * th),
            abs(w * (s_shift - fx) - (2 * m1 + 1) * th / 2)))
    return rows


def direct_bound(alpha, K, w, M_alpha1, M0):
    """K w^-alpha / (alpha + 1) ((2^alpha - 1) M_{alpha+1} + M_0)."""
    return K * w ** (-alpha) / (alpha + 1) * ((2**alpha - 1) * M_alpha1 + M0)


def direct_bound_check(f: TestFunction, kernel: Kernel, cfg: SamplingConfig | None,
                       grid: GridSpec, w_list, raise_on_violation=True) -> ErrorTable:
    """Sup errors of I_w next to the direct-theorem bound for log-Hoelder f."""
    if f.log_holder is None:
        raise ValueError(f"{f.id} has no registered log-Hoelder class")
    alpha, K = f.log_holder.alpha, f.log_holder.K
    M_a1 = absolute_moment(kernel, alpha + 1)
    M0 = absolute_moment(kernel, 0.0)
    table = error_table(f, kernel, w_list, grid, "I", cfg)
    for row in table.rows:
        row.theory_bound = direct_bound(alpha, K, row.w, M_a1, M0)
    table.meta.update({"alpha": alpha, "K": K, "M_alpha_plus_1": M_a1, "M_0": M0})
    table.fit()
    slack = NUMERIC_FLOOR if kernel.compact else exactness_floor(kernel, cfg)
    bad = [r for r in table.rows if r.sup_error > r.theory_bound + slack]
    table.meta.update({"slack": slack, "bound_violations": len(bad)})
    if bad and raise_on_violation:
        raise BoundViolatedError(
            f"direct bound violated for {f.id} with {kernel.descriptor} at "
            f"w={[r.w for r in bad]}", rows=bad)
    return table


@dataclass
class SaturationVerdict:
    verdict: str
    table: ErrorTable
    m1: float

    @property
    def fitted_rate(self):
        return self.table.fitted_rate


def saturation_probe(f: TestFunction, kernel: Kernel, cfg: SamplingConfig | None,
                     grid: GridSpec, w_list, stabilization=0.1, rate_slack=0.1):
    """Classify the convergence of I_w f as superconvergent, saturated at 1/w, or neither."""
    m1 = moment(kernel, 1, 1.0)
    if abs(m1 + 0.5) < 1e-9:
        raise ConditionViolationError("saturation order needs m_1 != -1/2")
    table = error_table(f, kernel, w_list, grid, "I", cfg).fit()
    e = table.errors
    floor = exactness_floor(kernel, cfg)
    if np.max(e) <= floor:
        return SaturationVerdict(SUPERCONVERGENT, table, m1)
    we = np.array([r.w_times_error for r in table.rows])
    stable = len(we) >= 2 and abs(we[-1] - we[-2]) <= stabilization * we[-1]
    rate = table.fitted_rate
    if stable and e[-1] > floor and rate is not None and rate <= 1 + rate_slack:
        return SaturationVerdict(SATURATED, table, m1)
    return SaturationVerdict(INCONCLUSIVE, table, m1)


def holder_quotient(f: TestFunction, alpha: float, points):
    """sup over pairs of |f(x) - f(y)| / |log x - log y|^alpha on the given log-points."""
    v = np.asarray(points, dtype=float)
    vals = f.at_log(v)
    i, j = np.triu_indices(v.size, k=1)
    dist = np.abs(v[i] - v[j])
    keep = dist > 0
    return float(np.max(np.abs(vals[i] - vals[j])[keep] / dist[keep] ** alpha))


@dataclass
class InverseVerdict:
    verdict: str
    fitted_rate: Optional[float]
    alpha: float
    holder_quotient: float
    quotient_bound: Optional[float]
    empirical_constant: float
    M0_theta: float
    M1_theta: float
    table: ErrorTable


def inverse_probe(f: TestFunction, kernel: Kernel, cfg: SamplingConfig | None,
                  grid: GridSpec, w_list, alpha: float, rate_slack=0.05):
    """Consistency check of the inverse theorem: O(w^-alpha) error implies f in L_alpha.

    When the fitted rate reaches alpha - rate_slack, the log-Hoelder quotient
    of f on the grid is computed and compared with the registered constant
    (if any).  This is a consistency check, not a proof.
    """
    M0t = absolute_moment(kernel, 0.0, theta=True)
    M1t = absolute_moment(kernel, 1.0, theta=True)
    if not math.isfinite(M1t):
        raise ConditionViolationError("M_1(theta chi) must be finite")
    table = error_table(f, kernel, w_list, grid, "I", cfg).fit()
    e = table.errors
    emp = float(np.max(e * table.w**alpha))
    quotient = holder_quotient(f, alpha, grid.points())
    bound = None
    if f.log_holder is not None and f.log_holder.alpha >= alpha:
        span = grid.log_hi - grid.log_lo
        bound = f.log_holder.K * max(1.0, span) ** (f.log_holder.alpha - alpha)
    rate = table.fitted_rate
    at_floor = np.max(e) <= exactness_floor(kernel, cfg)
    if at_floor or (rate is not None and rate >= alpha - rate_slack):
        ok = math.isfinite(quotient) and (bound is None or quotient <= bound + NUMERIC_FLOOR)
        verdict = "consistent" if ok else "inconsistent"
    else:
        verdict = INCONCLUSIVE
    return InverseVerdict(verdict, rate, alpha, quotient, bound, emp, M0t, M1t, table)


def non_increasing(values, margin=0.0, floor=FIT_FLOOR):
    """True when each value is at most (1 + margin) times its predecessor.

    Values below ``floor`` count as converged and are not compared.
    """
    values = list(values)
    return all(b <= max(a * (1 + margin), floor) for a, b in zip(values, values[1:]))
