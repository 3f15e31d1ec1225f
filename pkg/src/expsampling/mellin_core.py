"""Mellin calculus in the logarithmic coordinate ``v = log x``.

Every function on the positive half-line is handled through its log-domain
representation ``v -> f(e^v)``.  In that coordinate the Mellin derivative
``(theta f)(x) = x f'(x)`` is the ordinary derivative, the Mellin
anti-derivative is an ordinary integral and the Mellin transform on the
line ``c = 0`` is a Fourier-type integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (InvalidGridError, MissingDerivativeError,
                     NumericDomainError, UnsupportedOrderError)
from .quadrature import DEFAULT_TOL, adaptive_quad, integrate_segments

H_FD = 1e-5
DEFAULT_TRANSFORM_RADIUS = 40.0

LogFunc = Callable[[np.ndarray], np.ndarray]


def to_log(x):
    """Natural log of strictly positive input; raises on x <= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise NumericDomainError("argument must be strictly positive and finite")
    return np.log(x)


@dataclass(frozen=True)
class LogHolder:
    """|f(x) - f(y)| <= K |log x - log y|^alpha."""
    alpha: float
    K: float


@dataclass(frozen=True)
class TestFunction:
    """A target function registered with its log-domain closures.

    ``log_func(v)`` evaluates ``f(e^v)``; ``theta_log`` and ``theta2_log``
    (optional) evaluate the first two Mellin derivatives in the same
    coordinate.  ``kinks(lo, hi)`` lists log-points where ``f`` is not
    smooth; quadrature routines split there.
    """

    __test__ = False  # keep pytest from collecting this class

    id: str
    log_func: LogFunc
    theta_log: Optional[LogFunc] = None
    theta2_log: Optional[LogFunc] = None
    antiderivative_base: float = 1.0
    bounded: bool = True
    log_uniformly_continuous: bool = True
    log_holder: Optional[LogHolder] = None
    is_constant: bool = False
    kinks: Optional[Callable[[float, float], np.ndarray]] = None
    description: str = ""
    support: Optional[tuple[float, float]] = field(default=None)

    def __call__(self, x):
        return self.at_log(to_log(x))

    def at_log(self, v):
        vals = np.asarray(self.log_func(np.asarray(v, dtype=float)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericDomainError(f"{self.id} returned a non-finite value")
        return vals

    def breakpoints(self, lo, hi):
        if self.kinks is None:
            return np.empty(0)
        pts = np.asarray(self.kinks(lo, hi), dtype=float)
        return pts[(pts > lo) & (pts < hi)]

    @property
    def flags(self):
        out = {"bounded": self.bounded,
               "log_uniformly_continuous": self.log_uniformly_continuous}
        if self.log_holder is not None:
            out["log_holder"] = [self.log_holder.alpha, self.log_holder.K]
        return out


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid in log-coordinate over [log_lo + margin, log_hi - margin]."""
    log_lo: float
    log_hi: float
    count: int
    margin: float = 0.0

    def __post_init__(self):
        if not self.log_lo < self.log_hi:
            raise InvalidGridError("log_lo must be < log_hi")
        if self.count < 2:
            raise InvalidGridError("count must be >= 2")
        if self.margin < 0:
            raise InvalidGridError("margin must be >= 0")

    def points(self, margin=None):
        m = self.margin if margin is None else margin
        lo, hi = self.log_lo + m, self.log_hi - m
        if not lo < hi:
            raise InvalidGridError(f"margin {m:g} empties the window")
        return np.linspace(lo, hi, self.count)

    @property
    def spacing(self):
        return (self.log_hi - self.log_lo - 2 * self.margin) / (self.count - 1)


@dataclass(frozen=True)
class MellinTransformQuery:
    s: float
    c: float = 0.0
    truncation_radius: float = DEFAULT_TRANSFORM_RADIUS
    quadrature_tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        if self.truncation_radius <= 0:
            raise ValueError("truncation_radius must be positive")
        if self.quadrature_tolerance <= 0:
            raise ValueError("quadrature_tolerance must be positive")


@dataclass(frozen=True)
class MellinTransformResult:
    value: complex
    truncation_sound: bool
    endpoint_magnitude: float


def _fd_first(g, v, h):
    return (g(v + h) - g(v - h)) / (2 * h)


def mellin_derivative(f: TestFunction, x, order=1, h=H_FD, use_analytic=True):
    """theta^order f at x (order 1 or 2).

    Uses the registered analytic closure when present, otherwise central
    differences in v = log x; order 2 nests the first-order stencil.
    """
    if order not in (1, 2):
        raise UnsupportedOrderError(f"Mellin derivative of order {order} not supported")
    v = to_log(x)
    analytic = f.theta_log if order == 1 else f.theta2_log
    if use_analytic and analytic is not None:
        out = np.asarray(analytic(v), dtype=float)
    elif order == 1:
        out = _fd_first(f.at_log, v, h)
    else:
        out = _fd_first(lambda u: _fd_first(f.at_log, u, h), v, h)
    if not np.all(np.isfinite(out)):
        raise NumericDomainError(f"non-finite Mellin derivative of {f.id}")
    return out


def log_antiderivative(f: TestFunction, v, base_log=None, tol=DEFAULT_TOL):
    """F(e^v) = int_{base}^{v} f(e^u) du for scalar or array v."""
    base = np.log(f.antiderivative_base) if base_log is None else float(base_log)
    vs = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty_like(vs)
    for i, vi in enumerate(vs):
        out[i] = adaptive_quad(f.at_log, base, vi, tol=tol,
                               breakpoints=f.breakpoints(min(base, vi), max(base, vi)))
    return out.reshape(np.shape(v)) if np.ndim(v) else float(out[0])


def log_antiderivative_nodes(f: TestFunction, nodes, base_log=None, tol=DEFAULT_TOL):
    """F at an increasing array of log-nodes, by cumulative per-cell integrals.

    One batched adaptive pass over all cells; used to build node caches.
    """
    nodes = np.asarray(nodes, dtype=float)
    base = np.log(f.antiderivative_base) if base_log is None else float(base_log)
    lo, hi = min(base, nodes[0]), max(base, nodes[-1])
    edges = np.unique(np.concatenate([nodes, [base], f.breakpoints(lo, hi)]))
    cells = integrate_segments(f.at_log, edges, tol=tol)
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    cum -= cum[np.searchsorted(edges, base)]
    return cum[np.searchsorted(edges, nodes)]


def mellin_antiderivative(f: TestFunction, x, tol=DEFAULT_TOL):
    """Mellin anti-derivative F(x) = int_a^x f(t) dt/t from the base point a.

    Negative for x < a.  The base point only shifts F by a constant.
    """
    return log_antiderivative(f, to_log(x), tol=tol)


def _log_callable(obj):
    for name in ("log_values", "at_log"):
        fn = getattr(obj, name, None)
        if fn is not None:
            return fn
    if callable(obj):
        return obj
    raise TypeError(f"cannot evaluate {obj!r} in log coordinate")


def mellin_transform(obj, query: MellinTransformQuery) -> MellinTransformResult:
    """Truncated Mellin transform int f(e^v) e^{(c + i s) v} dv over [-R, R].

    ``obj`` is a TestFunction, a kernel, or a bare log-domain callable.
    """
    g = _log_callable(obj)
    R = query.truncation_radius
    c, s = query.c, query.s
    bps = ()
    if hasattr(obj, "breakpoints"):
        bps = tuple(np.asarray(obj.breakpoints(-R, R)))

    def re(v):
        return g(v) * np.exp(c * v) * np.cos(s * v)

    def im(v):
        return g(v) * np.exp(c * v) * np.sin(s * v)

    tol = query.quadrature_tolerance
    value = complex(adaptive_quad(re, -R, R, tol=tol, breakpoints=bps),
                    adaptive_quad(im, -R, R, tol=tol, breakpoints=bps))
    ends = float(np.max(np.abs(g(np.array([-R, R])) * np.exp(c * np.array([-R, R])))))
    return MellinTransformResult(value, ends <= tol, ends)


def log_modulus_of_continuity(f: TestFunction, delta, grid: GridSpec):
    """Grid estimate of omega(f, delta) = sup |f(u) - f(v)| over |log u - log v| <= delta.

    Only pairs of grid points are compared, so this is a lower estimate of
    the true supremum over the half-line.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    v = grid.points()
    vals = f.at_log(v)
    h = grid.spacing
    max_shift = min(int(np.floor(delta / h * (1 + 1e-9))), v.size - 1)
    if max_shift < 1:
        raise InvalidGridError(f"no grid pairs within delta={delta:g} (spacing {h:g})")
    best = 0.0
    for m in range(1, max_shift + 1):
        best = max(best, float(np.max(np.abs(vals[m:] - vals[:-m]))))
    return best


def mellin_taylor_eval(f: TestFunction, x, t, n=1):
    """Degree-n Mellin Taylor polynomial of f about x, evaluated at t*x."""
    if n not in (1, 2):
        raise UnsupportedOrderError(f"Taylor order {n} not supported")
    if f.theta_log is None or (n == 2 and f.theta2_log is None):
        raise MissingDerivativeError(f"{f.id} has no analytic theta^{n}")
    v = to_log(x)
    lt = to_log(t)
    out = f.at_log(v) + f.theta_log(v) * lt
    if n == 2:
        out = out + 0.5 * f.theta2_log(v) * lt**2
    return out
