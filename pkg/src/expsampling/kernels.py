"""Sampling kernels on the positive half-line and their certification.

Kernels are evaluated in the log coordinate: ``k.log_values(v)`` returns
``chi(e^v)``.  The kernel conditions are checked numerically:

* partition of unity  sum_k chi(e^{-k} u) = 1,
* constant first moment  m_1(chi, u) = sum_k chi(e^{-k} u) (k - log u),
* finite absolute moments M_beta(chi),
* vanishing weighted tails of sum_k |chi(e^{-k} x^w)| |w log x - k|.

Compactly log-supported kernels are summed exactly.  Kernels with algebraic
decay |chi(e^v)| <= A |v|^-p are truncated at a radius chosen from that
bound, and reported sums of absolute values carry the rigorous tail bound.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConditionViolationError, ExpSamplingError
from .mellin_core import H_FD, GridSpec, to_log
from .quadrature import fixed_gauss, gauss_legendre, integrate_segments

DEFAULT_EPS = 1e-10
# Cap on the explicit summation radius for absolute-moment sums of
# decaying kernels; the remainder is covered by the analytic tail bound.
ABS_MOMENT_RADIUS = 2000
_CHUNK = 4_000_000


class Kernel:
    """Base class.  Subclasses implement ``log_values`` and ``theta_log``."""

    log_support: Optional[float] = None
    decay_exponent: Optional[float] = None
    decay_constant: Optional[float] = None
    theta_decay_constant: Optional[float] = None
    decay_from: float = 0.0
    knot_offset: Optional[float] = None
    family: str = "Custom"

    def log_values(self, v):
        raise NotImplementedError

    def theta_log(self, v):
        v = np.asarray(v, dtype=float)
        return (self.log_values(v + H_FD) - self.log_values(v - H_FD)) / (2 * H_FD)

    def __call__(self, t):
        return self.log_values(to_log(t))

    def theta(self, t):
        return self.theta_log(to_log(t))

    @property
    def params(self) -> dict:
        return {}

    @property
    def descriptor(self) -> str:
        return self.family

    def __repr__(self):
        return self.descriptor

    @property
    def compact(self) -> bool:
        return self.log_support is not None

    def breakpoints(self, lo, hi):
        """Knots of the piecewise-polynomial kernels inside (lo, hi)."""
        if self.knot_offset is None:
            return np.empty(0)
        j = np.arange(math.ceil(lo - self.knot_offset), math.floor(hi - self.knot_offset) + 1)
        pts = self.knot_offset + j
        if self.log_support is not None:
            pts = pts[np.abs(pts) <= self.log_support]
        return pts[(pts > lo) & (pts < hi)]

    def tail_bound(self, radius, power=0.0, theta=False):
        """Upper bound on sum_{|v - k| > radius} |chi(v - k)| |v - k|^power, uniform in v."""
        if self.compact:
            if radius >= self.log_support:
                return 0.0
            raise ValueError("tail_bound below the support radius of a compact kernel")
        A = self.theta_decay_constant if theta else self.decay_constant
        if self.decay_exponent is None or A is None:
            raise ConditionViolationError(f"{self.descriptor} declares no decay bound")
        s = self.decay_exponent - power
        if s <= 1:
            raise ConditionViolationError(
                f"{self.descriptor}: sum with weight |v|^{power:g} is not summable "
                f"(decay exponent {self.decay_exponent:g})")
        r = max(float(radius), self.decay_from, 1.0)
        return 2 * A * (r ** -s + r ** (1 - s) / (s - 1))

    def truncation_radius(self, eps=DEFAULT_EPS, power=0.0, theta=False):
        """Smallest convenient radius whose tail bound is <= eps."""
        if self.compact:
            return float(self.log_support)
        A = self.theta_decay_constant if theta else self.decay_constant
        if self.decay_exponent is None or A is None:
            raise ConditionViolationError(f"{self.descriptor} declares no decay bound")
        s = self.decay_exponent - power
        if s <= 1:
            raise ConditionViolationError(
                f"{self.descriptor}: weight |v|^{power:g} is not summable")
        r = max((4 * A / eps) ** (1 / s), (4 * A / ((s - 1) * eps)) ** (1 / (s - 1)),
                self.decay_from, 1.0)
        return float(math.ceil(r))


def _bspline_raw(n, v):
    # closed form on the left half (v <= 0), where the fewest terms are active
    out = np.zeros(np.shape(v))
    for j in range(n):
        out += (-1) ** j * math.comb(n, j) * np.maximum(n / 2 + v - j, 0.0) ** (n - 1)
    return out / math.factorial(n - 1)


def _int_power(x, m):
    out = None
    base = x
    while m:
        if m & 1:
            out = base if out is None else out * base
        m >>= 1
        if m:
            base = base * base
    return np.ones_like(x) if out is None else out


@lru_cache(maxsize=None)
def _bspline(n):
    return BSplineKernel(n)


class BSplineKernel(Kernel):
    """Mellin B-spline of order n: B_n(log t), supported on |log t| <= n/2."""

    family = "BSpline"

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise ValueError("BSpline order must be an integer >= 1")
        self.n = int(n)
        self.log_support = self.n / 2
        self.knot_offset = (self.n / 2) % 1.0

    @property
    def params(self):
        return {"n": self.n}

    @property
    def descriptor(self):
        return f"BSpline({self.n})"

    def log_values(self, v):
        v = np.asarray(v, dtype=float)
        if self.n == 1:
            return ((v >= -0.5) & (v < 0.5)).astype(float)
        a = -np.abs(v)
        return np.where(a <= -self.log_support, 0.0, _bspline_raw(self.n, a))

    def theta_log(self, v):
        # B_n' = B_{n-1}(v + 1/2) - B_{n-1}(v - 1/2); right limits at knots
        v = np.asarray(v, dtype=float)
        if self.n == 1:
            return np.zeros_like(v)
        lower = _bspline(self.n - 1)
        return lower.log_values(v + 0.5) - lower.log_values(v - 0.5)

    def __eq__(self, other):
        return isinstance(other, BSplineKernel) and other.n == self.n

    def __hash__(self):
        return hash(("BSpline", self.n))


def _sinc_power_integral(n, periods=4000, tol=1e-13):
    """int_{-inf}^{inf} (sin t / t)^{2n} dt by period-wise adaptive quadrature.

    Integrates over [0, periods*pi] and adds the mean-value tail
    binom(2n, n)/4^n * R^{1-2n}/(2n-1); with R a multiple of pi the
    neglected oscillatory part is O(R^{-2n-1}).
    """
    R = periods * math.pi
    edges = math.pi * np.arange(periods + 1)
    head = float(np.sum(integrate_segments(
        lambda t: np.sinc(t / math.pi) ** (2 * n), edges, tol=tol)))
    tail = math.comb(2 * n, n) / 4**n * R ** (1 - 2 * n) / (2 * n - 1)
    return 2 * (head + tail)


@lru_cache(maxsize=None)
def jackson_normalization(alpha: float, n: int) -> float:
    """C_{alpha,n} with C^{-1} = int_0^inf sinc^{2n}(log x / (2 alpha n pi)) dx/x.

    sinc(u) = sin(pi u)/(pi u).  Substituting t = log x / (2 alpha n) gives
    C^{-1} = 2 alpha n int (sin t / t)^{2n} dt.
    """
    if alpha < 1 or int(n) != n or n < 1:
        raise ValueError("Jackson kernel needs alpha >= 1 and integer n >= 1")
    return 1.0 / (2 * alpha * n * _sinc_power_integral(int(n)))


class JacksonKernel(Kernel):
    """Mellin Jackson kernel C sinc^{2n}(log x / (2 alpha n pi)) at c = 0."""

    family = "Jackson"

    def __init__(self, alpha: float, n: int):
        if alpha < 1 or int(n) != n or n < 1:
            raise ValueError("Jackson kernel needs alpha >= 1 and integer n >= 1")
        self.alpha = float(alpha)
        self.n = int(n)
        self.normalization = jackson_normalization(self.alpha, self.n)
        self.rho = 1.0 / (2 * self.alpha * self.n)
        self.decay_exponent = 2.0 * self.n
        scale = 2 * self.alpha * self.n
        # |sinc| <= 1/(rho |v|) and |cos - sinc| <= 2
        self.decay_constant = self.normalization * scale ** (2 * self.n)
        self.theta_decay_constant = 4 * self.n * self.normalization * scale ** (2 * self.n - 1)

    @property
    def params(self):
        return {"alpha": self.alpha, "n": self.n}

    @property
    def descriptor(self):
        return f"Jackson({self.alpha:g},{self.n})"

    def log_values(self, v):
        v = np.asarray(v, dtype=float)
        return self.normalization * _int_power(np.sinc(self.rho * v / math.pi), 2 * self.n)

    def theta_log(self, v):
        # d/dv C s^{2n}, s = sin(rho v)/(rho v):  2n C s^{2n-1} (cos(rho v) - s) / v
        v = np.asarray(v, dtype=float)
        y = self.rho * v
        s = np.sinc(y / math.pi)
        small = np.abs(y) < 1e-4
        ysafe = np.where(small, 1.0, y)
        ratio = np.where(small, self.rho * (-y / 3 + y**3 / 30),
                         self.rho * (np.cos(ysafe) - s) / ysafe)
        return 2 * self.n * self.normalization * _int_power(s, 2 * self.n - 1) * ratio

    def __eq__(self, other):
        return (isinstance(other, JacksonKernel) and other.alpha == self.alpha
                and other.n == self.n)

    def __hash__(self):
        return hash(("Jackson", self.alpha, self.n))


class AveragedKernel(Kernel):
    """chi_bar(t) = int_{-1/2}^{1/2} chi(t e^p) dp.

    Evaluated with Gauss-Legendre on p, split at the inner kernel's knots so
    piecewise-polynomial kernels are integrated exactly.
    """

    family = "Averaged"
    nodes = 32

    def __init__(self, inner: Kernel):
        self.inner = inner
        if inner.log_support is not None:
            self.log_support = inner.log_support + 0.5
        self.decay_exponent = inner.decay_exponent
        if inner.decay_constant is not None:
            # |v + p| >= |v|/2 for |v| >= 1
            self.decay_constant = inner.decay_constant * 2 ** inner.decay_exponent
            self.decay_from = 1.0
            # theta chi_bar(v) = chi(v + 1/2) - chi(v - 1/2)
            self.theta_decay_constant = 2 * self.decay_constant
        if inner.knot_offset is not None:
            self.knot_offset = (inner.knot_offset + 0.5) % 1.0

    @property
    def params(self):
        return {"inner": self.inner.descriptor}

    @property
    def descriptor(self):
        return f"Averaged({self.inner.descriptor})"

    def log_values(self, v):
        v = np.asarray(v, dtype=float)
        shape = v.shape
        v = v.ravel()
        lo, hi = v - 0.5, v + 0.5
        if self.inner.knot_offset is None:
            out = fixed_gauss(self.inner.log_values, lo, hi, n=self.nodes)
        else:
            off = self.inner.knot_offset
            knot = off + np.ceil(lo - off)
            half = self.nodes // 2
            out = (fixed_gauss(self.inner.log_values, lo, knot, n=half)
                   + fixed_gauss(self.inner.log_values, knot, hi, n=half))
        if self.log_support is not None:
            out[np.abs(v) >= self.log_support] = 0.0
        return out.reshape(shape)

    def theta_log(self, v):
        v = np.asarray(v, dtype=float)
        return self.inner.log_values(v + 0.5) - self.inner.log_values(v - 0.5)

    def __eq__(self, other):
        return isinstance(other, AveragedKernel) and other.inner == self.inner

    def __hash__(self):
        return hash(("Averaged", self.inner))


class CustomKernel(Kernel):
    """User-supplied log-domain closure; theta falls back to finite differences."""

    family = "Custom"

    def __init__(self, func: Callable, theta: Optional[Callable] = None, *,
                 log_support=None, decay_exponent=None, decay_constant=None,
                 theta_decay_constant=None, knot_offset=None, name="Custom"):
        self._func = func
        self._theta = theta
        self.log_support = log_support
        self.decay_exponent = decay_exponent
        self.decay_constant = decay_constant
        self.theta_decay_constant = theta_decay_constant
        self.knot_offset = knot_offset
        self.name = name

    @property
    def descriptor(self):
        return self.name

    def log_values(self, v):
        v = np.asarray(v, dtype=float)
        out = np.asarray(self._func(v), dtype=float)
        if self.log_support is not None:
            out = np.where(np.abs(v) >= self.log_support, 0.0, out)
        return out

    def theta_log(self, v):
        if self._theta is not None:
            return np.asarray(self._theta(np.asarray(v, dtype=float)), dtype=float)
        return super().theta_log(v)


def theta_as_kernel(k: Kernel) -> CustomKernel:
    """The Mellin derivative of ``k`` packaged as a kernel (for M_beta(theta chi))."""
    return CustomKernel(k.theta_log, log_support=k.log_support,
                        decay_exponent=k.decay_exponent,
                        decay_constant=k.theta_decay_constant,
                        knot_offset=k.knot_offset, name=f"theta[{k.descriptor}]")


_DESCRIPTOR = re.compile(r"\s*(\w+)\s*\((.*)\)\s*$")


def parse_kernel(text: str) -> Kernel:
    """Build a kernel from 'BSpline(3)', 'Jackson(1,2)' or 'Averaged(BSpline(3))'."""
    m = _DESCRIPTOR.match(text)
    if not m:
        raise ValueError(f"bad kernel descriptor {text!r}")
    name, args = m.group(1).lower(), m.group(2)
    try:
        if name in ("bspline", "b"):
            return BSplineKernel(int(args))
        if name == "jackson":
            alpha, n = (a.strip() for a in args.split(","))
            return JacksonKernel(float(alpha), int(n))
        if name == "averaged":
            return AveragedKernel(parse_kernel(args))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad kernel descriptor {text!r}: {exc}") from None
    raise ValueError(f"unknown kernel family in {text!r}")


# --- module-level operations -------------------------------------------------

def eval_kernel(k: Kernel, t):
    return k(t)


def theta_kernel(k: Kernel, t):
    """theta chi(t) = t chi'(t); analytic for the built-in families."""
    return k.theta(t)


def averaged_kernel(k: Kernel) -> AveragedKernel:
    return AveragedKernel(k)


def theta_averaged_kernel(k: Kernel, t):
    """theta of the averaged kernel of ``k``: chi(t e^{1/2}) - chi(t e^{-1/2})."""
    v = to_log(t)
    return k.log_values(v + 0.5) - k.log_values(v - 0.5)


def _sum_over_indices(k: Kernel, v, weight, eps, power, absolute=False, theta=False,
                      radius=None):
    """sum_j g(v - j) * weight(j - v) for every v, truncated per the kernel policy.

    Returns (sums, radius_used).
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    g = k.theta_log if theta else k.log_values
    if k.compact:
        nu = k.log_support
        width = int(math.ceil(2 * nu)) + 2
        base = np.floor(v - nu)
        js = base[:, None] + np.arange(width)[None, :]
        d = v[:, None] - js
        vals = g(d)
        if absolute:
            vals = np.abs(vals)
        return np.sum(vals * weight(-d), axis=1), nu
    R = radius if radius is not None else k.truncation_radius(eps, power, theta=theta)
    out = np.empty_like(v)
    per = max(1, _CHUNK // int(2 * R + 3))
    for i in range(0, v.size, per):
        vc = v[i:i + per]
        js = np.arange(math.floor(vc.min() - R), math.ceil(vc.max() + R) + 1)
        d = vc[:, None] - js[None, :]
        mask = np.abs(d) <= R
        vals = np.where(mask, g(d), 0.0)
        if absolute:
            vals = np.abs(vals)
        out[i:i + per] = np.sum(vals * weight(-d), axis=1)
    return out, R


def moment(k: Kernel, nu: int, u, eps=1e-9):
    """Discrete algebraic moment m_nu(chi, u) = sum_k chi(e^{-k} u) (k - log u)^nu."""
    if nu not in (0, 1):
        raise ValueError("only moments of order 0 and 1 are supported")
    if not k.compact:
        if k.decay_exponent is None or k.decay_exponent < 2 + nu:
            raise ConditionViolationError(
                f"{k.descriptor}: moment of order {nu} needs decay exponent >= {2 + nu}")
    v = to_log(u)
    weight = (lambda d: np.ones_like(d)) if nu == 0 else (lambda d: d)
    out, _ = _sum_over_indices(k, v, weight, eps, power=nu)
    return out if np.ndim(u) else float(out[0])


def fundamental_grid(count=1000, kernel: Optional[Kernel] = None):
    """Log-points in [0, 1) (u in [1, e)), refined at kernel knots and mid-knots."""
    pts = np.linspace(0.0, 1.0, count, endpoint=False)
    if kernel is not None and kernel.knot_offset is not None:
        off = kernel.knot_offset
        pts = np.concatenate([pts, [off % 1.0, (off + 0.5) % 1.0]])
    return np.unique(pts)


def _grid_log_points(grid, kernel, count=1000):
    if grid is None:
        return fundamental_grid(count, kernel)
    if isinstance(grid, GridSpec):
        return grid.points()
    return np.asarray(grid, dtype=float)


def absolute_moment(k: Kernel, beta: float, grid=None, theta=False):
    """M_beta(chi) = sup_u sum_k |chi(e^{-k} u)| |k - log u|^beta.

    The sup runs over log u in the fundamental interval [0, 1) (``grid``
    may override, given as log-points or a GridSpec).  For decaying kernels
    the explicit sum stops at ABS_MOMENT_RADIUS and the analytic tail bound
    is added, so the value is an upper estimate.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if not k.compact:
        if k.decay_exponent is None or beta >= k.decay_exponent - 1:
            raise ConditionViolationError(
                f"{k.descriptor}: M_{beta:g} is infinite (needs beta < "
                f"{k.decay_exponent:g} - 1)")
    v = _grid_log_points(grid, k)

    def weight(d):
        return np.abs(d) ** beta if beta else np.ones_like(d)

    radius = None if k.compact else ABS_MOMENT_RADIUS
    sums, R = _sum_over_indices(k, v, weight, None, beta, absolute=True,
                                theta=theta, radius=radius)
    tail = 0.0 if k.compact else k.tail_bound(R, beta, theta=theta)
    return float(np.max(sums)) + tail


def chi4_tail(k: Kernel, w: float, gamma: float, grid=None):
    """sup_x sum_{|w log x - k| > w gamma} |chi(e^{-k} x^w)| |w log x - k|.

    By recurrence only w log x mod 1 matters, so the sup runs over the
    fundamental grid.  Exactly 0 for compact kernels once w*gamma >= support.
    """
    if w <= 0 or gamma <= 0:
        raise ValueError("w and gamma must be positive")
    cut = w * gamma
    v = _grid_log_points(grid, k, count=200)
    if k.compact:
        def weight(d):
            return np.where(np.abs(d) > cut, np.abs(d), 0.0)
        sums, _ = _sum_over_indices(k, v, weight, None, 1, absolute=True)
        return float(np.max(sums))
    # explicit sum over the band cut < |d| <= R, rigorous bound beyond R
    R = math.ceil(cut) + ABS_MOMENT_RADIUS
    offsets = np.arange(ABS_MOMENT_RADIUS + 2)
    sums = np.zeros_like(v)
    for side in (1.0, -1.0):
        # d = v - j = side * (cut + something); enumerate j nearest the cut first
        j0 = np.floor(v - side * cut) if side > 0 else np.ceil(v - side * cut)
        js = j0[:, None] - side * offsets[None, :]
        d = v[:, None] - js
        ad = np.abs(d)
        mask = (ad > cut) & (ad <= R)
        sums += np.sum(np.where(mask, np.abs(k.log_values(d)) * ad, 0.0), axis=1)
    return float(np.max(sums)) + k.tail_bound(R, 1.0)


@dataclass
class MomentReport:
    family: str
    params: dict
    descriptor: str
    m0_sup_deviation: float
    m1_values: list
    m1_mean: float
    m1_spread: float
    m1_is_constant: bool
    M_beta: list
    chi4_tail: list
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.m0_sup_deviation <= self.tolerances.get("m0", 0.0)
                and self.m1_is_constant
                and all(math.isfinite(val) for _, val in self.M_beta)
                and all(math.isfinite(val) for _, _, val in self.chi4_tail))

    def to_dict(self):
        return {
            "family": self.family,
            "params": self.params,
            "descriptor": self.descriptor,
            "m0_sup_deviation": self.m0_sup_deviation,
            "m1": self.m1_mean,
            "m1_spread": self.m1_spread,
            "m1_is_constant": self.m1_is_constant,
            "M_beta": [[b, val] for b, val in self.M_beta],
            "chi4": [[w, g, val] for w, g, val in self.chi4_tail],
            "passed": self.passed,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def certify_kernel(k: Kernel, grid=None, w_list=(10, 20, 40, 80), gamma=0.5,
                   betas=(0.0, 1.0, 2.0), m0_tol=None, m1_tol=None,
                   eps=1e-9, eps_weighted=1e-7, m1_points=200) -> MomentReport:
    """Numerically check the four kernel conditions on the fundamental interval.

    For decaying kernels the first moment uses a thinned grid of
    ``m1_points`` points; its truncation radius is large.
    """
    if not k.compact and (k.decay_exponent is None or k.decay_exponent < 3):
        # (chi_2) needs an absolutely convergent first moment
        raise ConditionViolationError(
            f"{k.descriptor}: first moment needs decay exponent >= 3")
    if m0_tol is None:
        m0_tol = 1e-12 if k.compact else 1e-6
    if m1_tol is None:
        m1_tol = 1e-9 if k.compact else 1e-6
    v = _grid_log_points(grid, k)
    u = np.exp(v)
    m0 = moment(k, 0, u, eps=eps)
    u1 = u if k.compact or u.size <= m1_points else u[:: math.ceil(u.size / m1_points)]
    m1 = moment(k, 1, u1, eps=eps_weighted)
    spread = float(np.max(m1) - np.min(m1))
    M = [(float(b), absolute_moment(k, b, grid=v)) for b in betas]
    tails = [(float(w), float(gamma), chi4_tail(k, w, gamma)) for w in w_list]
    for arr in (m0, m1):
        if not np.all(np.isfinite(arr)):
            raise ExpSamplingError(f"non-finite moment for {k.descriptor}")
    return MomentReport(
        family=k.family, params=k.params, descriptor=k.descriptor,
        m0_sup_deviation=float(np.max(np.abs(m0 - 1.0))),
        m1_values=[(float(a), float(b)) for a, b in zip(u1, m1)],
        m1_mean=float(np.mean(m1)), m1_spread=spread,
        m1_is_constant=spread <= m1_tol, M_beta=M, chi4_tail=tails,
        tolerances={"m0": m0_tol, "m1": m1_tol},
    )
