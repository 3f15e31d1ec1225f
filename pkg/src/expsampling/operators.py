"""Exponential sampling series and their Mellin derivatives.

For a kernel chi and rate w > 0:

    (S_w f)(x) = sum_k chi(e^{-k} x^w) f(e^{k/w})
    (I_w f)(x) = sum_k chi(e^{-k} x^w) w int_{k/w}^{(k+1)/w} f(e^u) du

In the log coordinate chi(e^{-k} x^w) is the kernel at w log x - k, so every
series below is a sum over integer nodes k of a kernel weight times a node
value.  Compact kernels are summed exactly; decaying kernels are truncated
at the radius given by their tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericDomainError
from .kernels import AveragedKernel, Kernel, moment
from .mellin_core import GridSpec, TestFunction, log_antiderivative_nodes, to_log
from .quadrature import DEFAULT_TOL, adaptive_quad, gauss_legendre, integrate_segments

__all__ = [
    "GridSpec", "SamplingConfig", "generalized_series", "kantorovich_series",
    "theta_generalized", "theta_kantorovich", "lemma31_residual",
    "saturation_functional", "saturation_limit", "safe_margin",
]

_CHUNK = 4_000_000


@dataclass(frozen=True)
class SamplingConfig:
    """Sampling rate, tail tolerance for decaying kernels, per-cell GL order."""
    w: float
    eps: float = 1e-10
    inner_quadrature_nodes: int = 16

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError("sampling rate w must be positive")
        if not self.eps > 0:
            raise ValueError("tail tolerance must be positive")
        if self.inner_quadrature_nodes < 4:
            raise ValueError("need at least 4 inner quadrature nodes")

    def truncation(self, kernel: Kernel) -> str:
        return "exact-compact" if kernel.compact else f"tail-tolerance {self.eps:g}"


def safe_margin(kernel: Kernel, w: float) -> float:
    """Window shrink that keeps all retained nodes of a compact kernel in view."""
    support = kernel.log_support if kernel.compact else 0.0
    return (support + 1.0) / w


def _node_range(kernel, t, eps, power):
    if kernel.compact:
        R = kernel.log_support
    else:
        R = kernel.truncation_radius(eps, power)
    return math.floor(float(t.min()) - R) - 1, math.ceil(float(t.max()) + R) + 1, R


def _kernel_sum(g, kernel, t, kmin, R, node_values):
    """sum_k g(t - k) * node_values[k - kmin] for each t."""
    if kernel.compact:
        width = int(math.ceil(2 * R)) + 2
        js = np.floor(t - R)[:, None] + np.arange(width)[None, :]
        d = t[:, None] - js
        idx = js.astype(np.int64) - kmin
        return np.sum(g(d) * node_values[idx], axis=1)
    ks = kmin + np.arange(node_values.size)
    out = np.empty_like(t)
    per = max(1, _CHUNK // node_values.size)
    for i in range(0, t.size, per):
        d = t[i:i + per, None] - ks[None, :]
        vals = np.where(np.abs(d) <= R, g(d), 0.0)
        out[i:i + per] = vals @ node_values
    return out


def _prepare(x, w):
    v = np.atleast_1d(to_log(x))
    return v, w * v


def _finish(x, out):
    if not np.all(np.isfinite(out)):
        raise NumericDomainError("non-finite series value")
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


@lru_cache(maxsize=256)
def _samples(f: TestFunction, w: float, kmin: int, kmax: int):
    vals = f.at_log(np.arange(kmin, kmax + 1) / w)
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=256)
def _cell_averages(f: TestFunction, w: float, kmin: int, kmax: int, nodes: int):
    """w * int_{k/w}^{(k+1)/w} f(e^u) du for k = kmin..kmax.

    Gauss-Legendre per cell; cells touching a registered kink of f are
    integrated adaptively instead.
    """
    ks = np.arange(kmin, kmax + 1, dtype=float)
    lo, hi = ks / w, (ks + 1) / w
    xi, wt = gauss_legendre(nodes)
    pts = (lo[:, None] + hi[:, None]) / 2 + (hi - lo)[:, None] / 2 * xi[None, :]
    avg = 0.5 * (f.at_log(pts) @ wt)
    pad = 1e-12 * max(1.0, abs(lo[0]), abs(hi[-1]))
    kinks = f.breakpoints(lo[0] - pad, hi[-1] + pad)
    for p in kinks:
        for i in np.nonzero((lo <= p + pad) & (hi >= p - pad))[0]:
            inner = [q for q in kinks if lo[i] < q < hi[i]]
            avg[i] = w * adaptive_quad(f.at_log, lo[i], hi[i], tol=1e-14 / w,
                                       breakpoints=inner)
    avg.setflags(write=False)
    return avg


@lru_cache(maxsize=256)
def _antiderivative_nodes(f: TestFunction, w: float, kmin: int, kmax: int):
    vals = log_antiderivative_nodes(f, np.arange(kmin, kmax + 1) / w, tol=DEFAULT_TOL)
    vals.setflags(write=False)
    return vals


def generalized_series(f: TestFunction, kernel: Kernel, cfg: SamplingConfig, x):
    """(S_w f)(x) for scalar or array x."""
    v, t = _prepare(x, cfg.w)
    kmin, kmax, R = _node_range(kernel, t, cfg.eps, 0)
    vals = _samples(f, cfg.w, kmin, kmax)
    return _finish(x, _kernel_sum(kernel.log_values, kernel, t, kmin, R, vals))


def kantorovich_series(f: TestFunction, kernel: Kernel, cfg: SamplingConfig, x):
    """(I_w f)(x) with per-cell Gauss-Legendre averages."""
    v, t = _prepare(x, cfg.w)
    kmin, kmax, R = _node_range(kernel, t, cfg.eps, 0)
    avg = _cell_averages(f, cfg.w, kmin, kmax, cfg.inner_quadrature_nodes)
    return _finish(x, _kernel_sum(kernel.log_values, kernel, t, kmin, R, avg))


def theta_generalized(F: TestFunction, kernel: Kernel, cfg: SamplingConfig, x):
    """theta (S_w F)(x) = sum_k F(e^{k/w}) w (theta chi)(e^{-k} x^w)."""
    v, t = _prepare(x, cfg.w)
    kmin, kmax, R = _node_range(kernel, t, cfg.eps, 0)
    vals = _samples(F, cfg.w, kmin, kmax)
    out = cfg.w * _kernel_sum(kernel.theta_log, kernel, t, kmin, R, vals)
    return _finish(x, out)


def theta_kantorovich(f: TestFunction, kernel: Kernel, cfg: SamplingConfig, x):
    """theta (I_w f)(x) = sum_k (theta chi)(e^{-k} x^w) w^2 int_{k/w}^{(k+1)/w} f(e^u) du."""
    v, t = _prepare(x, cfg.w)
    kmin, kmax, R = _node_range(kernel, t, cfg.eps, 0)
    avg = _cell_averages(f, cfg.w, kmin, kmax, cfg.inner_quadrature_nodes)
    out = cfg.w * _kernel_sum(kernel.theta_log, kernel, t, kmin, R, avg)
    return _finish(x, out)


def theta_averaged_series_of_antiderivative(f: TestFunction, kernel: Kernel,
                                            cfg: SamplingConfig, x):
    """theta S_w^{chi_bar} F evaluated at x e^{1/(2w)}, F the Mellin anti-derivative of f.

    Uses theta chi_bar(t) = chi(t e^{1/2}) - chi(t e^{-1/2}) and the cached
    values F(e^{k/w}) (base point from ``f.antiderivative_base``).
    """
    avg_kernel = AveragedKernel(kernel)
    v, t = _prepare(x, cfg.w)
    t = t + 0.5
    if avg_kernel.compact:
        kmin, kmax, R = _node_range(avg_kernel, t, cfg.eps, 1)
    else:
        # Summing by parts, the truncated sum equals the truncated Kantorovich sum
        # up to boundary terms F(e^{k/w}) chi(+-R) = O(R^{1-p}), so the inner
        # kernel's radius suffices instead of a |F|-weighted tail bound.
        kmin, kmax, R = _node_range(kernel, t, cfg.eps, 0)
        R += 1.0
        kmin, kmax = kmin - 1, kmax + 1
    F = _antiderivative_nodes(f, cfg.w, kmin, kmax)
    out = cfg.w * _kernel_sum(avg_kernel.theta_log, avg_kernel, t, kmin, R, F)
    return _finish(x, out)


def lemma31_residual(f: TestFunction, kernel: Kernel, cfg: SamplingConfig, x):
    """|(I_w f)(x) - (theta S_w^{chi_bar} F)(x e^{1/(2w)})|."""
    lhs = kantorovich_series(f, kernel, cfg, x)
    rhs = theta_averaged_series_of_antiderivative(f, kernel, cfg, x)
    return np.abs(np.asarray(lhs) - np.asarray(rhs)) if np.ndim(x) else abs(lhs - rhs)


def _support(phi: TestFunction):
    if phi.support is None:
        raise ValueError(f"{phi.id} has no registered compact support")
    return phi.support


def _integration_edges(lo, hi, kernel, w, f):
    edges = [lo, hi]
    if kernel.knot_offset is not None:
        # series kinks where w v - k hits a kernel knot
        off = kernel.knot_offset
        j = np.arange(math.ceil(w * lo - off), math.floor(w * hi - off) + 1)
        edges.extend((j + off) / w)
    edges.extend(f.breakpoints(lo, hi))
    edges = np.unique(np.asarray(edges, dtype=float))
    return edges[(edges >= lo) & (edges <= hi)]


def saturation_functional(f: TestFunction, phi: TestFunction, kernel: Kernel, w: float,
                          cfg: SamplingConfig | None = None, tol=1e-10):
    """G_f(phi) = w int [(I_w f)(x) - f(x)] phi(x) dx/x over the support of phi."""
    cfg = cfg or SamplingConfig(w)
    lo, hi = _support(phi)

    def integrand(v):
        shape = np.shape(v)
        v = np.ravel(v)
        err = kantorovich_series(f, kernel, cfg, np.exp(v)) - f.at_log(v)
        return (err * phi.at_log(v)).reshape(shape)

    edges = _integration_edges(lo, hi, kernel, w, f)
    return w * float(np.sum(integrate_segments(integrand, edges, tol=tol / w)))


def saturation_limit(f: TestFunction, phi: TestFunction, kernel: Kernel, tol=1e-12):
    """-(m_1 + 1/2) int (theta phi)(x) f(x) dx/x, the w -> infinity limit of G_f(phi)."""
    lo, hi = _support(phi)
    m1 = moment(kernel, 1, 1.0)
    integral = adaptive_quad(lambda v: phi.theta_log(v) * f.at_log(v), lo, hi, tol=tol,
                             breakpoints=tuple(f.breakpoints(lo, hi)))
    return -(m1 + 0.5) * integral
