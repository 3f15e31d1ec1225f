"""Registry of target functions used by the experiments."""

from __future__ import annotations

import numpy as np

from .mellin_core import LogHolder, TestFunction
from .quadrature import fixed_gauss

# Window of the clamped logarithm: identity on [-CLAMP_START, CLAMP_START],
# constant beyond CLAMP_END.
CLAMP_START = 3.0
CLAMP_END = 4.0


def _h(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = np.exp(-1.0 / y[pos])
    return out


def smooth_step(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1."""
    a = _h(y)
    return a / (a + _h(1.0 - np.asarray(y, dtype=float)))


def smooth_step_prime(y):
    y = np.asarray(y, dtype=float)
    a, b = _h(y), _h(1.0 - y)
    out = np.zeros_like(y)
    inside = (y > 0) & (y < 1)
    yi = y[inside]
    ai, bi = a[inside], b[inside]
    out[inside] = (ai / yi**2 * bi + ai * bi / (1 - yi) ** 2) / (ai + bi) ** 2
    return out


def _clamped_log(v):
    v = np.asarray(v, dtype=float)
    a = np.abs(v).reshape(-1)
    out = np.minimum(a, CLAMP_START)
    mid = (a > CLAMP_START) & (a < CLAMP_END)
    if np.any(mid):
        # int_3^a psi(4 - t) dt = int_{4-a}^{1} psi(y) dy
        out[mid] += fixed_gauss(smooth_step, CLAMP_END - a[mid], 1.0, n=64)
    out[a >= CLAMP_END] += 0.5
    return np.sign(v) * out.reshape(v.shape)


def _clamped_log_theta(v):
    return smooth_step(CLAMP_END - np.abs(np.asarray(v, dtype=float)))


def _clamped_log_theta2(v):
    v = np.asarray(v, dtype=float)
    return -np.sign(v) * smooth_step_prime(CLAMP_END - np.abs(v))


def bump(v):
    """exp(-1/(1 - v^2)) on |v| < 1, zero elsewhere."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1
    out[inside] = np.exp(-1.0 / (1.0 - v[inside] ** 2))
    return out


def bump_theta(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1
    vi = v[inside]
    out[inside] = np.exp(-1.0 / (1.0 - vi**2)) * (-2 * vi / (1 - vi**2) ** 2)
    return out


def bump_theta2(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1
    vi = v[inside]
    q = 1 - vi**2
    g = -2 * vi / q**2
    dg = -2 * (1 + 3 * vi**2) / q**3
    out[inside] = np.exp(-1.0 / q) * (g * g + dg)
    return out


def _zeros(v):
    return np.zeros_like(np.asarray(v, dtype=float))


def _ones(v):
    return np.ones_like(np.asarray(v, dtype=float))


def _pi_multiples(lo, hi):
    return np.pi * np.arange(np.ceil(lo / np.pi), np.floor(hi / np.pi) + 1)


def _build_registry():
    fns = [
        TestFunction("const1", _ones, _zeros, _zeros,
                     log_holder=LogHolder(1.0, 0.0), is_constant=True,
                     description="f(x) = 1"),
        TestFunction("log", lambda v: np.asarray(v, dtype=float), _ones, _zeros,
                     bounded=False, log_holder=LogHolder(1.0, 1.0),
                     description="f(x) = log x (unbounded; exact-identity checks only)"),
        TestFunction("log_windowed", _clamped_log, _clamped_log_theta, _clamped_log_theta2,
                     log_holder=LogHolder(1.0, 1.0),
                     kinks=lambda lo, hi: np.array([-CLAMP_END, -CLAMP_START, CLAMP_START, CLAMP_END]),
                     description="log x on [e^-3, e^3], smoothly clamped to +-3.5 beyond e^+-4"),
        TestFunction("sin_log", lambda v: np.sin(v), lambda v: np.cos(v),
                     lambda v: -np.sin(v), log_holder=LogHolder(1.0, 1.0),
                     description="f(x) = sin(log x)"),
        TestFunction("holder_half",
                     lambda v: np.minimum(np.sqrt(np.abs(v)), 1.0),
                     log_holder=LogHolder(0.5, 1.0),
                     kinks=lambda lo, hi: np.array([-1.0, 0.0, 1.0]),
                     description="f(x) = min(|log x|^(1/2), 1)"),
        TestFunction("abs_sin_log", lambda v: np.abs(np.sin(v)),
                     log_holder=LogHolder(1.0, 1.0), kinks=_pi_multiples,
                     description="f(x) = |sin(log x)|"),
        # support edges are C-infinity but not analytic; fixed Gauss rules converge slowly there
        TestFunction("bump", bump, bump_theta, bump_theta2, support=(-1.0, 1.0),
                     kinks=lambda lo, hi: np.array([-1.0, 1.0]),
                     description="exp(-1/(1 - log^2 x)) on (1/e, e), zero elsewhere"),
    ]
    return {f.id: f for f in fns}


REGISTRY = _build_registry()


def get_function(name: str) -> TestFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; known: {sorted(REGISTRY)}") from None
