"""Acceptance gate: twelve criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""

import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from expsampling import (AveragedKernel, BSplineKernel, GridSpec, MellinTransformQuery,
                         SamplingConfig, certify_kernel, direct_bound_check, error_table,
                         generalized_series, get_function, kantorovich_series, lemma31_residual,
                         mellin_transform, moment, parse_kernel, saturation_functional,
                         saturation_limit, saturation_probe, theta_generalized,
                         theta_kantorovich, voronovskaya_probe)
from expsampling.analysis import SATURATED, SUPERCONVERGENT, non_increasing, window_points
from expsampling.errors import ConditionViolationError

ROOT = Path(__file__).resolve().parents[1]
GRID = GridSpec(-2.0, 2.0, 201)
RESULTS = {}


def report(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    print(line)
    assert ok, line


def test_criterion_01_bspline_certificates():
    bad, good = [], []
    for n in (1, 2, 3, 4):
        rep = certify_kernel(BSplineKernel(n))
        M2 = dict(rep.M_beta)[2.0]
        tails_ok = all(t == 0.0 for w, g, t in rep.chi4_tail if w * g > n / 2)
        ok = (rep.m0_sup_deviation <= 1e-12 and rep.m1_spread <= 1e-12
              and abs(rep.m1_mean) <= 1e-12 and math.isfinite(M2) and tails_ok)
        if not ok:
            bad.append(f"n={n} (m0 dev {rep.m0_sup_deviation:.1e}, m1 spread {rep.m1_spread:.3g})")
        else:
            good.append(str(n))
    detail = f"certified n={','.join(good)}"
    report(1, not bad, detail + ("; failed " + ", ".join(bad) if bad else ""))


def jackson_mass(k):
    g = lambda v: float(k.log_values(np.array([v]))[0])
    period = 2 * math.pi / k.rho
    edges = period * np.arange(0, 400)
    body = sum(integrate.quad(g, a, b, epsabs=1e-14)[0] for a, b in zip(edges, edges[1:]))
    # beyond the last zero sin^4 averages to 3/8
    tail = k.normalization * (1 / k.rho) ** 4 * (3 / 8) / (3 * edges[-1] ** 3)
    return 2 * (body + tail)


def test_criterion_02_jackson():
    k = parse_kernel("Jackson(1,2)")
    rep = certify_kernel(k, betas=(1.0, 2.0, 2.9))
    finite = all(math.isfinite(v) for _, v in rep.M_beta)
    try:
        certify_kernel(k, betas=(3.0,))
        raised = False
    except ConditionViolationError:
        raised = True
    mass = jackson_mass(k)
    ok = (rep.m0_sup_deviation <= 1e-6 and abs(rep.m1_mean) <= 1e-6 and rep.m1_spread <= 1e-6
          and finite and raised and abs(mass - 1) <= 1e-8)
    report(2, ok, f"m0 dev {rep.m0_sup_deviation:.1e}, m1 {rep.m1_mean:.1e}, "
                  f"M_beta finite {finite}, beta=3 rejected {raised}, mass-1 {mass - 1:.1e}")


def test_criterion_03_averaged_kernel():
    inner = BSplineKernel(3)
    rep = certify_kernel(AveragedKernel(inner))
    u = np.exp(np.linspace(0, 1, 50))
    m1_gap = float(np.max(np.abs(moment(AveragedKernel(inner), 1, u) - moment(inner, 1, u))))
    v = np.linspace(-3, 3, 500)
    conv = max(float(np.max(np.abs(AveragedKernel(BSplineKernel(n)).log_values(v)
                                   - BSplineKernel(n + 1).log_values(v)))) for n in (1, 2, 3))
    report(3, rep.passed and m1_gap <= 1e-10 and conv <= 1e-10,
           f"certificate {rep.passed}, m1 gap {m1_gap:.1e}, convolution gap {conv:.1e}")


def test_criterion_04_exact_identities():
    f = get_function("log_windowed")
    worst = 0.0
    for desc in ("BSpline(2)", "BSpline(3)"):
        k = parse_kernel(desc)
        m1 = moment(k, 1, 1.0)
        for w in (8, 16, 32, 64):
            v = window_points(GRID, k, w)
            x = np.exp(v)
            cfg = SamplingConfig(w)
            worst = max(worst,
                        float(np.max(np.abs(kantorovich_series(f, k, cfg, x) - v - (m1 + 0.5) / w))),
                        float(np.max(np.abs(generalized_series(f, k, cfg, x) - v - m1 / w))))
    report(4, worst <= 1e-10, f"max identity residual {worst:.1e}")


def test_criterion_05_lemma31():
    k = parse_kernel("BSpline(3)")
    x = np.exp(np.linspace(-2, 2, 50))
    worst = max(float(np.max(lemma31_residual(get_function(n), k, SamplingConfig(w), x)))
                for n in ("const1", "log_windowed", "sin_log") for w in (5, 10, 20))
    report(5, worst <= 1e-8, f"max residual {worst:.1e}")


def test_criterion_06_voronovskaya():
    rows = voronovskaya_probe(get_function("sin_log"), parse_kernel("BSpline(3)"), 1.0,
                              [10, 20, 40, 80])
    dev = [r.corollary_deviation for r in rows]
    ok = non_increasing(dev, margin=0.05) and dev[-1] <= 0.05
    report(6, ok, "corollary deviations " + ", ".join(f"{d:.2e}" for d in dev))


def test_criterion_07_direct_theorem():
    k = parse_kernel("BSpline(3)")
    w = [8, 16, 32, 64, 128]
    half = direct_bound_check(get_function("holder_half"), k, None, GRID, w,
                              raise_on_violation=False)
    absin = direct_bound_check(get_function("abs_sin_log"), k, None, GRID, w,
                               raise_on_violation=False)
    violations = half.meta["bound_violations"] + absin.meta["bound_violations"]
    rate = half.fitted_rate
    ok = violations == 0 and rate is not None and 0.45 <= rate <= 1.0
    report(7, ok, f"bound violations {violations}, holder_half rate {rate:.4f}")


def test_criterion_08_saturation():
    k = parse_kernel("BSpline(3)")
    w = [8, 16, 32, 64]
    const = saturation_probe(get_function("const1"), k, None, GRID, w)
    lw = saturation_probe(get_function("log_windowed"), k, None, GRID, w)
    sl = saturation_probe(get_function("sin_log"), k, None, GRID, w)
    const_ok = const.verdict == SUPERCONVERGENT and np.max(const.table.errors) <= 1e-12
    rates_ok = all(s.verdict == SATURATED and 0.9 <= s.fitted_rate <= 1.1 for s in (lw, sl))
    half_ok = all(abs(r.w_times_error - 0.5) <= 1e-9 for r in lw.table.rows)
    report(8, const_ok and rates_ok and half_ok,
           f"const1 {const.verdict}, log_windowed {lw.verdict} rate {lw.fitted_rate:.4f}, "
           f"sin_log {sl.verdict} rate {sl.fitted_rate:.4f}")


def test_criterion_09_g_functional():
    k = parse_kernel("BSpline(3)")
    f, phi = get_function("sin_log"), get_function("bump")
    target = saturation_limit(f, phi, k)
    gaps = [abs(saturation_functional(f, phi, k, w) - target) for w in (20, 40, 80)]
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[-1] <= 0.02 * abs(target) + 1e-3
    report(9, ok, f"target {target:.6f}, gaps " + ", ".join(f"{g:.2e}" for g in gaps))


def test_criterion_10_theta_consistency():
    w, h = 10.0, 1e-5
    cfg = SamplingConfig(w)
    # w v avoids half-integers, where theta of B_3 is discontinuous
    v = np.linspace(-1.5, 1.5, 31) + 0.0137
    worst = 0.0
    for desc in ("BSpline(3)", "Jackson(1,2)"):
        k = parse_kernel(desc)
        for name in ("const1", "log", "log_windowed", "sin_log", "holder_half",
                     "abs_sin_log", "bump"):
            f = get_function(name)
            for series, theta in ((generalized_series, theta_generalized),
                                  (kantorovich_series, theta_kantorovich)):
                numeric = (series(f, k, cfg, np.exp(v + h)) - series(f, k, cfg, np.exp(v - h))) / (2 * h)
                worst = max(worst, float(np.max(np.abs(theta(f, k, cfg, np.exp(v)) - numeric))))
    report(10, worst <= 1e-6, f"max theta mismatch {worst:.1e}")


def test_criterion_11_mellin_transform():
    k = parse_kernel("BSpline(3)")
    tr = lambda s: mellin_transform(k, MellinTransformQuery(s)).value
    errs = [abs(tr(s) - (math.sin(s / 2) / (s / 2)) ** 3) for s in (math.pi / 2, math.pi, 3.0)]
    errs.append(abs(tr(0.0) - 1.0))
    errs += [abs(tr(2 * math.pi * j)) for j in (1, 2)]
    report(11, max(errs) <= 1e-8, f"max transform error {max(errs):.1e}")


def test_criterion_12_determinism(tmp_path):
    config = ROOT / "configs" / "reference.json"
    dirs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        env = dict(os.environ, EXPSAMPLING_OUTPUT_DIR=str(out))
        proc = subprocess.run([sys.executable, "-m", "expsampling.cli", "run", str(config)],
                              env=env, capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stderr
        dirs.append(out)
    csvs = sorted(p.name for p in dirs[0].glob("*.csv"))
    same = bool(csvs) and all((dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()
                              for n in csvs)
    same = same and csvs == sorted(p.name for p in dirs[1].glob("*.csv"))
    report(12, same, f"{len(csvs)} CSV files byte-identical across two runs: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
