"""Command line runner: ``expsampling run|list|certify``.

``run`` reads a JSON experiment config, writes one CSV/JSON artifact per
probe and a ``summary.json`` listing every violated contract.  Exit status
is 0 when all probes pass, 1 on a contract violation, 2 on config or I/O
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .errors import ConfigError, ExpSamplingError
from .functions import REGISTRY, get_function
from .kernels import certify_kernel, parse_kernel
from .mellin_core import GridSpec
from .operators import (SamplingConfig, lemma31_residual, saturation_functional,
                        saturation_limit)

log = logging.getLogger("expsampling")

SCHEMA_VERSION = 1
OUTPUT_ENV = "EXPSAMPLING_OUTPUT_DIR"
PROBES = ("certify", "approximate", "rates", "voronovskaya", "lemma31",
          "saturation", "inverse", "g-functional")
DEFAULT_TOLERANCES = {
    "lemma31": 1e-8,
    "voronovskaya_final": 0.05,
    "voronovskaya_margin": 0.05,
    "g_functional_rel": 0.02,
    "g_functional_abs": 1e-3,
    "saturation_rate_slack": 0.1,
    "rate_slack": 0.05,
}
_CONFIG_KEYS = {"schema_version", "kernel", "functions", "w_list", "grid", "probes",
                "output_dir", "tolerances", "point", "eps"}
_GRID_KEYS = {"log_lo", "log_hi", "count", "margin"}


@dataclass
class ExperimentConfig:
    kernel: str
    functions: list
    w_list: list
    grid: GridSpec
    probes: list
    output_dir: Path
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    point: float = 1.0
    eps: float = 1e-10

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
        for key in ("kernel", "functions", "w_list", "probes"):
            if key not in raw:
                raise ConfigError(f"missing config field {key!r}")
        try:
            parse_kernel(raw["kernel"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        functions = list(raw["functions"])
        missing = [f for f in functions if f not in REGISTRY]
        if missing:
            raise ConfigError(f"unknown registry ids: {missing}")
        w_list = [float(w) for w in raw["w_list"]]
        if not w_list or any(w <= 0 for w in w_list) or any(
                b <= a for a, b in zip(w_list, w_list[1:])):
            raise ConfigError("w_list must be nonempty, positive and strictly ascending")
        probes = list(raw["probes"])
        if not probes or any(p not in PROBES for p in probes):
            raise ConfigError(f"probes must be a nonempty subset of {list(PROBES)}")
        grid_raw = raw.get("grid", {"log_lo": -2.0, "log_hi": 2.0, "count": 201})
        if set(grid_raw) - _GRID_KEYS:
            raise ConfigError(f"unknown grid fields: {sorted(set(grid_raw) - _GRID_KEYS)}")
        try:
            grid = GridSpec(float(grid_raw["log_lo"]), float(grid_raw["log_hi"]),
                            int(grid_raw["count"]), float(grid_raw.get("margin", 0.0)))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad grid: {exc}") from None
        tolerances = dict(DEFAULT_TOLERANCES)
        extra = set(raw.get("tolerances", {})) - set(DEFAULT_TOLERANCES)
        if extra:
            raise ConfigError(f"unknown tolerance keys: {sorted(extra)}")
        tolerances.update({k: float(v) for k, v in raw.get("tolerances", {}).items()})
        out = Path(os.environ.get(OUTPUT_ENV) or raw.get("output_dir", "expsampling-out"))
        if not out.is_absolute() and base_dir is not None and not os.environ.get(OUTPUT_ENV):
            out = base_dir / out
        point = float(raw.get("point", 1.0))
        eps = float(raw.get("eps", 1e-10))
        if not (point > 0 and eps > 0):
            raise ConfigError("point and eps must be positive")
        return cls(raw["kernel"], functions, w_list, grid, probes, out, tolerances,
                   point, eps)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)


class Runner:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.kernel = parse_kernel(cfg.kernel)
        self.functions = [get_function(f) for f in cfg.functions]
        self.base = SamplingConfig(1.0, eps=cfg.eps)
        self.tol = cfg.tolerances
        self.violations = []
        self.files = {}
        self.results = {}

    # -- helpers ------------------------------------------------------------
    def fail(self, probe, function, assertion, measured, required):
        self.violations.append({"probe": probe, "function": function,
                                "assertion": assertion, "measured": measured,
                                "required": required})

    def write(self, name, text):
        self.files[name] = text

    def floor(self):
        return analysis.exactness_floor(self.kernel, self.base)

    # -- probes ---------------------------------------------------------------
    def probe_certify(self):
        report = certify_kernel(self.kernel)
        self.write("certificate.json", report.to_json(indent=2) + "\n")
        if not report.passed:
            self.fail("certify", None, "kernel conditions chi1-chi4",
                      {"m0_sup_deviation": report.m0_sup_deviation,
                       "m1_spread": report.m1_spread}, report.tolerances)
        return {"passed": report.passed}

    def probe_approximate(self):
        out = {}
        for f in self.functions:
            for op in ("I", "S"):
                table = analysis.error_table(f, self.kernel, self.cfg.w_list,
                                             self.cfg.grid, op, self.base)
                self.write(f"approx_{op}_{f.id}.csv", table.to_csv())
                errs = table.errors
                out[f"{op}:{f.id}"] = errs.tolist()
                if not np.all(np.isfinite(errs)):
                    self.fail("approximate", f.id, f"finite {op}_w errors", errs.tolist(), "finite")
                elif f.is_constant and np.max(errs) > self.floor():
                    self.fail("approximate", f.id, f"{op}_w reproduces constants",
                              float(np.max(errs)), self.floor())
        return out

    def probe_rates(self):
        out = {}
        for f in self.functions:
            table = analysis.error_table(f, self.kernel, self.cfg.w_list, self.cfg.grid,
                                         "I", self.base).fit()
            self.write(f"rates_{f.id}.csv", table.to_csv())
            self.write(f"rates_{f.id}.json", table.to_json(indent=2) + "\n")
            out[f.id] = {"rate": table.fitted_rate, "r2": table.fit_r2}
            if f.is_constant:
                if np.max(table.errors) > self.floor():
                    self.fail("rates", f.id, "constant reproduced", float(np.max(table.errors)),
                              self.floor())
            elif f.log_holder is not None:
                need = f.log_holder.alpha - self.tol["rate_slack"]
                if table.fitted_rate is None or table.fitted_rate < need:
                    self.fail("rates", f.id, "fitted rate >= alpha - slack",
                              table.fitted_rate, need)
        return out

    def probe_voronovskaya(self):
        out = {}
        final_tol = self.tol["voronovskaya_final"]
        margin = self.tol["voronovskaya_margin"]
        for f in self.functions:
            if f.theta_log is None:
                continue
            rows = analysis.voronovskaya_probe(f, self.kernel, self.cfg.point,
                                               self.cfg.w_list, eps=self.cfg.eps)
            lines = ["w,theorem_deviation,corollary_deviation"]
            lines += [f"{r.w!r},{r.theorem_deviation!r},{r.corollary_deviation!r}"
                      for r in rows]
            self.write(f"voronovskaya_{f.id}.csv", "\n".join(lines) + "\n")
            dev = [r.corollary_deviation for r in rows]
            out[f.id] = dev
            # w (I_w f - f) amplifies the truncation floor by w
            floor = 10 * self.floor() * max(self.cfg.w_list)
            if not analysis.non_increasing(dev, margin, floor=floor):
                self.fail("voronovskaya", f.id, "corollary deviation non-increasing",
                          dev, f"margin {margin}")
            if dev[-1] > final_tol:
                self.fail("voronovskaya", f.id, "final corollary deviation", dev[-1], final_tol)
        return out

    def probe_lemma31(self):
        out = {}
        lines = ["function,w,max_residual"]
        v = self.cfg.grid.points()
        for f in self.functions:
            for w in self.cfg.w_list:
                cfg = SamplingConfig(w, eps=self.cfg.eps)
                res = float(np.max(lemma31_residual(f, self.kernel, cfg, np.exp(v))))
                lines.append(f"{f.id},{w!r},{res!r}")
                out[f"{f.id}:{w:g}"] = res
                if res > self.tol["lemma31"]:
                    self.fail("lemma31", f.id, f"residual at w={w:g}", res, self.tol["lemma31"])
        self.write("lemma31.csv", "\n".join(lines) + "\n")
        return out

    def probe_direct(self, f):
        table = analysis.direct_bound_check(f, self.kernel, self.base, self.cfg.grid,
                                            self.cfg.w_list, raise_on_violation=False)
        self.write(f"direct_{f.id}.csv", table.to_csv())
        for r in table.rows:
            if r.sup_error > r.theory_bound + table.meta["slack"]:
                self.fail("direct", f.id, f"direct bound at w={r.w:g}", r.sup_error,
                          r.theory_bound)
        return table

    def probe_saturation(self):
        out = {}
        slack = self.tol["saturation_rate_slack"]
        for f in self.functions:
            s = analysis.saturation_probe(f, self.kernel, self.base, self.cfg.grid,
                                          self.cfg.w_list, rate_slack=slack)
            out[f.id] = {"verdict": s.verdict, "fitted_rate": s.fitted_rate, "m1": s.m1,
                         "w_times_error": [r.w_times_error for r in s.table.rows]}
            expected = None
            if f.is_constant:
                expected = analysis.SUPERCONVERGENT
            elif f.theta_log is not None and f.bounded:
                expected = analysis.SATURATED
            if expected is not None and s.verdict != expected:
                self.fail("saturation", f.id, "verdict", s.verdict, expected)
        self.write("saturation.json", json.dumps(out, indent=2) + "\n")
        return out

    def probe_inverse(self):
        out = {}
        for f in self.functions:
            if f.log_holder is None:
                continue
            table = self.probe_direct(f)
            iv = analysis.inverse_probe(f, self.kernel, self.base, self.cfg.grid,
                                        self.cfg.w_list, f.log_holder.alpha,
                                        rate_slack=self.tol["rate_slack"])
            out[f.id] = {"verdict": iv.verdict, "alpha": iv.alpha,
                         "fitted_rate": iv.fitted_rate, "holder_quotient": iv.holder_quotient,
                         "quotient_bound": iv.quotient_bound,
                         "empirical_constant": iv.empirical_constant,
                         "M0_theta": iv.M0_theta, "M1_theta": iv.M1_theta,
                         "direct_bound_violations": table.meta["bound_violations"]}
            if iv.verdict == "inconsistent":
                self.fail("inverse", f.id, "log-Hoelder quotient", iv.holder_quotient,
                          iv.quotient_bound)
        self.write("inverse.json", json.dumps(out, indent=2) + "\n")
        return out

    def probe_g_functional(self):
        out = {}
        phi = get_function("bump")
        for f in self.functions:
            if not f.bounded or f.id == "bump":
                continue
            target = saturation_limit(f, phi, self.kernel)
            lines = ["w,G,target,gap"]
            gaps = []
            for w in self.cfg.w_list:
                G = saturation_functional(f, phi, self.kernel, w,
                                          SamplingConfig(w, eps=self.cfg.eps))
                gaps.append(abs(G - target))
                lines.append(f"{w!r},{G!r},{target!r},{gaps[-1]!r}")
            self.write(f"g_functional_{f.id}.csv", "\n".join(lines) + "\n")
            out[f.id] = {"target": target, "gaps": gaps}
            required = self.tol["g_functional_rel"] * abs(target) + self.tol["g_functional_abs"]
            # the final-gap tolerance is calibrated for smooth f; rough f only has to converge
            if f.theta_log is not None and gaps[-1] > required:
                self.fail("g-functional", f.id, "final gap", gaps[-1], required)
            if max(gaps) > required and not analysis.non_increasing(gaps):
                self.fail("g-functional", f.id, "gap non-increasing", gaps, "non-increasing")
        return out

    def run(self):
        dispatch = {"certify": self.probe_certify, "approximate": self.probe_approximate,
                    "rates": self.probe_rates, "voronovskaya": self.probe_voronovskaya,
                    "lemma31": self.probe_lemma31, "saturation": self.probe_saturation,
                    "inverse": self.probe_inverse, "g-functional": self.probe_g_functional}
        for probe in self.cfg.probes:
            log.info("probe %s", probe)
            try:
                self.results[probe] = dispatch[probe]()
            except ExpSamplingError as exc:
                self.fail(probe, None, type(exc).__name__, str(exc), "no error")
        summary = {
            "schema_version": SCHEMA_VERSION,
            "kernel": self.kernel.descriptor,
            "functions": self.cfg.functions,
            "w_list": self.cfg.w_list,
            "probes": self.cfg.probes,
            "passed": not self.violations,
            "violations": self.violations,
            "results": self.results,
            "files": sorted(self.files),
        }
        self.write("summary.json", json.dumps(summary, indent=2, default=_json_default) + "\n")
        return summary

    def save(self):
        out = self.cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (out / name).write_text(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def run(config_path) -> int:
    """Run an experiment config; returns the process exit status."""
    try:
        cfg = ExperimentConfig.load(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    runner = Runner(cfg)
    summary = runner.run()
    try:
        runner.save()
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return 2
    for v in summary["violations"]:
        print(f"VIOLATION {v['probe']} {v['function']}: {v['assertion']} "
              f"(measured {v['measured']}, required {v['required']})", file=sys.stderr)
    print(f"{'PASS' if summary['passed'] else 'FAIL'}: wrote {len(runner.files)} files "
          f"to {cfg.output_dir}")
    return 0 if summary["passed"] else 1


def list_registry(stream=None):
    stream = stream or sys.stdout
    print("Kernels:", file=stream)
    print("  BSpline(n)        n >= 1 integer; log-support n/2", file=stream)
    print("  Jackson(alpha, n) alpha >= 1, n >= 1 integer; decay |log t|^(-2n)", file=stream)
    print("  Averaged(inner)   inner kernel descriptor; log-support grows by 1/2", file=stream)
    print("Test functions:", file=stream)
    for f in REGISTRY.values():
        flags = []
        if f.bounded:
            flags.append("bounded")
        if f.log_uniformly_continuous:
            flags.append("log_uniformly_continuous")
        if f.log_holder is not None:
            flags.append(f"log_holder({f.log_holder.alpha:g}, {f.log_holder.K:g})")
        if f.theta_log is not None:
            flags.append("theta_analytic")
        print(f"  {f.id:<13} {', '.join(flags)}", file=stream)
        print(f"  {'':<13} {f.description}", file=stream)


def certify(descriptor, betas=(0.0, 1.0, 2.0), output=None) -> int:
    try:
        kernel = parse_kernel(descriptor)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = certify_kernel(kernel, betas=tuple(betas))
    except ExpSamplingError as exc:
        print(f"condition violation: {exc}", file=sys.stderr)
        return 1
    text = report.to_json(indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    sys.stdout.write(text)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="expsampling", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    sub.add_parser("list", help="list kernel families and test functions")
    p_cert = sub.add_parser("certify", help="certify a kernel, e.g. 'BSpline(3)'")
    p_cert.add_argument("kernel")
    p_cert.add_argument("--betas", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    p_cert.add_argument("-o", "--output")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "run":
        return run(args.config)
    if args.command == "list":
        list_registry()
        return 0
    return certify(args.kernel, args.betas, args.output)


if __name__ == "__main__":
    sys.exit(main())
