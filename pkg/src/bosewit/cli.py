"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 numerical validation
failure or a violated soundness check in a sampling campaign.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BosewitError, NumericalValidationError
from .fock import build_space
from .multisite import (
    MAX_SITES,
    css_multisite,
    one_axis_twist_multisite,
    random_separable_multisite,
    xi2_multisite,
)
from .scenario import load_scenario
from .spin import relative_phase_axes, sector_spin_moments
from .states import RelativePhaseSpec, SSRMode, assemble_separable, random_separable, relative_phase_state
from .witnesses import (
    TOL,
    WitnessReport,
    correlation_moment,
    full_report,
    hillery_correlation_test,
    hillery_variance_test,
    lab_squeezing_tests,
    moments_of,
    principal_squeezing_test,
    sorensen_xi2,
    variance_sum_bound,
)

logger = logging.getLogger("bosewit")

PHASE_SCAN_COLUMNS = (
    "N",
    "var_Jx",
    "var_Jy",
    "var_Jz",
    "mean_Jz",
    "sum_var_Sxy",
    "ratio_var_Jx_over_N2",
    "ratio_mean_Jz_over_N",
    "hillery_threshold",
)


def _provenance(seed) -> dict:
    return {
        "seed": seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


@dataclass
class RunReport:
    scenario: dict
    report: WitnessReport
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, **self.report.to_dict(), "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        return cls(d["scenario"], WitnessReport.from_dict(d), d.get("provenance", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _ordered_map(fn, items, jobs: int):
    """map() that may fan out to processes; results keep input order."""
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --- report ---------------------------------------------------------------


def cmd_report(args) -> int:
    scenario = load_scenario(args.state, n_max=args.nmax, max_power=args.mmax)
    state = scenario.build()
    report = full_report(state, scenario.config)
    echo = {**scenario.raw, "resolved_space": {"n_min": scenario.space.n_min, "n_max": scenario.space.n_max}}
    echo["resolved_tests"] = scenario.config.to_dict()
    run = RunReport(echo, report, _provenance(scenario.seed))
    _write(run.to_json() + "\n", args.out)
    for r in report.results:
        logger.info("%-40s %s", r.name, r.verdict.value)
    return 0


# --- phase-scan -----------------------------------------------------------


def phase_scan_row(n: int, p: int) -> dict:
    spec = RelativePhaseSpec(n, p)
    moments = sector_spin_moments(relative_phase_state(n, p))
    j = moments.rotated(relative_phase_axes(spec.theta))
    var_jx, var_jy, var_jz = j.variances
    mean_jz = j.means[2]
    return {
        "N": n,
        "var_Jx": var_jx,
        "var_Jy": var_jy,
        "var_Jz": var_jz,
        "mean_Jz": mean_jz,
        "sum_var_Sxy": moments.covariance[0, 0] + moments.covariance[1, 1],
        "ratio_var_Jx_over_N2": var_jx / n**2,
        "ratio_mean_Jz_over_N": mean_jz / n,
        "hillery_threshold": 0.5 * moments.mean_number,
    }


def scan_sizes(n_min: int, n_max: int, geometric: bool, num: int, step: int) -> list[int]:
    if n_min <= 0 or n_min % 2 or n_max % 2 or n_max < n_min:
        raise BosewitError(f"need even 0 < n_min <= n_max, got {n_min}, {n_max}")
    if geometric:
        raw = np.geomspace(n_min, n_max, max(num, 2) if n_max > n_min else 1)
        sizes = sorted({int(2 * round(x / 2)) for x in raw} | {n_min, n_max})
    else:
        if step <= 0 or step % 2:
            raise BosewitError(f"--step must be a positive even integer, got {step}")
        sizes = list(range(n_min, n_max + 1, step))
    return sizes


def _phase_row_job(args):
    return phase_scan_row(*args)


def format_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] if isinstance(row[c], (int, np.integer)) else f"{row[c]:.17g}" for c in columns])
    return buf.getvalue()


def cmd_phase_scan(args) -> int:
    sizes = scan_sizes(args.n_min, args.n_max, args.geometric, args.num, args.step)
    for n in sizes:
        RelativePhaseSpec(n, args.p)
    rows = _ordered_map(_phase_row_job, [(n, args.p) for n in sizes], args.jobs)
    _write(format_csv(rows, PHASE_SCAN_COLUMNS), args.out)
    return 0


# --- separable-sample -----------------------------------------------------


def sample_seeds(seed: int, samples: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(samples)]


def evaluate_separable_sample(job) -> dict:
    """Slacks of every bound for one random separable state (negative = violated)."""
    n_max, max_terms, sample_seed, mode, max_power = job
    rng = np.random.default_rng(sample_seed)
    terms = int(rng.integers(1, max_terms + 1))
    space = build_space(n_max)
    rho = assemble_separable(random_separable(space, terms, rng, mode), space)
    moments = moments_of(rho)
    powers = [(m, n) for m in range(1, max_power + 1) for n in range(1, max_power + 1) if m + n <= n_max]
    out = {
        "spin_squeezing_pairs": min(r.margin for r in lab_squeezing_tests(moments)),
        "spin_squeezing_principal": principal_squeezing_test(moments).margin,
        "hillery_variance": hillery_variance_test(moments, "lab").margin,
        "hillery_correlation": min(-hillery_correlation_test(rho, m, n).margin for m, n in powers),
        "transverse_mean": -float(np.max(np.abs(moments.means[:2]))),
        "ssr_correlation": -max(abs(correlation_moment(rho, m, n)) for m, n in powers),
        "variance_sum_bound": variance_sum_bound(moments)["margin"],
        "sorensen_undefined": sorensen_xi2(moments).value is None,
    }
    return out


# which checks are soundness claims for each separable class
ASSERTED = {
    SSRMode.LOCAL: (
        "spin_squeezing_pairs",
        "spin_squeezing_principal",
        "hillery_variance",
        "hillery_correlation",
        "transverse_mean",
        "ssr_correlation",
    ),
    SSRMode.UNRESTRICTED: ("hillery_variance", "hillery_correlation"),
}
SLACK_KEYS = (
    "spin_squeezing_pairs",
    "spin_squeezing_principal",
    "hillery_variance",
    "hillery_correlation",
    "transverse_mean",
    "ssr_correlation",
    "variance_sum_bound",
)


def separable_campaign(n_max, terms, samples, seed, ssr, max_power=2, jobs=1) -> dict:
    mode = SSRMode.parse(ssr)
    if samples < 1 or terms < 1:
        raise BosewitError("samples and terms must be >= 1")
    build_space(n_max)
    jobs_list = [(n_max, terms, s, mode, max_power) for s in sample_seeds(seed, samples)]
    rows = _ordered_map(evaluate_separable_sample, jobs_list, jobs)
    checks = {}
    for key in SLACK_KEYS:
        slacks = np.array([r[key] for r in rows])
        asserted = key in ASSERTED[mode]
        worst = int(np.argmin(slacks))
        checks[key] = {
            "min_slack": float(slacks[worst]) + 0.0,
            "worst_sample": worst,
            "asserted": asserted,
            "passed": bool(slacks[worst] >= -TOL) if asserted else None,
        }
    findings = int(sum(r["variance_sum_bound"] < -TOL for r in rows))
    passed = all(c["passed"] for c in checks.values() if c["asserted"])
    return {
        "command": "separable-sample",
        "parameters": {
            "n_max": n_max,
            "terms": terms,
            "samples": samples,
            "seed": seed,
            "ssr_mode": mode.value,
            "max_power": max_power,
        },
        "checks": checks,
        "informational": {
            "variance_sum_bound_violations": findings,
            "sorensen_undefined_count": int(sum(r["sorensen_undefined"] for r in rows)),
        },
        "pass": passed,
    }


def cmd_separable_sample(args) -> int:
    summary = separable_campaign(args.nmax, args.terms, args.samples, args.seed, args.ssr, args.mmax, args.jobs)
    summary["provenance"] = _provenance(args.seed)
    _write(json.dumps(summary, indent=2) + "\n", args.out)
    return 0 if summary["pass"] else 2


# --- sorensen -------------------------------------------------------------


def sorensen_campaign(k: int, chi_t: float, samples: int, seed: int, terms: int = 4) -> dict:
    twisted = one_axis_twist_multisite(css_multisite(k), chi_t)
    css = css_multisite(k)
    xi_lab, xi_opt, undefined = [], [], 0
    for s in sample_seeds(seed, samples):
        rng = np.random.default_rng(s)
        state = random_separable_multisite(k, int(rng.integers(1, terms + 1)), rng)
        lab = xi2_multisite(state, "lab")
        opt = xi2_multisite(state, "optimal")
        if lab.value is None:
            undefined += 1
        else:
            xi_lab.append(lab.value)
        if opt.value is not None:
            xi_opt.append(opt.value)
    sep_min = min(xi_lab) if xi_lab else None
    sep_opt_min = min(xi_opt) if xi_opt else None
    passed = all(v is None or v >= 1 - TOL for v in (sep_min, sep_opt_min))
    return {
        "command": "sorensen",
        "parameters": {"sites": k, "chi_t": chi_t, "samples": samples, "seed": seed, "max_terms": terms},
        "css": xi2_multisite(css, "lab").to_dict(),
        "twisted": {
            "lab": xi2_multisite(twisted, "lab").to_dict(),
            "optimal": xi2_multisite(twisted, "optimal").to_dict(),
        },
        "separable": {
            "min_xi2_lab": sep_min,
            "min_xi2_optimal": sep_opt_min,
            "undefined_count": undefined,
        },
        "pass": passed,
    }


def cmd_sorensen(args) -> int:
    if not 1 <= args.sites <= MAX_SITES:
        raise BosewitError(f"--sites must be in 1..{MAX_SITES}, got {args.sites}")
    summary = sorensen_campaign(args.sites, args.chi_t, args.samples, args.seed, args.terms)
    summary["provenance"] = _provenance(args.seed)
    _write(json.dumps(summary, indent=2) + "\n", args.out)
    return 0 if summary["pass"] else 2


# --- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosewit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="evaluate every witness on a scenario file")
    p.add_argument("--state", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output JSON path, '-' for stdout")
    p.add_argument("--mmax", type=int, default=None, help="largest power m, n in correlation tests")
    p.add_argument("--nmax", type=int, default=None, help="override the space with a full n_max space")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("phase-scan", help="relative phase state moments over a range of N")
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    spacing = p.add_mutually_exclusive_group()
    spacing.add_argument("--geometric", action="store_true")
    spacing.add_argument("--linear", action="store_true", help="default spacing")
    p.add_argument("--num", type=int, default=10, help="points for --geometric")
    p.add_argument("--step", type=int, default=2, help="even step for --linear")
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phase_scan)

    p = sub.add_parser("separable-sample", help="soundness sampling over random separable states")
    p.add_argument("--nmax", type=int, default=6)
    p.add_argument("--terms", type=int, default=8, help="maximum number of product terms")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--ssr", choices=("local", "none"), default="local")
    p.add_argument("--mmax", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separable_sample)

    p = sub.add_parser("sorensen", help="multi-site xi^2 for twisted and separable states")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--chi-t", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--terms", type=int, default=4, help="maximum number of product terms")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sorensen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except NumericalValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BosewitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
