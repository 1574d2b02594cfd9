"""Command-line entry points.

Subcommands: thermo-scan, sample, limit-check, stein-diagnostics,
rate-function, density, calibrate.  Exit code 0 means all checks passed,
1 means some check failed, 2 is a usage error (argparse's convention).

Every option can also come from a flat key=value config file given with
--config; explicit flags win over the file.  The only environment variable
honored is SPINLAB_WORKERS (worker-count override).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import limits, runner, thermo
from .model import ModelParams
from .runner import RunManifest

__all__ = ["main"]


def _load_config(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SystemExit(f"bad config line (expected key=value): {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill in missing flags from --config, then from per-command defaults."""
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    for key, default in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in config:
            caster = type(default) if default is not None else str
            setattr(args, key, caster(config[key]))
        else:
            setattr(args, key, default)
    return args


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_cols(values) -> str:
    return ",".join(repr(float(v)) for v in values)


# -- subcommands -------------------------------------------------------------


def cmd_thermo_scan(args: argparse.Namespace) -> int:
    args = _resolve(args, {"beta_min": 0.0, "beta_max": 2.0 * args.dim, "step": 0.05,
                           "out": None})
    if not 0 <= args.beta_min < args.beta_max:
        raise SystemExit("need 0 <= beta-min < beta-max")
    lines = ["beta,b,magnetization,free_energy,phi_second_deriv"]
    beta_c = None
    n_steps = int(round((args.beta_max - args.beta_min) / args.step))
    for i in range(n_steps + 1):
        beta = args.beta_min + i * args.step
        try:
            point = thermo.phase_point(args.dim, beta)
            curv = thermo.phi_second_deriv(args.dim, beta, point.b)
            if beta_c is None and point.b > 1e-10:
                beta_c = beta
            lines.append(_float_cols([beta, point.b, point.magnetization,
                                      point.free_energy, curv]))
        except RuntimeError as exc:  # report per-row, keep scanning
            print(f"# solver failure at beta={beta}: {exc}", file=sys.stderr)
            lines.append(f"{beta!r},nan,nan,nan,nan")
    text = "\n".join(lines) + "\n"
    if beta_c is not None:
        text += f"# detected beta_c = {beta_c!r}\n"
    _write_or_print(text, args.out)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    if args.manifest:
        manifest = RunManifest.read(args.manifest)
    else:
        args = _resolve(args, {
            "seed": 0, "dim": None, "beta": None, "sites": None,
            "chains": 1, "burn_in": 200, "thin": 1, "samples": None,
            "statistic": None,
        })
        missing = [k for k in ("dim", "beta", "sites", "samples", "statistic")
                   if getattr(args, k) is None]
        if missing:
            raise SystemExit(f"missing required options: {', '.join('--' + m for m in missing)}")
        manifest = RunManifest(
            master_seed=int(args.seed), dim=int(args.dim), beta=float(args.beta),
            n_sites=int(args.sites), chains=int(args.chains),
            burn_in_sweeps=int(args.burn_in), thin_sweeps=int(args.thin),
            samples_per_chain=int(args.samples), statistic=args.statistic,
        )
    result = runner.run_manifest(manifest, workers=args.workers)
    prefix = args.out_prefix
    manifest.write(f"{prefix}.manifest.json")
    runner.write_samples_csv(f"{prefix}.samples.csv", result)
    runner.write_summary_json(f"{prefix}.summary.json", result)
    print(f"wrote {prefix}.samples.csv ({result.samples.shape[0]} rows), "
          f"{prefix}.summary.json, {prefix}.manifest.json")
    return 0


def cmd_limit_check(args: argparse.Namespace) -> int:
    manifest = RunManifest.read(args.manifest)
    if args.regime and args.regime != manifest.statistic:
        raise SystemExit(
            f"regime {args.regime!r} does not match the sample file's statistic "
            f"{manifest.statistic!r}")
    samples, _ = runner.load_samples_csv(args.samples)
    thresholds = {}
    if args.ks_threshold is not None:
        thresholds["ks"] = args.ks_threshold
    report = runner.limit_check(samples, manifest, thresholds or None)
    _write_or_print(report.to_json() + "\n", args.out)
    print(f"limit-check [{report.regime}]: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_stein_diagnostics(args: argparse.Namespace) -> int:
    args = _resolve(args, {"pairs": 50_000, "burn_in": 300, "seed": 0, "out": None})
    params = ModelParams(dim=args.dim, beta=args.beta, n_sites=args.sites)
    report = runner.stein_diagnostics(
        params, master_seed=int(args.seed), n_pairs=int(args.pairs),
        burn_in_sweeps=int(args.burn_in),
    )
    _write_or_print(report.to_json() + "\n", args.out)
    print(f"stein-diagnostics [{report.regime}]: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_rate_function(args: argparse.Namespace) -> int:
    args = _resolve(args, {"r_max": 2.0 * args.beta if args.beta else 1.0, "step": 0.01,
                           "out": None})
    lines = ["r,rate"]
    n_steps = int(round(args.r_max / args.step))
    for i in range(n_steps + 1):
        r = i * args.step
        lines.append(_float_cols([r, thermo.rate_function(args.dim, args.beta, r)]))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_density(args: argparse.Namespace) -> int:
    density = limits.critical_density(args.dim)
    args = _resolve(args, {"t_max": density.mean + 8.0 * np.sqrt(
        density.second_moment - density.mean**2), "step": None, "out": None})
    step = args.step if args.step else args.t_max / 400.0
    lines = ["t,pdf"]
    n_steps = int(round(args.t_max / step))
    for i in range(n_steps + 1):
        t = i * step
        lines.append(_float_cols([t, density.pdf(t)]))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    if args.samples_csv:
        samples, _ = runner.load_samples_csv(args.samples_csv)
        values = samples[:, 0]
    else:
        args = _resolve(args, {"sites": None, "samples": 10_000, "burn_in": 400,
                               "thin": 4, "seed": 0})
        if args.sites is None:
            raise SystemExit("calibrate needs --samples-csv or --sites")
        manifest = RunManifest(
            master_seed=int(args.seed), dim=args.dim, beta=float(args.dim),
            n_sites=int(args.sites), chains=1, burn_in_sweeps=int(args.burn_in),
            thin_sweeps=int(args.thin), samples_per_chain=int(args.samples),
            statistic="critical",
        )
        values = runner.run_manifest(manifest).samples[:, 0]
    c_n = limits.calibrate_c_n(values)
    print(f"c_N = {c_n!r}  (from {values.size} samples)")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlab",
        description="Mean-field O(N) spin model laboratory: thermodynamics, "
                    "Glauber sampling, and limit-theorem verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value option file; flags override it")

    p = sub.add_parser("thermo-scan", help="tabulate b, magnetization, free energy over beta")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_thermo_scan)

    p = sub.add_parser("sample", help="run chains and record a W statistic")
    p.add_argument("--manifest", help="JSON manifest; overrides the individual flags")
    p.add_argument("--seed", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--sites", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--samples", type=int, help="samples per chain")
    p.add_argument("--statistic", choices=runner.STATISTICS)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-prefix", required=True)
    add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("limit-check", help="compare a sample file to its limit law")
    p.add_argument("--samples", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--regime", choices=("subcritical", "supercritical", "critical"))
    p.add_argument("--ks-threshold", type=float)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_limit_check)

    p = sub.add_parser("stein-diagnostics",
                       help="exchangeable-pair drift / quadratic-variation regressions")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--pairs", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_stein_diagnostics)

    p = sub.add_parser("rate-function", help="tabulate the rate function I_beta(r)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--r-max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_rate_function)

    p = sub.add_parser("density", help="tabulate the critical limit density")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--t-max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("calibrate", help="estimate the critical scale constant c_N")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples-csv", help="existing critical sample file")
    p.add_argument("--sites", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    add_common(p)
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
