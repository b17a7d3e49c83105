"""Command-line entry point: ``dppentropy <command> [--config FILE] [overrides]``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import finite_ensemble as fin
from .functionals import report as functional_report
from .geometry import GeometryError
from .kernels import KernelError
from .lab import (
    ConfigError,
    SweepError,
    classify_hyperuniformity,
    emit_report,
    parse_config,
    parse_report,
    report_rows,
    run_sweep,
)
from .spectral import SpectralResolutionError, solve, write_spectrum_csv

COMMANDS = ("spectrum", "functionals", "sweep", "finite", "sample", "classify")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--kernel", help="ginibre | landau:<n> | wh-hermite:<n> | wh-file:<path>")
    common.add_argument("--domain", help="disk:<R> | rect:<W>x<H> | poly:<path>")
    common.add_argument("--quad-order", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path)

    parser = argparse.ArgumentParser(
        prog="dppentropy",
        description="Entanglement entropy and number variance of planar determinantal point processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues of the concentration operator")
    sub.add_parser("functionals", parents=[common], help="entropy, variance and Schatten traces")
    sub.add_parser("sweep", parents=[common], help="dilation sweep with area-law report")
    sub.add_parser("finite", parents=[common], help="finite-ensemble inequality chain")
    p = sub.add_parser("sample", parents=[common], help="sample the finite ensemble")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--stats-out", type=Path)
    p = sub.add_parser("classify", parents=[common], help="Class I / II hyperuniformity")
    p.add_argument("--report", type=Path, help="classify an existing report CSV")
    return parser


def _load_config(args):
    overrides = {}
    for key, attr in (
        ("kernel", "kernel"),
        ("domain", "domain"),
        ("quad_order", "quad_order"),
        ("seed", "seed"),
        ("n_samples", "n_samples"),
        ("out", "out"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            overrides[key] = val
    text, base = "", None
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        base = args.config.parent
    return parse_config(text, overrides, base)


def _write_rows(rows, out):
    if out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
        return
    with open(out, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _spectrum(cfg):
    s = solve(
        cfg.kernel,
        cfg.domain,
        cfg.quad_order,
        method=cfg.solver,
        tol=cfg.spectral_tol,
        max_nodes=cfg.max_nodes,
    )
    return s.check()


def cmd_spectrum(cfg):
    s = _spectrum(cfg)
    if cfg.out:
        write_spectrum_csv(s, cfg.out)
    else:
        rows = [["index", "lambda", "raw_lambda"]]
        rows += [[i, f"{a:.17g}", f"{b:.17g}"] for i, (a, b) in enumerate(zip(s.lambdas, s.raw_lambdas))]
        _write_rows(rows, None)


def cmd_functionals(cfg):
    s = _spectrum(cfg)
    fr = functional_report(s, cfg.schatten_ps)
    bad = fr.violations()
    if bad:
        raise SpectralResolutionError("; ".join(bad))
    rows = [["quantity", "value"]]
    rows += [
        ["area", f"{cfg.domain.area:.17g}"],
        ["perimeter", f"{cfg.domain.perimeter:.17g}"],
        ["expected_count", f"{fr.expected_count:.17g}"],
        ["variance", f"{fr.variance:.17g}"],
        ["entropy", f"{fr.entropy:.17g}"],
    ]
    rows += [[f"schatten_{p:g}", f"{v:.17g}"] for p, v in fr.schatten.items()]
    rows.append(["S_over_V", f"{fr.ratio_entropy_variance:.17g}"])
    _write_rows(rows, cfg.out)


def _summary(rep):
    lines = [f"records: {len(rep.records)}"]
    if rep.area_law_spread is not None:
        lines.append(
            f"area law: S/perimeter top-half spread {rep.area_law_spread:.3%} "
            f"({'ok' if rep.area_law_ok else 'NOT verified'})"
        )
    if rep.entropy_slope is not None:
        lines.append(f"fitted exponents: entropy {rep.entropy_slope:.4f}, variance {rep.variance_slope:.4f}")
    if rep.classification is not None:
        c = rep.classification
        lines.append(
            f"hyperuniformity: {c.label} (residual a*L {c.residual_linear:.3e}, "
            f"a*L*lnL {c.residual_loglinear:.3e})"
        )
    return lines


def cmd_sweep(cfg):
    rep = run_sweep(cfg)
    out = cfg.out
    if out:
        emit_report(rep, out)
        for line in _summary(rep):
            print(line)
    else:
        _write_rows(report_rows(rep), None)
        for line in _summary(rep):
            print(line, file=sys.stderr)


def cmd_finite(cfg):
    fe = fin.build_finite(cfg.kernel, cfg.domain, order=cfg.quad_order)
    gap = fin.theorem43_gap(fe)
    V = fe.variance
    l1 = fin.l1_deviation(fe)
    rows = [
        ["quantity", "value"],
        ["rank", fe.rank],
        ["expected_count_finite", f"{float(fe.lambdas.sum()):.17g}"],
        ["variance", f"{V:.17g}"],
        ["gap", f"{gap:.17g}"],
        ["l1_deviation", f"{l1:.17g}"],
        ["l1_identity", f"{fin.l1_identity(fe):.17g}"],
        ["variance_le_2gap", V <= 2 * gap + 1e-6],
        ["variance_le_l1", V <= l1 + 1e-6],
    ]
    _write_rows(rows, cfg.out)


def cmd_sample(cfg, stats_out=None):
    fe = fin.build_finite(cfg.kernel, cfg.domain, order=cfg.quad_order)
    samples = fin.sample_many(fe, cfg.n_samples, cfg.seed, box_factor=cfg.box_factor)
    stats = fin.empirical_count_stats(samples, cfg.domain)
    if cfg.out:
        fin.write_points_csv(samples, cfg.out)
    if stats_out:
        fin.write_stats_csv(stats, stats_out)
    print(
        f"n_samples={stats.n_samples} mean_count={stats.mean:.6g} (spectral {float(fe.lambdas.sum()):.6g}) "
        f"var_count={stats.variance:.6g} stderr_mean={stats.stderr:.3g}"
    )


def cmd_classify(cfg, report_path=None):
    rep = parse_report(report_path) if report_path else run_sweep(cfg)
    c = classify_hyperuniformity(rep)
    print(f"{c.label} residual_linear={c.residual_linear:.6e} residual_loglinear={c.residual_loglinear:.6e}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "classify" and args.report is not None:
            cmd_classify(None, args.report)
            return 0
        cfg = _load_config(args)
        if args.command == "spectrum":
            cmd_spectrum(cfg)
        elif args.command == "functionals":
            cmd_functionals(cfg)
        elif args.command == "sweep":
            cmd_sweep(cfg)
        elif args.command == "finite":
            cmd_finite(cfg)
        elif args.command == "sample":
            cmd_sample(cfg, args.stats_out)
        else:
            cmd_classify(cfg)
    except (ConfigError, GeometryError, KernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SweepError, SpectralResolutionError, fin.EnsembleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
