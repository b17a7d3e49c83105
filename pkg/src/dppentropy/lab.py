"""Dilation sweeps, area-law checks and hyperuniformity classification."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .functionals import ENTROPY_VARIANCE_CONSTANT, report as functional_report
from .geometry import Domain, GeometryError, parse_domain
from .kernels import KernelError, KernelSpec, parse_kernel
from .spectral import DEFAULT_TOL, solve

__all__ = [
    "ConfigError",
    "SweepError",
    "SweepConfig",
    "ScalingRecord",
    "ScalingReport",
    "Classification",
    "CLASS_ONE",
    "CLASS_TWO",
    "INCONCLUSIVE",
    "parse_config",
    "run_sweep",
    "classify_hyperuniformity",
    "relative_spread",
    "emit_report",
    "report_rows",
    "parse_report",
]

CLASS_ONE = "class_one"
CLASS_TWO = "class_two"
INCONCLUSIVE = "inconclusive"
COUNT_RTOL = 1e-6


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    def __init__(self, L, reason):
        super().__init__(f"L = {L:g}: {reason}")
        self.L = L
        self.reason = reason


@dataclass(frozen=True)
class SweepConfig:
    kernel: KernelSpec
    domain: Domain
    L_grid: tuple = (1.0,)
    quad_order: int = 24
    schatten_ps: tuple = (0.5, 1.0)
    spectral_tol: float = DEFAULT_TOL
    area_law_spread: float = 0.05
    max_nodes: int = 4000
    solver: str = "auto"
    seed: int = 0
    n_samples: int = 100
    box_factor: float = 3.0
    out: str | None = None

    def __post_init__(self):
        grid = tuple(float(L) for L in self.L_grid)
        if not grid:
            raise ConfigError("L_grid is empty")
        if any(not L > 0 for L in grid):
            raise ConfigError("dilation factors must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("L_grid must be strictly increasing")
        object.__setattr__(self, "L_grid", grid)
        if self.quad_order < 4:
            raise ConfigError("quad_order must be >= 4")
        if any(not p > 0 for p in self.schatten_ps):
            raise ConfigError("schatten exponents must be positive")
        object.__setattr__(self, "schatten_ps", tuple(float(p) for p in self.schatten_ps))
        if self.solver not in ("auto", "dense", "radial"):
            raise ConfigError(f"solver must be auto, dense or radial, got {self.solver!r}")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be >= 2")


def _parse_grid(text: str) -> tuple:
    values = []
    for item in text.replace(",", " ").split():
        if ".." in item:
            lo, hi = item.split("..")
            lo, hi = int(lo), int(hi)
            values.extend(float(v) for v in range(lo, hi + 1))
        else:
            values.append(float(item))
    return tuple(values)


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


_FIELDS = {
    "kernel": None,
    "domain": None,
    "L_grid": _parse_grid,
    "quad_order": int,
    "schatten_ps": _parse_floats,
    "spectral_tol": float,
    "area_law_spread": float,
    "max_nodes": int,
    "solver": str,
    "seed": int,
    "n_samples": int,
    "box_factor": float,
    "out": str,
}
_ALIASES = {"L": "L_grid", "l_grid": "L_grid", "order": "quad_order"}


def _resolve(path_arg: str, base_dir) -> str:
    if base_dir is None or not path_arg:
        return path_arg
    p = Path(path_arg)
    return str(p if p.is_absolute() else Path(base_dir) / p)


def _build(key, raw, base_dir):
    if key == "kernel":
        if raw.startswith("wh-file:"):
            raw = "wh-file:" + _resolve(raw[len("wh-file:"):], base_dir)
        return parse_kernel(raw)
    if key == "domain":
        if raw.startswith("poly:"):
            raw = "poly:" + _resolve(raw[len("poly:"):], base_dir)
        return parse_domain(raw)
    return _FIELDS[key](raw)


def parse_config(text: str, overrides: dict | None = None, base_dir=None) -> SweepConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a SweepConfig.

    ``overrides`` maps keys to raw string values and wins over the text.
    Relative ``poly:`` and ``wh-file:`` paths resolve against ``base_dir``.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = _ALIASES.get(key.strip(), key.strip())
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _build(key, raw.strip(), base_dir)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    for key, raw in (overrides or {}).items():
        key = _ALIASES.get(key, key)
        if key not in _FIELDS:
            raise ConfigError(f"unknown override {key!r}")
        try:
            values[key] = _build(key, str(raw), None)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"bad override for {key}: {exc}") from exc
    for required in ("kernel", "domain"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    try:
        return SweepConfig(**values)
    except (ConfigError, KernelError, GeometryError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ScalingRecord:
    L: float
    area: float
    perimeter: float
    expected_count: float
    variance: float
    entropy: float
    schatten: dict = field(default_factory=dict)

    @property
    def S_over_V(self) -> float:
        return self.entropy / self.variance if self.variance > 0 else math.nan

    @property
    def S_over_perimeter(self) -> float:
        return self.entropy / self.perimeter

    @property
    def V_over_perimeter(self) -> float:
        return self.variance / self.perimeter

    def violations(self, count_rtol: float = COUNT_RTOL) -> list[str]:
        bad = []
        if self.variance < 0:
            bad.append(f"negative variance {self.variance}")
        if self.entropy < ENTROPY_VARIANCE_CONSTANT * self.variance - 1e-12 * max(1.0, self.entropy):
            bad.append("entropy below 4 ln2 * variance")
        if abs(self.expected_count - self.area) > count_rtol * self.area:
            bad.append(
                f"expected count {self.expected_count:.10g} misses the area {self.area:.10g}"
            )
        return bad


@dataclass(frozen=True)
class Classification:
    label: str
    residual_linear: float
    residual_loglinear: float
    coef_linear: float
    coef_loglinear: float


@dataclass
class ScalingReport:
    records: list
    schatten_ps: tuple = (0.5, 1.0)
    classification: Classification | None = None
    entropy_slope: float | None = None
    variance_slope: float | None = None
    area_law_spread: float | None = None
    area_law_ok: bool | None = None


def relative_spread(values) -> float:
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / abs(v.mean()))


def _top_half(seq):
    n = len(seq)
    return seq[n - math.ceil(n / 2):]


def _loglog_slope(L, y) -> float:
    return float(np.polyfit(np.log(L), np.log(y), 1)[0])


def run_sweep(cfg: SweepConfig) -> ScalingReport:
    records = []
    for L in cfg.L_grid:
        dom = cfg.domain if L == 1.0 else cfg.domain.dilate(L)
        try:
            spectrum = solve(
                cfg.kernel,
                dom,
                cfg.quad_order,
                method=cfg.solver,
                tol=cfg.spectral_tol,
                max_nodes=cfg.max_nodes,
            )
        except ValueError as exc:
            raise SweepError(L, str(exc)) from exc
        if spectrum.flagged:
            raise SweepError(L, spectrum.reason)
        fr = functional_report(spectrum, cfg.schatten_ps)
        rec = ScalingRecord(
            L, dom.area, dom.perimeter, fr.expected_count, fr.variance, fr.entropy, fr.schatten
        )
        bad = rec.violations()
        if bad:
            raise SweepError(L, "; ".join(bad))
        records.append(rec)
    rep = ScalingReport(records, cfg.schatten_ps)
    if len(records) >= 3:
        Ls = np.array([r.L for r in records])
        rep.entropy_slope = _loglog_slope(Ls, [r.entropy for r in records])
        rep.variance_slope = _loglog_slope(Ls, [r.variance for r in records])
    if len(records) >= 2:
        rep.area_law_spread = relative_spread([r.S_over_perimeter for r in _top_half(records)])
        rep.area_law_ok = rep.area_law_spread < cfg.area_law_spread
    if len(records) >= 4:
        rep.classification = classify_hyperuniformity(rep)
    return rep


def classify_hyperuniformity(report) -> Classification:
    """Decide between V ~ a L (class one) and V ~ a L ln L (class two).

    Both one-parameter models are fitted by least squares to the top half of
    the grid; a model wins when its relative residual is at least 2x smaller.
    Accepts a ScalingReport, a list of records or ``(L, V)`` pairs.
    """
    records = report.records if isinstance(report, ScalingReport) else list(report)
    if len(records) < 4:
        raise ValueError("classification needs at least 4 records")
    pairs = [(r.L, r.variance) if isinstance(r, ScalingRecord) else tuple(r) for r in records]
    L, V = map(np.asarray, zip(*_top_half(pairs)))
    L = L.astype(float)
    V = V.astype(float)
    norm = np.linalg.norm(V)
    fits = []
    for model in (L, L * np.log(L)):
        a = float(np.dot(model, V) / np.dot(model, model))
        fits.append((a, float(np.linalg.norm(V - a * model) / norm)))
    (a1, r1), (a2, r2) = fits
    if 2 * r1 <= r2:
        label = CLASS_ONE
    elif 2 * r2 <= r1:
        label = CLASS_TWO
    else:
        label = INCONCLUSIVE
    return Classification(label, r1, r2, a1, a2)


def _p_label(p: float) -> str:
    return f"schatten_{p:g}"


def _header(ps) -> list:
    return (
        ["L", "area", "perimeter", "expected_count", "variance", "entropy"]
        + [_p_label(p) for p in ps]
        + ["S_over_V", "S_over_perimeter", "V_over_perimeter"]
    )


def report_rows(report: ScalingReport) -> list:
    """Header plus one row per record, floats at full double precision."""
    rows = [_header(report.schatten_ps)]
    for rec in report.records:
        bad = rec.violations()
        if bad:
            raise SweepError(rec.L, "; ".join(bad))
        vals = [rec.L, rec.area, rec.perimeter, rec.expected_count, rec.variance, rec.entropy]
        vals += [rec.schatten[p] for p in report.schatten_ps]
        vals += [rec.S_over_V, rec.S_over_perimeter, rec.V_over_perimeter]
        rows.append([f"{v:.17g}" for v in vals])
    return rows


def emit_report(report: ScalingReport, path) -> None:
    """Write the report CSV; records are re-validated first."""
    rows = report_rows(report)
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def parse_report(path) -> ScalingReport:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    ps = tuple(float(h[len("schatten_"):]) for h in header if h.startswith("schatten_"))
    if header != _header(ps):
        raise ValueError(f"{path}: unexpected report header {header}")
    records = []
    for row in rows:
        vals = dict(zip(header, map(float, row)))
        records.append(
            ScalingRecord(
                vals["L"],
                vals["area"],
                vals["perimeter"],
                vals["expected_count"],
                vals["variance"],
                vals["entropy"],
                {p: vals[_p_label(p)] for p in ps},
            )
        )
    return ScalingReport(records, ps)
