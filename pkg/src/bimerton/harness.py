"""Experiment protocol: parameter cases, refinement studies, price tables."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .model import ModelParams, Payoff, PayoffKind, build_grid
from .pricer import Mode, price

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaseSpec:
    name: str
    params: ModelParams
    strike: float
    half_width: float


CASES = {
    "CaseI": CaseSpec("CaseI", ModelParams(
        sigma_x=0.12, sigma_y=0.15, rho=0.30, r=0.05, lam=0.60,
        mu_jx=-0.10, mu_jy=0.10, sigma_jx=0.17, sigma_jy=0.13, rho_j=-0.20, T=1.0),
        strike=100.0, half_width=1.5),
    "CaseII": CaseSpec("CaseII", ModelParams(
        sigma_x=0.30, sigma_y=0.30, rho=0.50, r=0.05, lam=2.0,
        mu_jx=-0.50, mu_jy=0.30, sigma_jx=0.40, sigma_jy=0.10, rho_j=-0.60, T=0.5),
        strike=40.0, half_width=3.0),
    "CaseIII": CaseSpec("CaseIII", ModelParams(
        sigma_x=0.20, sigma_y=0.30, rho=0.70, r=0.05, lam=8.0,
        mu_jx=-0.05, mu_jy=-0.20, sigma_jx=0.45, sigma_jy=0.06, rho_j=0.50, T=1.0),
        strike=40.0, half_width=6.0),
}

MAX_LEVEL = 4
DESK_MAX_LEVEL = 2


def get_case(case) -> CaseSpec:
    if isinstance(case, CaseSpec):
        return case
    try:
        return CASES[case]
    except KeyError:
        raise ValueError(f"unknown case {case!r}; expected one of {sorted(CASES)}") from None


def level_sizes(level: int) -> tuple[int, int, int]:
    """``(N, J, M)`` for a refinement level: ``N = J = 2**(8+l)``, ``M = 50*2**l``."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in 0..{MAX_LEVEL}, got {level}")
    n = 2 ** (8 + level)
    return n, n, 50 * 2**level


def case_grid(case, spot, level: int, scale: float = 1.0):
    """Grid for ``case`` at ``level``; ``scale`` multiplies the half-widths
    and the interval counts together so the mesh widths stay fixed."""
    case = get_case(case)
    N, J, M = level_sizes(level)
    Ns, Js = round(N * scale), round(J * scale)
    w = case.half_width * scale
    return build_grid(case.params, spot, (w, w), Ns, Js, M)


@lru_cache(maxsize=1)
def reference_data() -> dict:
    text = resources.files("bimerton").joinpath("data/reference.json").read_text()
    return json.loads(text)


def _kind(payoff_kind) -> PayoffKind:
    return payoff_kind if isinstance(payoff_kind, PayoffKind) else PayoffKind(payoff_kind)


@dataclass
class ConvergenceRow:
    level: int
    N: int
    J: int
    M: int
    price: float
    change: float | None = None
    ratio: float | None = None
    seconds: float = 0.0


@dataclass
class StudyReport:
    title: str
    rows: list = field(default_factory=list)
    reference: float | None = None
    max_abs_diff: float | None = None
    columns: tuple = ("level", "N", "J", "M", "price", "change", "ratio", "seconds")


def fill_changes(rows: list[ConvergenceRow]) -> list[ConvergenceRow]:
    """Set ``change`` from level 1 on and ``ratio`` from level 2 on."""
    for i, row in enumerate(rows):
        row.change = row.price - rows[i - 1].price if i >= 1 else None
        if i >= 2 and row.change:
            row.ratio = rows[i - 1].change / row.change
        else:
            row.ratio = None
    return rows


def convergence_study(case, payoff_kind, spot, levels=range(3), *, embed="fast",
                      epsilon=None, mode=Mode.AMERICAN) -> StudyReport:
    case = get_case(case)
    payoff = Payoff(_kind(payoff_kind), case.strike)
    rows = []
    for level in levels:
        grid = case_grid(case, spot, level)
        t0 = time.perf_counter()
        try:
            res = price(case.params, payoff, grid, mode=mode, embed=embed, epsilon=epsilon)
        except Exception as exc:
            raise RuntimeError(f"{case.name} level {level}: {exc}") from exc
        rows.append(ConvergenceRow(level, grid.N, grid.J, grid.M, res.price,
                                   seconds=time.perf_counter() - t0))
        log.info("%s level %d: %.6f (%.1fs)", case.name, level, res.price, rows[-1].seconds)
    fill_changes(rows)
    key = f"{case.name}/{payoff.kind.value}/{spot[0]:g}/{spot[1]:g}"
    ref = reference_data()["convergence"].get(key, {}).get("reference")
    report = StudyReport(f"Convergence {key}", rows, ref)
    if ref is not None and rows:
        report.max_abs_diff = max(abs(r.price - ref) for r in rows)
    return report


def timing_slope(rows: list[ConvergenceRow]) -> float | None:
    """Log-log slope of seconds against ``M*N*J*log(N*J)`` (about 1 if the
    work grows as stated)."""
    pts = [(math.log(r.M * r.N * r.J * math.log(r.N * r.J)), math.log(r.seconds))
           for r in rows if r.seconds > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


_SCALES = {"half": 0.5, "base": 1.0, "double": 2.0}


def domain_study(case, payoff_kind, spot, scale="double", levels=(0,), *,
                 embed="fast", epsilon=None) -> StudyReport:
    """Compare prices on a rescaled interior domain against the base domain.

    Row ``price`` holds the rescaled-domain price, ``change`` the absolute
    difference from the base-domain price at the same level.
    """
    case = get_case(case)
    factor = _SCALES[scale] if isinstance(scale, str) else float(scale)
    payoff = Payoff(_kind(payoff_kind), case.strike)
    rows = []
    for level in levels:
        t0 = time.perf_counter()
        base = price(case.params, payoff, case_grid(case, spot, level),
                     embed=embed, epsilon=epsilon).price
        grid = case_grid(case, spot, level, factor)
        scaled = price(case.params, payoff, grid, embed=embed, epsilon=epsilon).price
        rows.append(ConvergenceRow(level, grid.N, grid.J, grid.M, scaled,
                                   change=abs(scaled - base),
                                   seconds=time.perf_counter() - t0))
    report = StudyReport(f"Domain {scale} {case.name}/{payoff.kind.value}", rows,
                         columns=("level", "N", "J", "M", "price", "change", "seconds"))
    report.max_abs_diff = max((r.change for r in rows), default=None)
    return report


@dataclass
class PriceTable:
    title: str
    spots: list
    prices: np.ndarray  # [iy, ix] -> Y0 = spots[iy], X0 = spots[ix]
    mi: np.ndarray | None
    ref: np.ndarray | None

    @property
    def max_diff_ref(self):
        return None if self.ref is None else float(np.nanmax(np.abs(self.prices - self.ref)))

    @property
    def max_diff_mi(self):
        return None if self.mi is None else float(np.nanmax(np.abs(self.prices - self.mi)))


def comprehensive_table(case, payoff_kind, spots=None, level: int = DESK_MAX_LEVEL,
                        *, embed="fast", epsilon=None, allow_high_levels=False) -> PriceTable:
    """Price every ``(X0, Y0)`` pair on its own anchored grid."""
    case = get_case(case)
    kind = _kind(payoff_kind)
    if level > DESK_MAX_LEVEL:
        if not allow_high_levels:
            raise ValueError(f"level {level} needs allow_high_levels=True")
        warnings.warn(f"level {level} tables take a long time and a lot of memory", RuntimeWarning)
    entry = reference_data()["comprehensive"].get(f"{case.name}/{kind.value}")
    if spots is None:
        if entry is None:
            raise ValueError("no default spot list for this case/payoff")
        spots = entry["spots"]
    spots = list(spots)
    payoff = Payoff(kind, case.strike)
    out = np.full((len(spots), len(spots)), np.nan)
    for iy, Y0 in enumerate(spots):
        for ix, X0 in enumerate(spots):
            grid = case_grid(case, (X0, Y0), level)
            out[iy, ix] = price(case.params, payoff, grid, embed=embed, epsilon=epsilon).price
    mi = ref = None
    if entry is not None and list(entry["spots"]) == spots:
        mi, ref = np.array(entry["mi"]), np.array(entry["ref"])
    return PriceTable(f"{case.name} {kind.value} level {level}", spots, out, mi, ref)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def emit_report(report: StudyReport, path, format: str = "csv") -> Path:
    """Write ``report`` as CSV (``level,N,J,M,price,change,ratio,seconds``) or text."""
    path = Path(path)
    cols = list(report.columns)
    if format == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in report.rows:
                w.writerow([_fmt(getattr(row, c)) for c in cols])
    elif format == "text":
        path.write_text(format_report(report))
    else:
        raise ValueError(f"unknown format {format!r}")
    return path


def format_report(report: StudyReport) -> str:
    lines = [report.title, f"{'level':>5} {'price':>12} {'change':>10} {'ratio':>6}"]
    for r in report.rows:
        ch = f"{r.change:.2e}" if r.change is not None else ""
        ra = f"{r.ratio:.2f}" if r.ratio is not None else ""
        lines.append(f"{r.level:>5} {r.price:>12.6f} {ch:>10} {ra:>6}")
    if report.reference is not None:
        lines.append(f"{'Ref.':>5} {report.reference:>12.3f}")
    return "\n".join(lines) + "\n"


def format_table(table: PriceTable) -> str:
    head = "Y0\\X0 " + " ".join(f"{s:>12g}" for s in table.spots)
    lines = [table.title, head]
    for iy, Y0 in enumerate(table.spots):
        lines.append(f"{Y0:>5g} " + " ".join(f"{v:>12.6f}" for v in table.prices[iy]))
    if table.ref is not None:
        lines.append(f"max |price - Ref.| = {table.max_diff_ref:.3e}")
    return "\n".join(lines) + "\n"
