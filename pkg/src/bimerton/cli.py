"""Command-line front end.

Usage::

    bimerton price run.ini [--level 1] [--mode european] [--embed exact]
    bimerton converge run.ini
    bimerton domain-study run.ini
    bimerton table run.ini
    bimerton region run.ini

Config files are sectioned ``key = value`` text; ``#`` and ``;`` start
comments.  Recognised keys::

    [model]   case = CaseI | CaseII | CaseIII
              -- or every one of: sigma_x sigma_y rho r lam mu_jx mu_jy
                 sigma_jx sigma_jy rho_j T
    [payoff]  kind = put_on_min | put_on_average ; strike = <float>
    [spot]    X0 = <float> ; Y0 = <float>
    [grid]    level = 0..4  -- or N, J, M ; half_width_x, half_width_y
    [run]     mode = american | european ; epsilon = <float>
              embed = fast | exact | padded ; levels = 0,1,2
              scale = half | double ; spots = 90,100,110
              region_tau = <fraction of T, default 0.5>
    [output]  csv, text, surface, mask, pgm, kernel = <path>

Relative output paths are resolved against ``$BIMERTON_OUTPUT_DIR`` when set.
Exit status: 0 ok, 1 config error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import harness
from .convolve import EmbedMode
from .kernel import TruncationError, build_kernel, dump_kernel
from .model import ModelParams, Payoff, PayoffKind, build_grid, validate
from .pricer import (Mode, PricingError, exercise_region, export_mask_csv,
                     export_mask_pgm, export_surface_csv, price)

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 1, 2, 3

_PARAM_KEYS = [f.name for f in dataclasses.fields(ModelParams)]
_SCHEMA = {
    "model": {"case", *_PARAM_KEYS},
    "payoff": {"kind", "strike"},
    "spot": {"X0", "Y0"},
    "grid": {"level", "N", "J", "M", "half_width_x", "half_width_y"},
    "run": {"mode", "epsilon", "embed", "levels", "scale", "spots", "region_tau"},
    "output": {"csv", "text", "surface", "mask", "pgm", "kernel"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    case: str | None
    payoff: Payoff
    spot: tuple
    level: int | None
    N: int
    J: int
    M: int
    half_width: tuple
    mode: Mode = Mode.AMERICAN
    epsilon: float | None = None
    embed: EmbedMode = EmbedMode.FAST
    levels: tuple = (0, 1, 2)
    scale: str = "double"
    spots: tuple | None = None
    region_tau: float = 0.5
    outputs: dict = field(default_factory=dict)

    def grid(self):
        return build_grid(self.params, self.spot, self.half_width, self.N, self.J, self.M)


def _read_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    return sections


def _num(entry, cast=float):
    value, lineno = entry
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {value!r} as {cast.__name__}") from None


def _enum(entry, enum_cls):
    value, lineno = entry
    try:
        return enum_cls(value.lower())
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"line {lineno}: {value!r} is not one of {choices}") from None


def _list(entry, cast):
    value, lineno = entry
    try:
        return tuple(cast(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse list {value!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; unknown keys are errors."""
    s = _read_sections(text)
    model = s.get("model", {})
    explicit = [k for k in _PARAM_KEYS if k in model]
    case = None
    if "case" in model:
        if explicit:
            raise ConfigError(f"line {model['case'][1]}: 'case' cannot be combined with "
                              f"explicit parameters ({', '.join(explicit)})")
        try:
            case = harness.get_case(model["case"][0])
        except ValueError as exc:
            raise ConfigError(f"line {model['case'][1]}: {exc}") from None
        params = case.params
    else:
        missing = [k for k in _PARAM_KEYS if k not in model]
        if missing:
            raise ConfigError(f"[model] needs 'case' or all parameters; missing {', '.join(missing)}")
        params = ModelParams(**{k: _num(model[k]) for k in _PARAM_KEYS})
    try:
        validate(params)
    except ValueError as exc:
        raise ConfigError(f"[model]: {exc}") from None

    pay = s.get("payoff", {})
    if "kind" not in pay:
        raise ConfigError("[payoff] kind is required")
    kind = _enum(pay["kind"], PayoffKind)
    if "strike" in pay:
        strike = _num(pay["strike"])
    elif case is not None:
        strike = case.strike
    else:
        raise ConfigError("[payoff] strike is required without a case")
    if not strike > 0:
        raise ConfigError(f"line {pay['strike'][1]}: strike must be > 0, got {strike}")
    payoff = Payoff(kind, strike)

    sp = s.get("spot", {})
    if "X0" not in sp or "Y0" not in sp:
        raise ConfigError("[spot] X0 and Y0 are required")
    spot = (_num(sp["X0"]), _num(sp["Y0"]))
    if min(spot) <= 0:
        raise ConfigError(f"spot prices must be > 0, got {spot}")

    gr = s.get("grid", {})
    explicit_grid = [k for k in ("N", "J", "M") if k in gr]
    if "level" in gr:
        if explicit_grid:
            raise ConfigError(f"line {gr['level'][1]}: 'level' cannot be combined with "
                              f"{', '.join(explicit_grid)}")
        level = _num(gr["level"], int)
        try:
            N, J, M = harness.level_sizes(level)
        except ValueError as exc:
            raise ConfigError(f"line {gr['level'][1]}: {exc}") from None
    elif len(explicit_grid) == 3:
        level = None
        N, J, M = (_num(gr[k], int) for k in ("N", "J", "M"))
    elif explicit_grid:
        raise ConfigError("[grid] needs all of N, J, M")
    else:
        level = 0
        N, J, M = harness.level_sizes(0)
    if "half_width_x" in gr or "half_width_y" in gr:
        hw = gr.get("half_width_x", gr.get("half_width_y"))
        half_width = (_num(gr.get("half_width_x", hw)), _num(gr.get("half_width_y", hw)))
    elif case is not None:
        half_width = (case.half_width, case.half_width)
    else:
        raise ConfigError("[grid] half_width_x/half_width_y are required without a case")

    run = s.get("run", {})
    cfg = RunConfig(params, case.name if case else None, payoff, spot, level, N, J, M, half_width)
    if "mode" in run:
        cfg.mode = _enum(run["mode"], Mode)
    if "embed" in run:
        cfg.embed = _enum(run["embed"], EmbedMode)
    if "epsilon" in run:
        cfg.epsilon = _num(run["epsilon"])
        if not cfg.epsilon > 0:
            raise ConfigError(f"line {run['epsilon'][1]}: epsilon must be > 0")
    if "levels" in run:
        cfg.levels = _list(run["levels"], int)
    if "scale" in run:
        cfg.scale = run["scale"][0]
        if cfg.scale not in ("half", "base", "double"):
            raise ConfigError(f"line {run['scale'][1]}: scale must be half, base or double")
    if "spots" in run:
        cfg.spots = _list(run["spots"], float)
    if "region_tau" in run:
        cfg.region_tau = _num(run["region_tau"])
        if not 0 <= cfg.region_tau <= 1:
            raise ConfigError(f"line {run['region_tau'][1]}: region_tau must lie in [0, 1]")
    cfg.outputs = {k: v[0] for k, v in s.get("output", {}).items()}
    try:
        cfg.grid()
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from None
    return cfg


def _out_path(cfg, key):
    p = cfg.outputs.get(key)
    if p is None:
        return None
    p = Path(p)
    base = os.environ.get("BIMERTON_OUTPUT_DIR")
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _cmd_price(cfg, out):
    grid = cfg.grid()
    res = price(cfg.params, cfg.payoff, grid, mode=cfg.mode, epsilon=cfg.epsilon, embed=cfg.embed)
    out.write(f"{res.price:.6f}\n")
    if (p := _out_path(cfg, "surface")) is not None:
        export_surface_csv(res.surface, p)
    if (p := _out_path(cfg, "kernel")) is not None:
        dump_kernel(build_kernel(cfg.params, grid, cfg.epsilon), p)
    if res.exercise_mask is not None:
        if (p := _out_path(cfg, "mask")) is not None:
            export_mask_csv(res.exercise_mask, grid, p)
        if (p := _out_path(cfg, "pgm")) is not None:
            export_mask_pgm(res.exercise_mask, p)


def _require_case(cfg, what):
    if cfg.case is None:
        raise ConfigError(f"{what} needs [model] case = ...")
    return cfg.case


def _emit(cfg, report, out):
    text = harness.format_report(report)
    out.write(text)
    if (p := _out_path(cfg, "csv")) is not None:
        harness.emit_report(report, p, "csv")
    if (p := _out_path(cfg, "text")) is not None:
        harness.emit_report(report, p, "text")


def _cmd_converge(cfg, out):
    case = _require_case(cfg, "converge")
    report = harness.convergence_study(case, cfg.payoff.kind, cfg.spot, cfg.levels,
                                       embed=cfg.embed, epsilon=cfg.epsilon, mode=cfg.mode)
    _emit(cfg, report, out)


def _cmd_domain(cfg, out):
    case = _require_case(cfg, "domain-study")
    report = harness.domain_study(case, cfg.payoff.kind, cfg.spot, cfg.scale, cfg.levels,
                                  embed=cfg.embed, epsilon=cfg.epsilon)
    _emit(cfg, report, out)


def _cmd_table(cfg, out):
    case = _require_case(cfg, "table")
    level = 2 if cfg.level is None else cfg.level
    table = harness.comprehensive_table(case, cfg.payoff.kind, cfg.spots, level,
                                        embed=cfg.embed, epsilon=cfg.epsilon,
                                        allow_high_levels=True)
    out.write(harness.format_table(table))


def _cmd_region(cfg, out):
    grid = cfg.grid()
    m = round(cfg.region_tau * grid.M)
    res = price(cfg.params, cfg.payoff, grid, mode=Mode.AMERICAN, epsilon=cfg.epsilon,
                embed=cfg.embed, snapshot_steps=(m,))
    mask = exercise_region(res.snapshots[m], cfg.payoff)
    out.write(f"tau={m * grid.dtau:.6g} exercised={int(mask.sum())}/{mask.size}\n")
    wrote = False
    if (p := _out_path(cfg, "mask")) is not None:
        export_mask_csv(mask, grid, p)
        wrote = True
    if (p := _out_path(cfg, "pgm")) is not None:
        export_mask_pgm(mask, p)
        wrote = True
    if not wrote:
        out.write("no [output] mask/pgm path given; mask not written\n")


COMMANDS = {
    "price": _cmd_price,
    "converge": _cmd_converge,
    "domain-study": _cmd_domain,
    "table": _cmd_table,
    "region": _cmd_region,
}


def run(subcommand: str, cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        COMMANDS[subcommand](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PricingError, TruncationError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def _parser():
    ap = argparse.ArgumentParser(prog="bimerton", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("config", help="run configuration file")
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--embed", choices=[e.value for e in EmbedMode])
    ap.add_argument("--level", type=int)
    ap.add_argument("--mode", choices=[m.value for m in Mode])
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        if args.level is not None:
            try:
                N, J, M = harness.level_sizes(args.level)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            cfg.level, cfg.N, cfg.J, cfg.M = args.level, N, J, M
            cfg.levels = tuple(range(args.level + 1))
        if args.epsilon is not None:
            if not args.epsilon > 0:
                raise ConfigError("--epsilon must be > 0")
            cfg.epsilon = args.epsilon
        if args.embed is not None:
            cfg.embed = EmbedMode(args.embed)
        if args.mode is not None:
            cfg.mode = Mode(args.mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())
