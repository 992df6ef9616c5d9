"""``floquet-forge`` command line front-end.

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import verify
from .effective import heff_coefficients
from .magnus import EffectiveSeries, fm_coefficients
from .models import Model, ModelSpec, build, default_state
from .operator_core import frobenius
from .plot import scaling_svg
from .propagate import ConvergenceError, PropagatorConfig
from .trigpoly import TermGrowthError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3
COMMANDS = ("heff", "fm", "compare", "scan", "check")
MAX_ORDER = 6


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: ModelSpec
    order: int
    t_grid: list[float] = field(default_factory=lambda: verify.geometric_grid(0.2, 0.5, 7))
    q: int = 1
    c: float = 1.0
    mode: str = "strobo"
    state: str | None = None
    window: float = 0.4
    threshold: float = 1e-9
    interior_margin: int = verify.INTERIOR_MARGIN
    propagator: PropagatorConfig = field(default_factory=PropagatorConfig)
    corrupt: str | None = None
    out_dir: Path = Path("floquet-forge-out")
    plot: bool = True

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        try:
            return cls._parse(data)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def _parse(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {"model", "order", "scan", "propagator", "compare", "debug", "output"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        if "model" not in data:
            raise ConfigError("config needs a [model] table")
        model = ModelSpec.from_dict(data["model"])
        order = int(data.get("order", 2))
        if not 0 <= order <= MAX_ORDER:
            raise ConfigError(f"order must be in 0..{MAX_ORDER}, got {order}")
        scan = dict(data.get("scan", {}))
        grid_spec = scan.pop("t_grid", {"start": 0.2, "factor": 0.5, "count": 7})
        if isinstance(grid_spec, Mapping):
            count, factor = int(grid_spec.get("count", 7)), float(grid_spec.get("factor", 0.5))
            if count < 2 or not 0 < factor < 1:
                raise ConfigError("t_grid needs count >= 2 and factor in (0, 1)")
            grid = verify.geometric_grid(float(grid_spec.get("start", 0.2)), factor, count)
        else:
            grid = sorted((float(t) for t in grid_spec), reverse=True)
            if len(grid) < 2 or grid[-1] <= 0:
                raise ConfigError("t_grid list needs at least two positive values")
        mode = str(scan.get("mode", "strobo"))
        if mode not in verify.MODES:
            raise ConfigError(f"scan mode must be one of {verify.MODES}, got {mode!r}")
        state = scan.get("state")
        if state not in (None, "default", "none"):
            raise ConfigError("scan state must be 'default' or 'none'")
        prop = PropagatorConfig(**data.get("propagator", {}))
        compare = data.get("compare", {})
        debug = data.get("debug", {})
        corrupt = debug.get("corrupt")
        if corrupt not in (None, "sign", "hermiticity"):
            raise ConfigError(f"debug.corrupt must be 'sign' or 'hermiticity', got {corrupt!r}")
        output = data.get("output", {})
        return cls(
            model=model,
            order=order,
            t_grid=grid,
            q=int(scan.get("q", 1)),
            c=float(scan.get("c", 1.0)),
            mode=mode,
            state=state,
            window=float(scan.get("window", 0.4)),
            threshold=float(compare.get("threshold", 1e-9)),
            interior_margin=int(compare.get("interior_margin", verify.INTERIOR_MARGIN)),
            propagator=prop,
            corrupt=corrupt,
            out_dir=Path(output.get("dir", "floquet-forge-out")),
            plot=bool(output.get("plot", True)),
        )


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _maybe_corrupt(series: EffectiveSeries, cfg: RunConfig) -> EffectiveSeries:
    return verify.corrupt_series(series, cfg.corrupt) if cfg.corrupt else series


def _print_norms(series: EffectiveSeries) -> None:
    for l, c in enumerate(series):
        print(f"{series.kind}[{l}]  |H|_F = {frobenius(c):.12e}")


def cmd_heff(cfg: RunConfig, model: Model) -> int:
    series = _maybe_corrupt(heff_coefficients(model.h, cfg.order), cfg)
    _write(cfg.out_dir / "heff.json", verify.dumps(series.to_json()))
    _print_norms(series)
    return EXIT_OK


def cmd_fm(cfg: RunConfig, model: Model) -> int:
    series = _maybe_corrupt(fm_coefficients(model.h, cfg.order), cfg)
    _write(cfg.out_dir / "fm.json", verify.dumps(series.to_json()))
    _print_norms(series)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, model: Model) -> int:
    eff = _maybe_corrupt(heff_coefficients(model.h, cfg.order), cfg)
    fm = fm_coefficients(model.h, cfg.order)
    keep = verify.model_interior(model, cfg.interior_margin)
    dist = verify.compare_series(eff, fm, keep)
    ok = all(d <= cfg.threshold for d in dist)
    lines = ["model,L,distance,threshold,pass"]
    lines += [f"{model.spec.variant},{l},{d!r},{cfg.threshold!r},{int(d <= cfg.threshold)}" for l, d in enumerate(dist)]
    _write(cfg.out_dir / "compare.csv", "\n".join(lines) + "\n")
    for l, d in enumerate(dist):
        print(f"L={l}  distance {d:.3e}  {'ok' if d <= cfg.threshold else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scan(cfg: RunConfig, model: Model) -> int:
    # Vector norm on the low-energy state for stroboscopic scans; the
    # long-horizon bound is a uniform one, so the operator distance is used.
    use_state = cfg.state == "default" if cfg.state else cfg.mode == "strobo"
    state = default_state(model) if use_state else None
    if cfg.mode == "strobo":
        report = verify.stroboscopic_scan(model, cfg.order, cfg.t_grid, cfg.q, state, cfg.propagator)
    elif cfg.mode == "horizon":
        report = verify.long_horizon_scan(model, cfg.order, cfg.t_grid, cfg.c, state=state, cfg=cfg.propagator)
    else:
        report = verify.monodromy_log_oracle(model, cfg.order, cfg.t_grid, cfg.propagator)
    stem = f"scan_{cfg.mode}"
    _write(cfg.out_dir / f"{stem}.csv", report.to_csv())
    _write(cfg.out_dir / f"{stem}.json", verify.dumps(report.to_json()))
    if cfg.plot:
        _write(cfg.out_dir / f"{stem}.svg", scaling_svg(report))
    for t, q, e in report.points:
        print(f"T={t:.6g}  q={q}  error={e:.3e}{'  (floor)' if report.floored(e) else ''}")
    for note in report.skipped:
        print(f"skipped {note}", file=sys.stderr)
    print(f"slope {report.fitted_slope:.4f}  target {report.target_slope:g} +- {cfg.window:g}  "
          f"r2 {report.r_squared:.5f}  fitted points {report.fitted_points}")
    if report.floor_flagged:
        print(f"FLOOR FLAG: {len(report.points) - report.fitted_points} point(s) at or below "
              f"the numerical floor {report.floor:.1e}")
    return EXIT_OK if report.within(cfg.window) else EXIT_FAIL


def cmd_check(cfg: RunConfig, model: Model) -> int:
    series = None
    if cfg.corrupt:
        series = _maybe_corrupt(heff_coefficients(model.h, cfg.order), cfg)
    report = verify.property_suite(model, cfg.order, series)
    _write(cfg.out_dir / "check.json", verify.dumps(report.to_json()))
    print(report.table())
    print("all checks pass" if report.passed else f"{len(report.failures())} check(s) failed")
    return EXIT_OK if report.passed else EXIT_FAIL


_HANDLERS = {"heff": cmd_heff, "fm": cmd_fm, "compare": cmd_compare, "scan": cmd_scan, "check": cmd_check}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floquet-forge", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML or JSON run configuration")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--mode", choices=verify.MODES, help="scan mode (overrides [scan] mode)")
    p.add_argument("--seed", type=int, help="seed for RANDOM_BANDED models")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        data = load_config(args.config)
        if args.seed is not None:
            model_data = dict(data.get("model", {}))
            if str(model_data.get("variant", "")).upper() != "RANDOM_BANDED":
                raise ConfigError("--seed only applies to RANDOM_BANDED models")
            model_data["seed"] = args.seed
            data = {**data, "model": model_data}
        cfg = RunConfig.from_mapping(data)
        if args.out:
            cfg.out_dir = Path(args.out)
        if args.mode:
            cfg.mode = args.mode
        model = build(cfg.model)
    except ConfigError as exc:
        print(f"floquet-forge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"floquet-forge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _HANDLERS[args.command](cfg, model)
    except (TermGrowthError, ConvergenceError, OverflowError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"floquet-forge: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
