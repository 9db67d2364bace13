"""Configuration-driven command line: simulate trajectories, run the
selector, optimize controls, evaluate policies, probe distribution shift,
and rebuild the fixed-complexity risk table with figures."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from tmdp.costs import BUILTIN_COSTS, select_control, table_cost
from tmdp.measures import EmpiricalMeasure, Trajectory
from tmdp.models import ClassConfig, enumerate_candidates
from tmdp.ope import shift_risk_report
from tmdp.report import plot_rate_curve, plot_risk_curves, write_csv, write_json
from tmdp.selector import SelectorConfig, select
from tmdp.simulate import NoiseSpec, SimModel, simulate, true_density

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    """The configuration file is missing, malformed, or inconsistent."""


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with p.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def model_from_config(cfg: dict) -> SimModel:
    block = cfg.get("model", {})
    kind = block.get("kind", "I")
    defaults = NoiseSpec()
    noise = NoiseSpec(
        scale=block.get("noise_scale", defaults.scale),
        slope=block.get("noise_slope", defaults.slope),
        center=block.get("noise_center", defaults.center),
        offset=block.get("noise_offset", defaults.offset),
    )
    try:
        return SimModel(
            kind=kind,
            noise=noise,
            context_grid=tuple(block.get("context_grid", ())),
            control_role=block.get("control_role", "noise"),
            control_grid=tuple(block.get("control_grid", ())),
            clip=block.get("clip", True),
            tent_halfwidth=block.get("tent_halfwidth", 0.8),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def class_config_from_config(cfg: dict) -> ClassConfig:
    block = cfg.get("classes", {})
    family = block.get("family", "histogram")
    if family == "histogram":
        depths = block.get("y_depths", list(range(1, 11)))
        coarse = tuple(block.get("coarse_depths", (1, 0, 1)))
        return ClassConfig.table1_histograms(y_depths=depths, coarse=coarse)
    if family == "spline":
        degrees = block.get("degrees", list(range(1, 11)))
        caps = block.get("axis_caps")
        return ClassConfig.table1_splines(
            degrees=degrees, axis_caps=tuple(caps) if caps else (2, 0, 2, 10)
        )
    if family == "both":
        hist = class_config_from_config({"classes": {**block, "family": "histogram"}})
        spl = class_config_from_config({"classes": {**block, "family": "spline"}})
        return ClassConfig(
            histogram_depths=hist.histogram_depths,
            spline_degrees=spl.spline_degrees,
            spline_axis_caps=spl.spline_axis_caps,
        )
    raise ConfigError(f"unknown candidate family {family!r}")


def selector_from_config(cfg: dict) -> SelectorConfig:
    block = cfg.get("selector", {})
    try:
        return SelectorConfig(
            penalty_weight=block.get("penalty_weight", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cost_from_config(cfg: dict):
    block = cfg.get("cost", {})
    name = block.get("name", "threshold")
    grid_n = block.get("control_points")
    grid = None
    if grid_n:
        grid = tuple((np.arange(int(grid_n)) + 0.5) / int(grid_n))
    if name == "table":
        path = block.get("path")
        if not path:
            raise ConfigError("table cost needs a 'path' entry")
        return table_cost(path, control_grid=grid)
    if name not in BUILTIN_COSTS:
        raise ConfigError(f"unknown cost name {name!r}")
    factory = BUILTIN_COSTS[name]
    kwargs = {"control_grid": grid}
    if name == "chain-indicator":
        kwargs["d"] = block.get("d", 2)
    if name == "threshold":
        kwargs["cut"] = block.get("cut", 0.5)
    if name == "quadratic":
        kwargs["target"] = block.get("target", 0.0)
    if name == "constant":
        kwargs["level"] = block.get("level", 1.0)
    return factory(**kwargs)


def _run_block(cfg: dict, args) -> tuple[int, int, int]:
    block = cfg.get("run", {})
    n = int(block.get("n", 1000))
    reps = int(block.get("replications", 1))
    seed = int(args.seed if args.seed is not None else block.get("seed", 0))
    if reps < 1:
        raise ConfigError("replications must be at least 1")
    return n, reps, seed


def _trajectory(cfg: dict, args, n: int, seed: int) -> Trajectory:
    data = cfg.get("data", {})
    path = data.get("trajectory")
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"trajectory file not found: {p}")
        return Trajectory.from_csv(p)
    return simulate(model_from_config(cfg), n, seed)


def cmd_simulate(cfg: dict, args) -> int:
    n, _, seed = _run_block(cfg, args)
    model = model_from_config(cfg)
    t = simulate(model, n, seed)
    out = Path(args.out) / "trajectory.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    t.to_csv(out, comments=[f"model={model.kind} n={n} seed={seed}"])
    print(out)
    return EXIT_OK


def cmd_estimate(cfg: dict, args) -> int:
    n, _, seed = _run_block(cfg, args)
    t = _trajectory(cfg, args, n, seed)
    candidates = enumerate_candidates(t, class_config_from_config(cfg))
    result = select(candidates, EmpiricalMeasure(t), selector_from_config(cfg))
    out = Path(args.out) / "selection.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_json() + "\n")
    print(out)
    return EXIT_OK


def cmd_cost_opt(cfg: dict, args) -> int:
    n, _, seed = _run_block(cfg, args)
    t = _trajectory(cfg, args, n, seed)
    m = EmpiricalMeasure(t)
    candidates = enumerate_candidates(t, class_config_from_config(cfg))
    selected = select(candidates, m, selector_from_config(cfg)).selected
    cost = cost_from_config(cfg)
    context = float(cfg.get("cost", {}).get("context", float(t.g[0])))
    fallback = bool(cfg.get("cost", {}).get("fallback", True))
    a_hat, value, ties = select_control(selected, cost, context, m, fallback)
    out = write_json(
        Path(args.out) / "cost_opt.json",
        {
            "cost": cost.label,
            "context": context,
            "control": a_hat,
            "value": value,
            "ties": ties,
            "density": selected.label,
        },
        config=cfg,
    )
    print(out)
    return EXIT_OK


def cmd_ope(cfg: dict, args) -> int:
    from tmdp.harness import ope_sweep

    n, reps, seed = _run_block(cfg, args)
    block = cfg.get("policy", {})
    res = ope_sweep(
        kind=cfg.get("model", {}).get("kind", "I"),
        n=n,
        beta=float(block.get("beta", 0.9)),
        reps=reps,
        seed=seed,
        jobs=args.jobs,
    )
    out = write_json(
        Path(args.out) / "ope.json",
        {
            "lhs": res.lhs,
            "rhs": res.rhs,
            "holds": [bool(h) for h in res.holds],
            "all_hold": res.all_hold,
        },
        config=cfg,
    )
    print(out)
    return EXIT_OK


def cmd_shift(cfg: dict, args) -> int:
    n, _, seed = _run_block(cfg, args)
    model = model_from_config(cfg)
    shift_block = cfg.get("shift", {})
    shifted = model_from_config({"model": {**cfg.get("model", {}), **shift_block}})
    from tmdp.simulate import simulate_shifted

    train, test = simulate_shifted(model, shifted, n, int(shift_block.get("m", n)), seed)
    candidates = enumerate_candidates(train, class_config_from_config(cfg))
    report = shift_risk_report(
        train,
        test,
        candidates,
        selector_from_config(cfg),
        true_density(model),
        true_density(shifted),
    )
    out = write_json(Path(args.out) / "shift.json", asdict(report), config=cfg)
    print(out)
    return EXIT_OK


def cmd_reproduce_table1(cfg: dict, args) -> int:
    from tmdp.harness import run_table1

    n, reps, seed = _run_block(cfg, args)
    kinds = tuple(cfg.get("table1", {}).get("models", ("I", "II", "III")))
    result = run_table1(
        kinds=kinds, n=n, reps=reps, seed=seed, jobs=args.jobs,
        cfg=selector_from_config(cfg),
    )
    out_dir = Path(args.out)
    csv_path = write_csv(out_dir / "table1.csv", result.rows(), config=cfg)
    choice_rows = []
    for kind in kinds:
        for rep, (h, s) in enumerate(
            zip(result.hist_choice[kind], result.spline_choice[kind])
        ):
            choice_rows.append(
                {"model": kind, "replication": rep, "hist_level": h, "spline_level": s}
            )
    write_csv(out_dir / "table1_selected.csv", choice_rows, config=cfg)
    for mi, kind in enumerate(kinds):
        plot_risk_curves(
            out_dir / f"table1_model_{kind}.png",
            result.levels,
            {
                "histogram": result.hist_mean[mi],
                "polynomial": result.spline_mean[mi],
            },
            title=f"Model {kind}: error by complexity (n={n}, {reps} reps)",
        )
    print(csv_path)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "cost-opt": cmd_cost_opt,
    "ope": cmd_ope,
    "shift": cmd_shift,
    "reproduce-table1": cmd_reproduce_table1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmdp",
        description="Transition-density model selection for offline decision data",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="TOML configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override run seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    parser.add_argument("--out", default="out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
