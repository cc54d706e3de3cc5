"""Command-line entry point: generate, train, evaluate, compare, validate.

Settings resolve as command-line flags > ``--config`` JSON file > built-in
defaults. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import os
import sys
from dataclasses import replace

from . import agent, evaluation, neural, scenario, schedulers

OUTPUT_ENV = "AEOSCHED_OUTPUT_DIR"

DEFAULTS = {
    # scenario generation
    "n": 40,
    "period": 1623.79,
    "p_clouds": 0.4,
    "p_cn2": 0.2,
    "seed": 0,
    "count": 1,
    "projection": "vertical",
    # training
    "episodes": 5000,
    "epsilon0": 1.0,
    "epsilon_decay": 0.999,
    "epsilon_min": 0.01,
    "gamma": 0.999,
    "lr": 5e-5,
    "batch_size": 64,
    "penalty": 1.0,
    "memory": 50_000,
    "hidden": 32,
    "checkpoint_every": 0,
    "fixed_scenario": False,
    # evaluation
    "solvers": "dqn,max-resolution,max-targets",
    "jobs": 1,
    "timing": False,
    "oracle_limit": 36,
    "force": False,
}

SOLVER_NAMES = ("dqn", "max-resolution", "max-targets", "oracle")


class UsageError(Exception):
    pass


def _out_dir(default_sub: str) -> str:
    return os.path.join(os.environ.get(OUTPUT_ENV, "."), default_sub)


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a fraction in [0, 1]")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be non-negative")
    return v


def _add_scenario_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=S, help="targets per scenario (40)")
    p.add_argument("--period", type=float, default=S, help="observation period in seconds (1623.79)")
    p.add_argument("--p-clouds", type=_fraction, default=S, help="cloudy cell fraction (0.4)")
    p.add_argument("--p-cn2", type=_fraction, default=S, help="fraction of cells above the C_n^2 limit (0.2)")
    p.add_argument("--seed", type=int, default=S, help="base seed (0)")
    p.add_argument("--projection", choices=scenario.PROJECTIONS, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="aeosched", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default values for any flag")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write scenario files named by seed")
    _add_scenario_flags(g)
    g.add_argument("--count", type=_positive_int, default=S, help="number of scenarios (1)")
    g.add_argument("--out", default=S, help=f"output directory (${OUTPUT_ENV}/scenarios)")
    g.add_argument("--force", action="store_true", default=S, help="overwrite existing files")

    t = sub.add_parser("train", help="train the GAT Q-network")
    _add_scenario_flags(t)
    t.add_argument("--episodes", type=_positive_int, default=S)
    t.add_argument("--epsilon0", type=_fraction, default=S)
    t.add_argument("--epsilon-decay", type=float, default=S)
    t.add_argument("--epsilon-min", type=_fraction, default=S)
    t.add_argument("--gamma", type=float, default=S)
    t.add_argument("--lr", type=float, default=S)
    t.add_argument("--batch-size", type=int, default=S)
    t.add_argument("--penalty", type=float, default=S)
    t.add_argument("--memory", type=int, default=S, help="replay capacity")
    t.add_argument("--hidden", type=int, default=S)
    t.add_argument("--fixed-scenario", action="store_true", default=S, help="train on one instance")
    t.add_argument("--scenarios", default=S, help="train on the scenario files in this directory instead")
    t.add_argument("--checkpoint", default=S, help=f"checkpoint path (${OUTPUT_ENV}/train/checkpoint.json)")
    t.add_argument("--log", default=S, help="per-episode CSV (next to the checkpoint)")
    t.add_argument("--checkpoint-every", type=_positive_int, default=S)
    t.add_argument("--resume", default=S, help="continue from this checkpoint")
    t.add_argument("--force", action="store_true", default=S)

    for name, helptext in (("evaluate", "greedy rollouts of a checkpoint"), ("compare", "run several solvers")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--scenarios", required=True, help="directory of scenario files")
        e.add_argument("--checkpoint", default=S)
        e.add_argument("--report-dir", default=S, help=f"(${OUTPUT_ENV}/{name})")
        e.add_argument("--jobs", type=int, default=S)
        e.add_argument("--timing", action="store_true", default=S, help="record wall-clock runtimes")
        e.add_argument("--penalty", type=float, default=S)
        e.add_argument("--oracle-limit", type=int, default=S)
        if name == "compare":
            e.add_argument("--solvers", default=S, help=f"comma list from {','.join(SOLVER_NAMES)}")
        else:
            e.add_argument("--schedules", action="store_true", default=S, help="also write schedule files")

    v = sub.add_parser("validate", help="check a schedule file against its scenario")
    v.add_argument("--scenario", required=True)
    v.add_argument("--schedule", required=True)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    cfg.update(vars(args))
    for key in ("p_clouds", "p_cn2", "epsilon0", "epsilon_min"):
        if not 0.0 <= float(cfg[key]) <= 1.0:
            raise UsageError(f"{key} must lie in [0, 1]")
    return cfg


def _gen_config(cfg: dict, seed: int) -> scenario.GenerationConfig:
    return scenario.GenerationConfig(
        n_targets=int(cfg["n"]),
        observation_period_s=float(cfg["period"]),
        p_clouds=float(cfg["p_clouds"]),
        p_cn2=float(cfg["p_cn2"]),
        seed=seed,
        projection=cfg["projection"],
    )


def scenario_filename(seed: int) -> str:
    return f"scenario_{seed:06d}.json"


def cmd_generate(cfg: dict) -> int:
    out = cfg.get("out") or _out_dir("scenarios")
    count = int(cfg["count"])
    seeds = [int(cfg["seed"]) + i for i in range(count)]
    paths = [os.path.join(out, scenario_filename(s)) for s in seeds]
    if not cfg["force"]:
        clash = [p for p in paths if os.path.exists(p)]
        if clash:
            raise RuntimeError(f"{clash[0]} exists (and {len(clash) - 1} more); use --force to overwrite")
    if count:
        os.makedirs(out, exist_ok=True)
    try:
        gens = [_gen_config(cfg, s) for s in seeds]
        for g in gens[:1]:
            g.check()
    except scenario.ScenarioError as exc:
        raise UsageError(str(exc)) from exc
    for g, path in zip(gens, paths):
        scenario.save(scenario.generate(g), path)
    print(f"wrote {count} scenario(s) to {out}")
    return 0


def load_dir(path: str) -> list:
    if not os.path.isdir(path):
        raise RuntimeError(f"scenario directory {path} does not exist")
    names = sorted(f for f in os.listdir(path) if f.endswith(".json"))
    if not names:
        raise RuntimeError(f"no scenario files in {path}")
    return [scenario.load(os.path.join(path, f)) for f in names]


def _training_config(cfg: dict) -> agent.TrainingConfig:
    return agent.TrainingConfig(
        epsilon0=float(cfg["epsilon0"]),
        epsilon_decay=float(cfg["epsilon_decay"]),
        epsilon_min=float(cfg["epsilon_min"]),
        gamma=float(cfg["gamma"]),
        learning_rate=float(cfg["lr"]),
        batch_size=int(cfg["batch_size"]),
        episodes=int(cfg["episodes"]),
        penalty=float(cfg["penalty"]),
        memory_capacity=int(cfg["memory"]),
        seed=int(cfg["seed"]),
        hidden=int(cfg["hidden"]),
        resample_scenarios=not cfg["fixed_scenario"],
        checkpoint_every=int(cfg["checkpoint_every"]),
    )


def cmd_train(cfg: dict) -> int:
    ckpt = cfg.get("checkpoint") or os.path.join(_out_dir("train"), "checkpoint.json")
    log = cfg.get("log") or os.path.join(os.path.dirname(ckpt) or ".", "training_log.csv")
    try:
        tcfg = _training_config(cfg)
        gen = _gen_config(cfg, int(cfg["seed"]))
        gen.check()
    except (ValueError, scenario.ScenarioError) as exc:
        raise UsageError(str(exc)) from exc
    if not cfg["force"] and "resume" not in cfg and os.path.exists(ckpt):
        raise RuntimeError(f"{ckpt} exists; use --force to overwrite")
    os.makedirs(os.path.dirname(ckpt) or ".", exist_ok=True)
    net, start, eps = None, 0, None
    if "resume" in cfg:
        net, state = neural.load_checkpoint(cfg["resume"])
        start, eps = int(state.get("episodes_done", 0)), state.get("epsilon")
    source = load_dir(cfg["scenarios"]) if "scenarios" in cfg else gen
    res = agent.train(source, tcfg, net=net, start_episode=start, epsilon=eps, checkpoint_path=ckpt, log_path=log)
    print(f"trained {res.episodes_done - start} episode(s); checkpoint {ckpt}; log {log}")
    return 0


def _solver_table(names, cfg: dict) -> dict:
    table = {}
    penalty = float(cfg["penalty"])
    for name in names:
        if name == "dqn":
            path = cfg.get("checkpoint")
            if not path:
                raise UsageError("the dqn solver needs --checkpoint")
            if not os.path.exists(path):
                raise RuntimeError(f"checkpoint {path} not found")
            net, _ = neural.load_checkpoint(path)
            table[name] = functools.partial(agent.evaluate_policy, net, penalty=penalty)
        elif name == "max-resolution":
            table[name] = schedulers.max_resolution
        elif name == "max-targets":
            table[name] = schedulers.max_targets
        elif name == "oracle":
            table[name] = functools.partial(schedulers.exact_oracle, node_limit=int(cfg["oracle_limit"]))
        else:
            raise UsageError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
    return table


def _run_report(cfg: dict, names, default_sub: str, write_schedules: bool = False) -> int:
    table = _solver_table(names, cfg)
    scens = load_dir(cfg["scenarios"])
    report = evaluation.compare(table, scens, jobs=int(cfg["jobs"]), record_runtime=bool(cfg["timing"]))
    out = cfg.get("report_dir") or _out_dir(default_sub)
    paths = evaluation.write_report(report, out)
    if write_schedules:
        sched_dir = os.path.join(out, "schedules")
        os.makedirs(sched_dir, exist_ok=True)
        for s in scens:
            for name, solve in table.items():
                schedulers.save_schedule(solve(s), os.path.join(sched_dir, f"{name}_{s.seed:06d}.json"), s.seed)
    for name in table:
        a = report.aggregate(name)
        prec = "n/a" if a["mean_precision"] is None else f"{a['mean_precision']:.3f}"
        print(f"{name:>15}: mean profit {a['mean_profit'] or 0:.3f}  precision {prec}  "
              f"discarded {a['discarded_total']}  wasted energy {a['energy_wasted']:.1f}  failures {a['failures']}")
    print(f"report: {paths['rows']}")
    return 0


def cmd_evaluate(cfg: dict) -> int:
    if not cfg.get("checkpoint"):
        raise UsageError("evaluate needs --checkpoint")
    return _run_report(cfg, ["dqn"], "evaluate", write_schedules=bool(cfg.get("schedules")))


def cmd_compare(cfg: dict) -> int:
    names = [s.strip() for s in str(cfg["solvers"]).split(",") if s.strip()]
    if not names:
        raise UsageError("no solvers given")
    return _run_report(cfg, names, "compare")


def cmd_validate(cfg: dict) -> int:
    s = scenario.load(cfg["scenario"])
    sch = schedulers.load_schedule(s, cfg["schedule"])
    problems = schedulers.validate(s, sch)
    for p in problems:
        print(p)
    print(f"{len(problems)} violation(s) in {len(sch.actions)} action(s)")
    return 1 if problems else 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"aeosched: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"aeosched: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
