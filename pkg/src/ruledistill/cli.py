"""Command-line front end.

    ruledistill train    --out run/            # Q-table for the muddy gridworld
    ruledistill distill  --qtable run/qtable.tsv --out run/
    ruledistill refine   --qtable run/qtable.tsv --rules run/rules.json --data run/dataset.csv --out run/
    ruledistill evaluate --qtable run/qtable.tsv --rules run/tree.json --out run/

Every option can also come from a JSON file given with ``--config``; flags
on the command line win.  Exit status: 0 success, 2 bad usage or config,
1 failure while running.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import io as rio
from .core import SchemaError
from .extraction import (
    ExtractionConfig,
    QTablePolicy,
    build_dataset,
    read_trajectories,
    record_trajectories,
    sample_single_labels,
    write_trajectories,
)
from .gridworld import GridWorld, QParams, QTable, q_learn
from .learner import LearnerConfig, learn
from .pipeline import (
    RefinementTree,
    collect_disagreements,
    evaluate,
    policy_agent,
    refine,
    render_reports,
    render_tree,
    rulelist_agent,
    tree_from_dict,
    tree_to_dict,
    write_episodes_csv,
)

log = logging.getLogger("ruledistill")


class UsageError(Exception):
    pass


# -- argument parsing -----------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with option defaults")
    p.add_argument("--env", type=Path, help="environment JSON (default: pinned 20x20 muddy world)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _learner_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("rule learner")
    g.add_argument("--beam-width", type=int, default=10)
    g.add_argument("--max-conditions", type=int, default=5)
    g.add_argument("--min-covered", type=int, default=20)
    g.add_argument("--heuristic", choices=("wra", "wra-set"), default="wra-set")
    g.add_argument("--operators", default="==,>=,<=",
                   help="comma-separated subset of ==,!=,>=,<=")
    g.add_argument("--min-heuristic", type=float, default=0.0)
    g.add_argument("--significance", type=float, default=None,
                   help="alpha of the likelihood-ratio test (off by default)")


def _policy_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("policy")
    g.add_argument("--tau", type=float, default=0.9)
    g.add_argument("--temperature", type=float, default=1.0)
    g.add_argument("--mode", choices=("distribution", "q_values"), default="distribution")
    g.add_argument("--max-steps", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ruledistill",
                                     description="Distil a tabular policy into rules.")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("train", help="Q-learning on the gridworld")
    _common(p)
    p.add_argument("--alpha", type=float, default=QParams.alpha)
    p.add_argument("--gamma", type=float, default=QParams.gamma)
    p.add_argument("--epsilon", type=float, default=QParams.epsilon)
    p.add_argument("--episodes", type=int, default=QParams.episodes)
    p.add_argument("--max-steps", type=int, default=QParams.max_steps)
    p.add_argument("--eval-episodes", type=int, default=50)

    p = sub.add_parser("distill", help="phase 1: learn a rule list")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--qtable", type=Path)
    src.add_argument("--trajectories", type=Path)
    p.add_argument("--episodes", type=int, default=50, help="episodes to record")
    p.add_argument("--greedy", action="store_true", help="record greedy instead of sampled actions")
    p.add_argument("--single-label", action="store_true",
                   help="sample one label from every labelset before learning")
    _policy_flags(p)
    _learner_flags(p)

    p = sub.add_parser("refine", help="phase 2: refine a rule list")
    _common(p)
    p.add_argument("--qtable", type=Path)
    p.add_argument("--rules", type=Path, help="rules.json or tree.json to refine")
    p.add_argument("--data", type=Path, help="phase-1 dataset CSV")
    p.add_argument("--episodes", type=int, default=1000, help="policy rollouts to collect")
    p.add_argument("--greedy-rollouts", action="store_true",
                   help="let the policy act greedily instead of sampling")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--refine-min-covered", type=int, default=5)
    _policy_flags(p)
    _learner_flags(p)

    p = sub.add_parser("evaluate", help="greedy returns of policies and rule lists")
    _common(p)
    p.add_argument("--qtable", type=Path, action="append", default=[],
                   help="Q-table to evaluate (repeatable)")
    p.add_argument("--rules", type=Path, action="append", default=[],
                   help="rules.txt, rules.json or tree.json (repeatable)")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--temperature", type=float, default=1.0)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"cannot read config {args.config}: {e}")
    if not isinstance(cfg, dict):
        parser.error(f"config {args.config} must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - set(vars(args)) - {"command"})
    if unknown:
        parser.error(f"unknown keys in {args.config}: {', '.join(unknown)}")
    sub = parser.commands[args.command]
    for key in ("qtable", "rules", "data", "trajectories", "env", "out"):
        if isinstance(cfg.get(key), str):
            cfg[key] = Path(cfg[key])
        elif isinstance(cfg.get(key), list):
            cfg[key] = [Path(v) for v in cfg[key]]
    sub.set_defaults(**{k: v for k, v in cfg.items() if k != "command"})
    return parser.parse_args(argv)


# -- helpers --------------------------------------------------------------------

def _exists(path: Path | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return Path(path)


def _env(args) -> GridWorld:
    if args.env is None:
        return GridWorld()
    try:
        return GridWorld.load(_exists(args.env, "environment config"))
    except (ValueError, TypeError, KeyError) as e:
        raise UsageError(f"bad environment config {args.env}: {e}") from None


def _learner(args) -> LearnerConfig:
    ops = tuple(o.strip() for o in args.operators.split(",") if o.strip())
    try:
        return LearnerConfig(max_conditions=args.max_conditions, min_covered=args.min_covered,
                             beam_width=args.beam_width,
                             heuristic="wra_set" if args.heuristic == "wra-set" else "wra",
                             min_heuristic=args.min_heuristic, operators=ops,
                             significance=args.significance)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _extraction(args, episodes: int, greedy: bool) -> ExtractionConfig:
    try:
        return ExtractionConfig(tau=args.tau, episodes=episodes, mode=args.mode,
                                greedy=greedy, max_steps=args.max_steps)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _policy(path: Path, env: GridWorld, temperature: float) -> QTablePolicy:
    qt = QTable.load(_exists(path, "Q-table"))
    if qt.q.shape[:2] != (env.width, env.height) or qt.actions != env.actions:
        raise SchemaError(f"{path}: Q-table shape {qt.q.shape} / actions {qt.actions} "
                          f"do not fit the environment")
    if temperature <= 0:
        raise UsageError("temperature must be positive")
    return QTablePolicy(qt, temperature)


def _load_rules(path: Path, env: GridWorld):
    """A rule list or a refinement tree, by file content."""
    path = _exists(path, "rule file")
    text = path.read_text()
    if path.suffix == ".json":
        d = json.loads(text)
        if "tree" in d:
            return tree_from_dict(d)
        return rio.rulelist_from_dict(d)
    return rio.parse_rulelist(text, env.schema)


def _config_record(args) -> dict:
    def plain(v):
        if isinstance(v, list):
            return [plain(x) for x in v]
        return str(v) if isinstance(v, Path) else v

    return {k: plain(v) for k, v in sorted(vars(args).items()) if k not in ("verbose", "config")}


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text)
    print(f"wrote {out / name}")


# -- commands -------------------------------------------------------------------

def cmd_train(args) -> None:
    env = _env(args)
    try:
        params = QParams(alpha=args.alpha, gamma=args.gamma, epsilon=args.epsilon,
                         episodes=args.episodes, max_steps=args.max_steps)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.eval_episodes < 1:
        raise UsageError("eval-episodes must be >= 1")
    qt = q_learn(env, params, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    qt.save(args.out / "qtable.tsv")
    env.save(args.out / "env.json")
    print(f"wrote {args.out / 'qtable.tsv'}")

    report = evaluate(policy_agent(QTablePolicy(qt)), env, args.eval_episodes, args.seed,
                      "greedy-q", params.max_steps)
    s = report.summary()
    print(f"greedy return over {s['episodes']} episodes: mean {s['mean']:.3f}, "
          f"min {s['min']:.0f}, max {s['max']:.0f}, truncated {s['truncated']}")
    rio.dump_json({"config": _config_record(args), "greedy_evaluation": s},
                  args.out / "train.json")


def cmd_distill(args) -> None:
    env = _env(args)
    learner = _learner(args)
    extraction = _extraction(args, args.episodes, args.greedy)
    if args.qtable is None and args.trajectories is None:
        raise UsageError("one of --qtable or --trajectories is required")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.qtable is not None:
        policy = _policy(args.qtable, env, args.temperature)
        trajectories = record_trajectories(policy, env, extraction, args.seed)
        write_trajectories(trajectories, args.out / "trajectories.jsonl")
        data = build_dataset(trajectories, env.schema, extraction.tau)
    else:
        path = _exists(args.trajectories, "trajectory file")
        trajectories = read_trajectories(path)
        if not trajectories or not any(len(t) for t in trajectories):
            raise SchemaError(f"{path}: no recorded steps")
        data = build_dataset(trajectories, env.schema, extraction.tau)
    if args.single_label:
        data = sample_single_labels(data, args.seed)

    rules = learn(data, learner)
    rio.write_dataset(data, args.out / "dataset.csv")
    rio.write_schema(data.schema, args.out / "schema.json")
    _write(args.out, "rules.txt", rio.render_rulelist(rules))
    d = rio.rulelist_to_dict(rules, data.schema)
    d["config"] = _config_record(args)
    rio.dump_json(d, args.out / "rules.json")
    print(f"{len(rules.body)} rules + default from {len(data)} instances")


def cmd_refine(args) -> None:
    env = _env(args)
    learner = _learner(args)
    _extraction(args, args.episodes, args.greedy_rollouts)
    if args.rounds < 1 or args.episodes < 1:
        raise UsageError("rounds and episodes must be >= 1")
    if args.refine_min_covered < 1:
        raise UsageError("refine-min-covered must be >= 1")
    policy = _policy(args.qtable, env, args.temperature)
    loaded = _load_rules(args.rules, env)
    tree = loaded if isinstance(loaded, RefinementTree) else RefinementTree(loaded)
    data = rio.read_dataset(_exists(args.data, "phase-1 dataset"), env.schema)

    for r in range(args.rounds):
        flat = tree.flatten()
        dis = collect_disagreements(policy, env, flat, args.episodes, args.seed + r,
                                    tau=args.tau, greedy=args.greedy_rollouts,
                                    mode=args.mode, max_steps=args.max_steps)
        print(f"round {r + 1}: disagreements per rule "
              f"{ {i + 1: n for i, n in dis.counts().items()} }")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            tree = refine(tree, dis, data, learner, args.refine_min_covered, args.seed + r)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)

    args.out.mkdir(parents=True, exist_ok=True)
    _write(args.out, "tree.txt", render_tree(tree))
    d = tree_to_dict(tree, env.schema)
    d["config"] = _config_record(args)
    rio.dump_json(d, args.out / "tree.json")
    _write(args.out, "refined_rules.txt", rio.render_rulelist(tree.flatten()))


def cmd_evaluate(args) -> None:
    env = _env(args)
    if args.episodes < 1:
        raise UsageError("episodes must be >= 1")
    if args.max_steps < 1:
        raise UsageError("max-steps must be >= 1")
    if not args.qtable and not args.rules:
        raise UsageError("give at least one --qtable or --rules agent")
    agents = []
    for path in args.qtable:
        agents.append((f"policy:{Path(path).name}", policy_agent(_policy(path, env, args.temperature))))
    for path in args.rules:
        loaded = _load_rules(path, env)
        flat = loaded.flatten() if isinstance(loaded, RefinementTree) else loaded
        agents.append((f"rules:{Path(path).name}", rulelist_agent(flat, env)))
    names = [n for n, _ in agents]
    if len(set(names)) != len(names):
        raise UsageError(f"agent names clash: {names}; give the files distinct names")

    reports = [evaluate(act, env, args.episodes, args.seed, name, args.max_steps)
               for name, act in agents]
    args.out.mkdir(parents=True, exist_ok=True)
    _write(args.out, "report.txt", render_reports(reports))
    sys.stdout.write(render_reports(reports))
    rio.dump_json({"config": _config_record(args),
                   "agents": [dict(r.summary(), returns=list(r.returns)) for r in reports]},
                  args.out / "report.json")
    write_episodes_csv(reports, args.out / "episodes.csv")


COMMANDS = {"train": cmd_train, "distill": cmd_distill, "refine": cmd_refine,
            "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.out is None:
            raise UsageError("--out is required")
        COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ruledistill {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (SchemaError, ValueError, OSError) as e:
        print(f"ruledistill {args.command}: failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
