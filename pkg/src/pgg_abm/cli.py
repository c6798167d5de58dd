"""Command-line entry point: ``pgg-abm {sweep,replicate,compare-rl,respond,selftest}``.

Settings come from built-in defaults, then an optional YAML config file, then
the ``PGG_ABM_OUTPUT_DIR`` environment variable, then command-line flags.
Each experiment writes ``<name>.csv`` and ``<name>.manifest.json`` into the
output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .config import OUTPUT_DIR_ENV, ConfigError, RunConfig, load_config, to_dict, validate
from .selftest import run_checks
from .values import PersonalValues


def _version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(path: Path, command: str, cfg: RunConfig, extra: dict) -> None:
    manifest = {
        "command": command,
        "version": _version_string(),
        "master_seed": cfg.master_seed,
        "config": to_dict(cfg),
        **extra,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return str(obj)


def _sweep_rows(result):
    for key, ids in result.groups.items():
        curves = result.group_curves(key)
        for x in range(curves.shape[1]):
            col = curves[:, x].astype(float)
            yield float(key), x, float(col.mean()), float(col.std()), len(ids)


def _curve_rows(result):
    for key, ids in result.groups.items():
        if key == "population":
            continue
        for agent_id in ids:
            for x, action in enumerate(result.curves[agent_id]):
                yield key, agent_id, x, int(action)


def run_experiment(name: str, cfg: RunConfig) -> dict:
    """Run one experiment and write its CSV and manifest; returns the paths."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    common = dict(seed=cfg.master_seed, scen=cfg.scenario, phase=cfg.phases)
    extra = {}
    if name == "sweep":
        result = experiments.sweep_altruism(cfg.sweep.al_values, n_agents=cfg.sweep.n_agents,
                                            self_interest=cfg.sweep.self_interest, threads=cfg.threads,
                                            thresholds=cfg.classifier, **common)
        header = ["al", "x", "mean_action", "std_action", "n_agents"]
        rows = list(_sweep_rows(result))
    elif name == "replicate":
        result = experiments.replicate_experiment(cfg.replicate.profiles, threads=cfg.threads,
                                                  thresholds=cfg.classifier, **common)
        header = ["profile", "agent_id", "x", "action"]
        rows = list(_curve_rows(result))
    elif name == "compare-rl":
        p = cfg.compare_rl
        result = experiments.compare_rl(p.values, p.n_agents, rl_mode=p.rl_mode, rl_threshold=p.rl_threshold,
                                        threads=cfg.threads, thresholds=cfg.classifier, **common)
        header = ["mode", "agent_id", "x", "action"]
        rows = list(_curve_rows(result))
    elif name == "respond":
        resp = experiments.respond(cfg.respond.values, oracle=cfg.respond.oracle, **common)
        n_actions = resp["utilities"].shape[1]
        header = ["x", "action"] + [f"utility_a{a}" for a in range(n_actions)]
        rows = [[int(x), int(a), *map(float, u)] for x, a, u in zip(resp["x"], resp["action"], resp["utilities"])]
        result = None
        extra["classification"] = experiments.classify_strategy(resp["action"], cfg.classifier, n_actions)
    else:
        raise ValueError(f"unknown experiment {name!r}")

    csv_path = out / f"{name}.csv"
    write_csv(csv_path, header, rows)
    if result is not None:
        extra.update(
            mean_curves=result.mean_curves,
            classifications=result.classifications,
            stats=result.stats,
            run=result.metadata,
        )
    manifest_path = out / f"{name}.manifest.json"
    write_manifest(manifest_path, name, cfg, extra)
    return {"csv": csv_path, "manifest": manifest_path}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--output-dir", help=f"output directory (env {OUTPUT_DIR_ENV})")
    p.add_argument("--threads", type=int, help="worker processes for agent training")
    p.add_argument("--threshold", type=float, help="network accuracy threshold (validation R^2)")
    p.add_argument("--rounds", type=int, help="experience rounds")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_values(p: argparse.ArgumentParser) -> None:
    for name, label in (("si", "self interest"), ("al", "altruism"), ("co", "conformity"), ("fa", "fairness")):
        p.add_argument(f"--{name}", type=float, help=label)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgg-abm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="altruism sweep at fixed self interest")
    _add_common(p)
    p.add_argument("--al-values", help="comma-separated altruism levels")
    p.add_argument("--n-agents", type=int)

    p = sub.add_parser("replicate", help="three-strategy replication")
    _add_common(p)

    p = sub.add_parser("compare-rl", help="framework learners vs full-information optimisers")
    _add_common(p)
    _add_values(p)
    p.add_argument("--n-agents", type=int)
    p.add_argument("--rl-mode", choices=("oracle", "trained"))

    p = sub.add_parser("respond", help="response curve of a single agent")
    _add_common(p)
    _add_values(p)
    p.add_argument("--oracle", action="store_true", help="use the exact utility instead of training")

    p = sub.add_parser("selftest", help="run the built-in property checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _merge_values(base: PersonalValues, args) -> PersonalValues:
    given = {k: getattr(args, k) for k in ("si", "al", "co", "fa") if getattr(args, k, None) is not None}
    if not given:
        return base
    try:
        return replace(base, **given)
    except ValueError as exc:
        raise ConfigError(f"values: {exc}") from exc


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        cfg = replace(cfg, output_dir=env_dir)
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    try:
        if args.threshold is not None:
            cfg = replace(cfg, phases=replace(cfg.phases, net_cfg=replace(cfg.phases.net_cfg,
                                                                          accuracy_threshold=args.threshold)))
        if args.rounds is not None:
            cfg = replace(cfg, phases=replace(cfg.phases, experience_rounds=args.rounds))
    except ValueError as exc:
        raise ConfigError(f"phases: {exc}") from exc
    if args.command == "sweep":
        sweep = cfg.sweep
        if args.al_values:
            try:
                sweep = replace(sweep, al_values=tuple(float(a) for a in args.al_values.split(",")))
            except ValueError as exc:
                raise ConfigError(f"sweep.al_values: {exc}") from exc
        if args.n_agents is not None:
            sweep = replace(sweep, n_agents=args.n_agents)
        cfg = replace(cfg, sweep=sweep)
    elif args.command == "compare-rl":
        rl = replace(cfg.compare_rl, values=_merge_values(cfg.compare_rl.values, args))
        if args.n_agents is not None:
            rl = replace(rl, n_agents=args.n_agents)
        if args.rl_mode:
            rl = replace(rl, rl_mode=args.rl_mode)
        cfg = replace(cfg, compare_rl=rl)
    elif args.command == "respond":
        resp = replace(cfg.respond, values=_merge_values(cfg.respond.values, args))
        if args.oracle:
            resp = replace(resp, oracle=True)
        cfg = replace(cfg, respond=resp)
    validate(cfg)
    return cfg


def _selftest(seed: int) -> int:
    results = run_checks(seed)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        return _selftest(args.seed)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except FileNotFoundError as exc:
        parser.print_usage(sys.stderr)
        print(f"pgg-abm: error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"pgg-abm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        paths = run_experiment(args.command, cfg)
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic, nonzero exit
        print(f"pgg-abm: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(paths["csv"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
