"""Command-line front end.

Subcommands: generate, train, plan, evaluate, compare, sweep. A single JSON
config file with sections (network, generator, training, experiment) feeds
all commands; flags override file values. Exit codes: 0 success, 1 runtime
failure, 2 usage or config error.

Heavy imports happen inside the command functions so that ``--threads`` can
cap the BLAS worker pools before numpy is loaded.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from pathlib import Path

VALID_STRATEGIES = ("worst_first", "progressive_lp", "dql", "hybrid")


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {path}", code=2)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}", code=2)
    if not isinstance(doc, dict):
        raise CliError(f"config file {path} must hold a JSON object", code=2)
    return doc


def _load_network_or_die(path: str):
    from .network import load_network

    p = Path(path)
    if not p.exists():
        raise CliError(f"network file not found: {path}", code=2)
    try:
        return load_network(p)
    except ValueError as exc:
        raise CliError(str(exc), code=2)


def _generator_config(args, doc: dict):
    from .netgen import GeneratorConfig

    section = dict(doc.get("generator", {}))
    if getattr(args, "n_segments", None) is not None:
        section["n_segments"] = args.n_segments
    if getattr(args, "seed", None) is not None:
        section["seed"] = args.seed
    try:
        return GeneratorConfig.from_dict(section)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad generator config: {exc}", code=2)


def _training_config(args, doc: dict):
    from .agent import TrainingConfig

    section = dict(doc.get("training", {}))
    for key in ("episodes", "seed", "gamma", "target_rule"):
        value = getattr(args, key, None)
        if value is not None:
            section[key] = value
    try:
        return TrainingConfig(**section)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad training config: {exc}", code=2)


def _prepare_out_dir(path_str: str, force: bool) -> Path:
    out = Path(path_str)
    if out.exists():
        if not force:
            raise CliError(f"output directory {out} already exists (use --force)", code=2)
        shutil.rmtree(out)
    return out


def cmd_generate(args) -> int:
    from .netgen import generate
    from .network import cents_to_dollars, save_network

    doc = _load_config(args.config)
    gcfg = _generator_config(args, doc)
    network = generate(gcfg)
    save_network(network, args.out, extra={"generator": gcfg.to_dict()})
    total_area = sum(s.area for s in network.segments)
    print(f"segments: {len(network.segments)}")
    print(f"total area: {total_area:.1f} m^2")
    print(f"annual budget: ${cents_to_dollars(network.budgets_cents[0])}")
    print(f"wrote {args.out}")
    return 0


def cmd_train(args) -> int:
    from .agent import Trainer, write_training_csv

    network = _load_network_or_die(args.network)
    tcfg = _training_config(args, _load_config(args.config))
    out = _prepare_out_dir(args.out_dir, args.force)

    trainer = Trainer(tcfg)

    def progress(row):
        if row.episode % max(1, tcfg.episodes // 20) == 0 or row.episode == tcfg.episodes - 1:
            print(
                f"episode {row.episode}: return={row.episode_return:.2f} "
                f"q_loss={row.q_loss:.5f} v_loss={row.v_loss:.5f} eps={row.epsilon:.3f}",
                file=sys.stderr,
            )

    rows = trainer.train(network, progress=progress if not args.quiet else None)

    # Stage everything, then rename: an interrupted run leaves no partial bundle.
    staging = out.with_name(out.name + f".partial-{os.getpid()}")
    if staging.exists():
        shutil.rmtree(staging)
    trainer.save_bundle(staging, extra={"network_file": str(args.network)})
    write_training_csv(rows, staging / "training.csv")
    os.replace(staging, out)
    print(f"trained {tcfg.episodes} episodes; bundle written to {out}")
    return 0


def _load_bundle_or_die(path: str):
    from .agent import Trainer

    p = Path(path)
    if not p.exists():
        raise CliError(f"bundle directory not found: {path}", code=2)
    try:
        return Trainer.load_bundle(p)
    except ValueError as exc:
        raise CliError(str(exc), code=2)


def cmd_plan(args) -> int:
    from .network import ehlos, halos, los, save_plan

    trainer = _load_bundle_or_die(args.bundle)
    network = _load_network_or_die(args.network)
    plan, trajectory = trainer.greedy_plan(network)
    series = [los(s) for s in trajectory]
    h = network.horizon - network.year
    meta = {
        "strategy": "dql",
        "bundle": str(args.bundle),
        "network_file": str(args.network),
        "seed": trainer.config.seed,
        "halos": halos(trajectory, h),
        "ehlos": ehlos(trajectory),
    }
    save_plan(plan, series, args.out, meta=meta)
    print(f"halos={meta['halos']:.4f} ehlos={meta['ehlos']:.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .network import cents_to_dollars, load_plan, los
    from .simulate import rollout_plan

    network = _load_network_or_die(args.network)
    plan_path = Path(args.plan)
    if not plan_path.exists():
        raise CliError(f"plan file not found: {args.plan}", code=2)
    try:
        plan, stored_series, _ = load_plan(plan_path)
    except ValueError as exc:
        raise CliError(str(exc), code=2)

    replayed, trajectory = rollout_plan(network, plan.actions)
    series = [los(s) for s in trajectory]
    if len(series) != len(stored_series):
        raise CliError("stored trajectory length does not match the network horizon")
    worst = max(abs(a - b) for a, b in zip(series, stored_series))
    if worst > 1e-9:
        raise CliError(f"stored trajectory diverges from re-simulation by {worst:.3e}")

    h = network.horizon - network.year
    recomputed_halos = sum(series[1:]) / h
    lines = ["year,los,rehab_cost,recon_cost"]
    for t in range(h):
        lines.append(
            f"{t + 1},{series[t + 1]!r},"
            f"{cents_to_dollars(replayed.rehab_cents[t])},{cents_to_dollars(replayed.recon_cents[t])}"
        )
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    print(f"halos={recomputed_halos!r} ehlos={series[-1]!r} max_trajectory_diff={worst:.3e}")
    return 0


def cmd_compare(args) -> int:
    from .baselines import hybrid_first_year_plan, progressive_lp_plan, worst_first_plan
    from .experiments import compare, emit_report

    names = [s.strip() for s in args.strategies.split(",") if s.strip()]
    unknown = [s for s in names if s not in VALID_STRATEGIES]
    if unknown:
        raise CliError(
            f"unknown strategy name(s) {', '.join(unknown)}; "
            f"valid names: {', '.join(VALID_STRATEGIES)}",
            code=2,
        )
    if not names:
        raise CliError(f"no strategies given; valid names: {', '.join(VALID_STRATEGIES)}", code=2)

    network = _load_network_or_die(args.network)
    trainer = None
    if any(s in ("dql", "hybrid") for s in names):
        if not args.bundle:
            raise CliError("strategies dql/hybrid need --bundle", code=2)
        trainer = _load_bundle_or_die(args.bundle)

    planners = {}
    for name in names:
        if name == "worst_first":
            planners[name] = lambda net, seed: worst_first_plan(net)
        elif name == "progressive_lp":
            planners[name] = lambda net, seed: progressive_lp_plan(net)
        elif name == "dql":
            planners[name] = lambda net, seed: trainer.greedy_plan(net)
        elif name == "hybrid":
            planners[name] = lambda net, seed: hybrid_first_year_plan(trainer, net)

    report = compare(network, planners, runs=args.runs, base_seed=args.seed or 0)
    emit_report(report, args.out_dir)
    print(f"{'strategy':<16} {'halos':>8} {'ehlos':>8}")
    for res in report.results:
        print(f"{res.name:<16} {res.halos:>8.4f} {res.ehlos:>8.4f}")
    print(f"report written to {args.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    from .experiments import emit_report, gamma_sweep

    network = _load_network_or_die(args.network)
    tcfg = _training_config(args, _load_config(args.config))
    try:
        gammas = [float(g) for g in args.gammas.split(",") if g.strip()]
    except ValueError:
        raise CliError(f"bad gamma list {args.gammas!r}", code=2)
    if not gammas:
        raise CliError("no gammas given", code=2)

    def progress(gamma, row):
        if not args.quiet and row.episode % 50 == 0:
            print(f"gamma={gamma} episode {row.episode}: return={row.episode_return:.2f}", file=sys.stderr)

    report = gamma_sweep(network, gammas, tcfg, progress=progress)
    emit_report(report, args.out_dir)
    print(f"{'gamma':>6} {'halos':>8} {'ehlos':>8}")
    for e in report.entries:
        print(f"{e.gamma:>6} {e.halos:>8.4f} {e.ehlos:>8.4f}")
    print(f"report written to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paveplan",
        description="Multi-year road maintenance planning under annual budgets.",
    )
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic network file")
    p.add_argument("--config", required=True, help="JSON config with a generator section")
    p.add_argument("--out", required=True, help="output network file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-segments", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a planner on a network")
    p.add_argument("--network", required=True)
    p.add_argument("--config", default=None, help="JSON config with a training section")
    p.add_argument("--out-dir", required=True, help="bundle output directory")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--target-rule", dest="target_rule", choices=("expected_sarsa", "max"), default=None)
    p.add_argument("--force", action="store_true", help="replace an existing bundle directory")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="emit the greedy plan of a trained bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", help="re-simulate a plan and check its trajectory")
    p.add_argument("--plan", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--out", default=None, help="optional evaluation CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compare strategies on one network")
    p.add_argument("--network", required=True)
    p.add_argument("--strategies", required=True, help=f"comma list of {','.join(VALID_STRATEGIES)}")
    p.add_argument("--bundle", default=None, help="trained bundle for dql/hybrid")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="train and evaluate across discount factors")
    p.add_argument("--network", required=True)
    p.add_argument("--gammas", required=True, help="comma list, e.g. 1.0,0.1")
    p.add_argument("--config", default=None)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
