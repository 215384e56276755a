"""Strategy comparisons, the discount-factor sweep, and report emission.

Reports are written as CSV tables plus SVG line charts. CSV output is
byte-deterministic for identical inputs; every report directory carries a
manifest with the seeds and config snapshot that produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure

from .agent import Trainer, TrainingConfig, TrainingLogRow, write_training_csv
from .network import MaintenancePlan, NetworkState, cents_to_dollars, ehlos, halos, los

Planner = Callable[[NetworkState, int], tuple[MaintenancePlan, list[NetworkState]]]


@dataclass(frozen=True)
class StrategyResult:
    name: str
    halos: float
    ehlos: float
    los_series: tuple[float, ...]  # initial LoS then one entry per year
    rehab_cents: tuple[float, ...]  # per-year means over runs
    recon_cents: tuple[float, ...]
    runs: int
    seeds: tuple[int, ...]


@dataclass(frozen=True)
class ComparisonReport:
    results: tuple[StrategyResult, ...]
    manifest: dict


@dataclass(frozen=True)
class SweepEntry:
    gamma: float
    halos: float
    ehlos: float
    los_series: tuple[float, ...]
    training_rows: tuple[TrainingLogRow, ...]


@dataclass(frozen=True)
class SweepReport:
    entries: tuple[SweepEntry, ...]
    manifest: dict


def compare(
    network: NetworkState,
    strategies: Mapping[str, Planner],
    runs: int = 1,
    base_seed: int = 0,
) -> ComparisonReport:
    """Roll out each strategy ``runs`` times and average the per-year series.

    Every plan is validated against the annual budgets before it enters the
    report. Deterministic strategies simply ignore the seed they are handed.
    """
    if not strategies:
        raise ValueError("need at least one strategy")
    h = network.horizon - network.year
    budgets = [int(b) for b in network.budgets_cents[network.year :]]
    results = []
    for name, planner in strategies.items():
        los_acc = np.zeros(h + 1)
        rehab_acc = np.zeros(h)
        recon_acc = np.zeros(h)
        halos_acc = 0.0
        ehlos_acc = 0.0
        seeds = tuple(base_seed + r for r in range(runs))
        for seed in seeds:
            plan, trajectory = planner(network, seed)
            plan.validate_budgets(budgets)
            los_acc += [los(s) for s in trajectory]
            rehab_acc += plan.rehab_cents
            recon_acc += plan.recon_cents
            halos_acc += halos(trajectory, h)
            ehlos_acc += ehlos(trajectory)
        results.append(
            StrategyResult(
                name=name,
                halos=halos_acc / runs,
                ehlos=ehlos_acc / runs,
                los_series=tuple(los_acc / runs),
                rehab_cents=tuple(rehab_acc / runs),
                recon_cents=tuple(recon_acc / runs),
                runs=runs,
                seeds=seeds,
            )
        )
    manifest = {
        "kind": "comparison",
        "runs": runs,
        "base_seed": base_seed,
        "strategies": list(strategies),
        "network": _network_snapshot(network),
    }
    return ComparisonReport(tuple(results), manifest)


def gamma_sweep(
    network: NetworkState,
    gammas: Sequence[float],
    train_config: TrainingConfig,
    progress: Callable[[float, TrainingLogRow], None] | None = None,
) -> SweepReport:
    """Train one planner per discount factor under a shared seed protocol and
    roll out the greedy plan of each."""
    if not gammas:
        raise ValueError("need at least one gamma")
    h = network.horizon - network.year
    entries = []
    for gamma in gammas:
        cfg = replace(train_config, gamma=float(gamma))
        trainer = Trainer(cfg)
        rows = trainer.train(
            network,
            progress=(lambda row, g=gamma: progress(g, row)) if progress else None,
        )
        _, trajectory = trainer.greedy_plan(network)
        entries.append(
            SweepEntry(
                gamma=float(gamma),
                halos=halos(trajectory, h),
                ehlos=ehlos(trajectory),
                los_series=tuple(los(s) for s in trajectory),
                training_rows=tuple(rows),
            )
        )
    manifest = {
        "kind": "sweep",
        "gammas": [float(g) for g in gammas],
        "seed": train_config.seed,
        "training": _config_snapshot(train_config),
        "network": _network_snapshot(network),
    }
    return SweepReport(tuple(entries), manifest)


def _network_snapshot(network: NetworkState) -> dict:
    return {
        "n_segments": len(network.segments),
        "year": network.year,
        "horizon": network.horizon,
        "budgets_cents": [int(b) for b in network.budgets_cents],
    }


def _config_snapshot(cfg: TrainingConfig) -> dict:
    from dataclasses import asdict

    doc = asdict(cfg)
    doc["hidden_dims"] = list(cfg.hidden_dims)
    return doc


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.write_text("\n".join([header, *rows]) + "\n")


def _series_rows(name: str, los_series, rehab_cents, recon_cents) -> list[str]:
    rows = []
    for t in range(len(rehab_cents)):
        rows.append(
            f"{name},{t + 1},{los_series[t + 1]!r},"
            f"{cents_to_dollars(round(rehab_cents[t]))},{cents_to_dollars(round(recon_cents[t]))}"
        )
    return rows


def _save_fig(fig: Figure, path: Path, provenance: dict) -> None:
    fig.savefig(
        path,
        format="svg",
        metadata={"Date": None, "Description": json.dumps(provenance)},
    )


def _plot_los(named_series: list[tuple[str, Sequence[float]]], path: Path, provenance: dict) -> None:
    fig = Figure(figsize=(8.0, 5.0))
    ax = fig.subplots()
    for name, series in named_series:
        ax.plot(range(len(series)), series, marker="o", markersize=3, label=name)
    ax.set_xlabel("year")
    ax.set_ylabel("network LoS")
    ax.grid(alpha=0.3)
    ax.legend()
    _save_fig(fig, path, provenance)


def _plot_costs(results: Sequence[StrategyResult], path: Path, provenance: dict) -> None:
    fig = Figure(figsize=(9.0, 3.0 * max(1, len(results))))
    axes = fig.subplots(len(results), 1, squeeze=False)[:, 0]
    for ax, res in zip(axes, results):
        years = np.arange(1, len(res.rehab_cents) + 1)
        rehab_m = np.array(res.rehab_cents) / 100 / 1e6
        recon_m = np.array(res.recon_cents) / 100 / 1e6
        ax.bar(years, rehab_m, label="rehabilitation")
        ax.bar(years, recon_m, bottom=rehab_m, label="reconstruction")
        ax.set_title(res.name)
        ax.set_ylabel("spend ($M)")
        ax.grid(alpha=0.3, axis="y")
        ax.legend()
    axes[-1].set_xlabel("year")
    fig.tight_layout()
    _save_fig(fig, path, provenance)


def _plot_training(rows: Sequence[TrainingLogRow], path: Path, provenance: dict) -> None:
    fig = Figure(figsize=(10.0, 7.0))
    axes = fig.subplots(2, 2)
    episodes = [r.episode for r in rows]
    panels = [
        ("epsilon", [r.epsilon for r in rows]),
        ("return", [r.episode_return for r in rows]),
        ("q_loss", [r.q_loss for r in rows]),
        ("v_loss", [r.v_loss for r in rows]),
    ]
    for ax, (label, values) in zip(axes.ravel(), panels):
        ax.plot(episodes, values)
        ax.set_xlabel("episode")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    _save_fig(fig, path, provenance)


def emit_report(
    report: ComparisonReport | SweepReport,
    out_dir: str | Path,
    training_rows: Sequence[TrainingLogRow] | None = None,
) -> list[Path]:
    """Write the report's CSV tables, SVG charts and manifest into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ValueError(f"cannot write to {out_dir}: {exc}") from exc

    written = []
    if isinstance(report, ComparisonReport):
        results = report.results
        named = [(r.name, r.los_series) for r in results]
        summary_rows = [f"{r.name},{r.halos!r},{r.ehlos!r}" for r in results]
        series_rows = []
        for r in results:
            series_rows.extend(_series_rows(r.name, r.los_series, r.rehab_cents, r.recon_cents))
    elif isinstance(report, SweepReport):
        results = None
        named = [(f"gamma={e.gamma}", e.los_series) for e in report.entries]
        summary_rows = [f"gamma={e.gamma},{e.halos!r},{e.ehlos!r}" for e in report.entries]
        series_rows = []
        for e in report.entries:
            zero = (0,) * (len(e.los_series) - 1)
            series_rows.extend(_series_rows(f"gamma={e.gamma}", e.los_series, zero, zero))
    else:
        raise TypeError(f"unsupported report type {type(report)!r}")

    summary = out / "summary.csv"
    _write_csv(summary, "strategy,halos,ehlos", summary_rows)
    written.append(summary)
    series = out / "series.csv"
    _write_csv(series, "strategy,year,los,rehab_cost,recon_cost", series_rows)
    written.append(series)

    provenance = report.manifest
    profiles = out / "los_profiles.svg"
    _plot_los(named, profiles, provenance)
    written.append(profiles)
    if isinstance(report, ComparisonReport):
        costs = out / "cost_breakdown.svg"
        _plot_costs(results, costs, provenance)
        written.append(costs)
    else:
        for e in report.entries:
            path = out / f"training_gamma_{e.gamma}.csv"
            write_training_csv(e.training_rows, path)
            written.append(path)

    if training_rows:
        tpath = out / "training.csv"
        write_training_csv(training_rows, tpath)
        written.append(tpath)
        tfig = out / "training_curves.svg"
        _plot_training(training_rows, tfig, provenance)
        written.append(tfig)

    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(report.manifest, indent=2) + "\n")
    written.append(manifest)
    return written
