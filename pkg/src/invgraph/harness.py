"""Experiment orchestration: training runs, evaluation, sweeps, timing and plots.

Every command writes into ``spec.out`` and returns the paths it produced.
CSV files carry a header row; columns and units are listed in the README.
Plot files are rendered from the CSVs alone, so re-plotting never
changes a number.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import env as envmod
from .baseline import evaluate_static, load_policy, optimize_static, save_policy
from .marl import VARIANTS, AlgoConfig, RunMetrics, Trainer, episode_stats, eval_seeds
from .supply_net import SHIPPED, SupplyNetwork, resolve_network

DEFAULT_SEEDS = (0, 1, 2)
NOISE_LEVELS = (0.0, 0.1, 0.2, 0.5, 1.0, 2.0)
DEMAND_LEVELS = (3.0, 4.0, 5.0, 6.0, 7.0)
TRAIN_COLUMNS = tuple(RunMetrics.__dataclass_fields__)
EVAL_COLUMNS = ("episodes", "profit_mean", "profit_std", "backlog_median", "inventory_median")


@dataclass
class ExperimentSpec:
    command: str = "train"
    net: str = "net6"
    algo: str = "regpgcn"
    seeds: tuple = DEFAULT_SEEDS
    iterations: int = 60
    noise_std: float = 0.0
    lambda_d: float | None = None
    lambda_l: float | None = None
    history: int | None = None
    out: Path = Path("runs")
    episodes: int = 20
    resume: bool = False
    algo_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        self.out = Path(self.out)
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.algo not in VARIANTS:
            raise ValueError(f"unknown algorithm {self.algo!r}; choose from {VARIANTS}")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if str(self.net) not in SHIPPED and not Path(self.net).exists():
            raise FileNotFoundError(f"network file {self.net} does not exist")

    def network(self) -> SupplyNetwork:
        net = resolve_network(self.net)
        changes = {}
        if self.lambda_d is not None:
            changes["demand_rate"] = float(self.lambda_d)
        if self.lambda_l is not None:
            changes["lead_rate"] = float(self.lambda_l)
        if self.history is not None:
            changes["history"] = int(self.history)
        return net.replace(**changes) if changes else net

    def algo_config(self, **extra) -> AlgoConfig:
        kw = dict(variant=self.algo, noise_std=self.noise_std, iterations=self.iterations)
        kw.update(self.algo_overrides)
        kw.update(extra)
        return AlgoConfig(**kw)


# ---------------------------------------------------------------- csv helpers


def _outdir(path: Path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path


def write_csv(path, columns, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in columns})
    return Path(path)


def read_csv(path) -> list[dict]:
    """Rows with numeric cells converted to float."""

    def conv(v):
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, newline="") as fh:
        return [{k: conv(v) for k, v in r.items()} for r in csv.DictReader(fh)]


# ---------------------------------------------------------------- train / eval


def _train_paths(out: Path, seed: int) -> tuple[Path, Path]:
    return out / f"train_seed{seed}.csv", out / f"checkpoint_seed{seed}.npz"


def train_one(spec: ExperimentSpec, seed: int, out: Path, cfg: AlgoConfig | None = None) -> Trainer:
    """Train a single seed, writing the per-iteration CSV and a checkpoint after every iteration."""
    net = spec.network()
    cfg = cfg or spec.algo_config()
    csv_path, ckpt = _train_paths(out, seed)
    if spec.resume and ckpt.exists():
        tr = Trainer.load(ckpt, net)
        if tr.cfg.variant != cfg.variant or tr.cfg.noise_std != cfg.noise_std:
            raise ValueError(f"{ckpt} was trained with a different configuration")
    else:
        tr = Trainer(net, cfg, seed=seed)
    rows = [asdict(m) for m in tr.history]
    write_csv(csv_path, TRAIN_COLUMNS, rows)
    while tr.iteration < spec.iterations:
        m = tr.train_iteration()
        with open(csv_path, "a", newline="") as fh:
            csv.DictWriter(fh, fieldnames=TRAIN_COLUMNS).writerow(asdict(m))
        tr.save(ckpt)
    if not ckpt.exists():
        tr.save(ckpt)
    return tr


def cmd_train(spec: ExperimentSpec) -> Path:
    out = _outdir(spec.out)
    summary = []
    for seed in spec.seeds:
        tr = train_one(spec, seed, out)
        stats = tr.evaluate(spec.episodes)
        summary.append({"seed": seed, "final_entropy": tr.mean_entropy(), **{k: stats[k] for k in EVAL_COLUMNS}})
    write_csv(out / "summary.csv", ("seed", "final_entropy") + EVAL_COLUMNS, summary)
    with open(out / "spec.json", "w") as fh:
        json.dump({**asdict(spec), "out": str(spec.out)}, fh, indent=2)
    csvs = [_train_paths(out, s)[0] for s in spec.seeds]
    plot_training(csvs, out / "training.svg", column="profit")
    plot_training(csvs, out / "entropy.svg", column="entropy")
    return out


def cmd_eval(spec: ExperimentSpec, checkpoint) -> Path:
    """Evaluate a checkpoint (or a static policy ``.json``) on ``spec.episodes`` fixed seeds."""
    checkpoint = Path(checkpoint)
    if not checkpoint.exists():
        raise FileNotFoundError(f"checkpoint {checkpoint} does not exist")
    out = _outdir(spec.out)
    net = spec.network()
    seeds = eval_seeds(spec.episodes)
    if checkpoint.suffix == ".json":
        stats = evaluate_static(load_policy(checkpoint), net, seeds, record_traces=True)
    else:
        tr = Trainer.load(checkpoint, net)
        stats = tr.evaluate(seeds=seeds, record_traces=True, net=net)
    tdir = _outdir(out / "traces")
    for k, rows in enumerate(stats["traces"]):
        envmod.write_trace(tdir / f"episode_{k:02d}.csv", rows)
    write_csv(out / "eval_summary.csv", ("policy",) + EVAL_COLUMNS, [{"policy": str(checkpoint), **stats}])
    return out / "eval_summary.csv"


def summary_from_traces(trace_dir) -> dict:
    """Recompute the evaluation summary from per-episode trace files."""
    profits, backlog, inventory = [], [], []
    for path in sorted(Path(trace_dir).glob("episode_*.csv")):
        rows = envmod.read_trace(path)
        T = max(r["t"] for r in rows) + 1
        b = np.zeros(T)
        v = np.zeros(T)
        for r in rows:
            b[r["t"]] += r["b"]
            v[r["t"]] += r["v"]
        profits.append(sum(r["reward"] for r in rows))
        backlog.append(b)
        inventory.append(v)
    return episode_stats(profits, backlog, inventory)


def cmd_baseline(spec: ExperimentSpec, n_starts: int = 20, budget: int = 5000, episodes: int = 20) -> Path:
    out = _outdir(spec.out)
    net = spec.network()
    res = optimize_static(net, n_starts=n_starts, budget=budget, seed=spec.seeds[0], episodes=episodes)
    path = out / "static_policy.json"
    save_policy(
        path,
        res.policy,
        network=net.name,
        search_profit=res.profit,
        evaluations=res.evaluations,
        truncated=res.truncated,
    )
    write_csv(
        out / "baseline_trace.csv",
        ("move", "objective"),
        [{"move": k, "objective": f} for k, f in enumerate(res.trace)],
    )
    stats = evaluate_static(res.policy, net, eval_seeds(spec.episodes))
    write_csv(out / "eval_summary.csv", ("policy",) + EVAL_COLUMNS, [{"policy": str(path), **stats}])
    return path


# ---------------------------------------------------------------- sweeps


def cmd_noise_sweep(spec: ExperimentSpec, sigmas=NOISE_LEVELS) -> Path:
    """Train the noisy pooled variant at every noise level and seed."""
    out = _outdir(spec.out)
    rows, curves = [], []
    for sigma in sigmas:
        sub = replace(spec, algo="regpgcn", noise_std=float(sigma), out=out / f"sigma_{sigma:g}")
        sdir = _outdir(sub.out)
        for seed in spec.seeds:
            tr = train_one(sub, seed, sdir)
            # summed from the log so resumed runs report their full training time
            seconds = float(sum(m.seconds for m in tr.history))
            stats = tr.evaluate(spec.episodes)
            rows.append(
                {"sigma": sigma, "seed": seed, "final_entropy": tr.mean_entropy(), "train_seconds": seconds,
                 **{k: stats[k] for k in EVAL_COLUMNS}}
            )
            curves += [{"sigma": sigma, "seed": seed, "iteration": m.iteration, "entropy": m.entropy} for m in tr.history]
    cols = ("sigma", "seed", "final_entropy", "train_seconds") + EVAL_COLUMNS
    path = write_csv(out / "noise_sweep.csv", cols, rows)
    write_csv(out / "entropy_curves.csv", ("sigma", "seed", "iteration", "entropy"), curves)
    plot_noise_sweep(path, out / "noise_sweep.svg")
    plot_entropy_curves(out / "entropy_curves.csv", out / "entropy_curves.svg")
    return path


def best_sigma(sweep_csv) -> float:
    """Noise level with the highest seed-averaged evaluation profit."""
    rows = read_csv(sweep_csv)
    sig = sorted({r["sigma"] for r in rows})
    means = [np.mean([r["profit_mean"] for r in rows if r["sigma"] == s]) for s in sig]
    return float(sig[int(np.argmax(means))])


def demand_histogram(lam: float, samples: int = 10_000, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Empirical vs theoretical Poisson frequencies; returns (k, empirical, pmf, total variation)."""
    draws = envmod.sample_poisson(np.random.default_rng(seed), lam, size=samples)
    k = np.arange(int(draws.max()) + 1)
    emp = np.bincount(draws, minlength=len(k)) / samples
    pmf = envmod.poisson_pmf(k, lam)
    tail = max(0.0, 1.0 - pmf.sum())
    tv = 0.5 * (np.abs(emp - pmf).sum() + tail)
    return k, emp, pmf, float(tv)


def cmd_demand_shift(spec: ExperimentSpec, checkpoint, levels=DEMAND_LEVELS, trained_rate: float = 5.0) -> Path:
    """Evaluate a policy trained at the nominal demand rate under shifted rates."""
    checkpoint = Path(checkpoint)
    if not checkpoint.exists():
        raise FileNotFoundError(f"checkpoint {checkpoint} does not exist")
    out = _outdir(spec.out)
    tr = Trainer.load(checkpoint)
    if tr.net.demand_rate != trained_rate:
        raise ValueError(f"checkpoint was trained at demand rate {tr.net.demand_rate}, expected {trained_rate}")
    base = spec.network()
    rows, hist = [], []
    for lam in levels:
        net = base.replace(demand_rate=float(lam))
        stats = tr.evaluate(spec.episodes, net=net)
        k, emp, pmf, tv = demand_histogram(lam, seed=spec.seeds[0])
        rows.append({"lambda_d": lam, "tv_distance": tv, **{c: stats[c] for c in EVAL_COLUMNS}})
        hist += [{"lambda_d": lam, "k": int(a), "empirical": e, "pmf": p} for a, e, p in zip(k, emp, pmf)]
    path = write_csv(out / "demand_shift.csv", ("lambda_d", "tv_distance") + EVAL_COLUMNS, rows)
    write_csv(out / "demand_histogram.csv", ("lambda_d", "k", "empirical", "pmf"), hist)
    backlog = [r["backlog_median"] for r in rows]
    flags = {"backlog_non_decreasing": bool(np.all(np.diff(backlog) >= 0))}
    with open(out / "demand_shift_flags.json", "w") as fh:
        json.dump(flags, fh, indent=2)
    plot_demand_shift(path, out / "demand_shift.svg")
    plot_histograms(out / "demand_histogram.csv", out / "demand_histogram.svg")
    return path


def remove_outliers(x, z: float = 2.0) -> tuple[np.ndarray, int]:
    """Drop samples more than ``z`` standard deviations from the mean."""
    x = np.asarray(x, dtype=float)
    sd = x.std()
    if len(x) < 3 or sd == 0:
        return x, 0
    keep = np.abs(x - x.mean()) <= z * sd
    return x[keep], int((~keep).sum())


def cmd_timing(spec: ExperimentSpec, variants=VARIANTS, networks=SHIPPED, iterations=None, **cfg_overrides) -> Path:
    """Seconds per training iteration for each (variant, network).

    Variants are interleaved iteration by iteration so slow drifts in machine
    load hit every variant alike.
    """
    out = _outdir(spec.out)
    iterations = iterations or max(spec.iterations, 1)
    rows = []
    for name in networks:
        net = replace(spec, net=name).network()
        trainers = {
            v: Trainer(net, spec.algo_config(variant=v, **cfg_overrides), seed=spec.seeds[0]) for v in variants
        }
        times = {v: [] for v in variants}
        for _ in range(iterations):
            for v, tr in trainers.items():
                times[v].append(tr.train_iteration().seconds)
        for v in variants:
            kept, removed = remove_outliers(times[v])
            rows.append(
                {"variant": v, "network": name, "N": net.N, "critic_input_dim": trainers[v].critic.input_dim,
                 "iterations": iterations, "mean_seconds": float(kept.mean()), "std_seconds": float(kept.std()),
                 "outliers_removed": removed}
            )
    cols = ("variant", "network", "N", "critic_input_dim", "iterations", "mean_seconds", "std_seconds", "outliers_removed")
    path = write_csv(out / "timing.csv", cols, rows)
    plot_timing(path, out / "timing.svg")
    return path


# ---------------------------------------------------------------- plots


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg")
    _pyplot().close(fig)
    return Path(path)


def plot_training(csv_paths, svg_path, column="profit") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for p in csv_paths:
        rows = read_csv(p)
        ax.plot([r["iteration"] for r in rows], [r[column] for r in rows], label=Path(p).stem)
    ax.set_xlabel("iteration")
    ax.set_ylabel(column)
    ax.legend(fontsize=7)
    return _save(fig, svg_path)


def plot_noise_sweep(csv_path, svg_path) -> Path:
    rows = read_csv(csv_path)
    sig = sorted({r["sigma"] for r in rows})
    means = [np.mean([r["profit_mean"] for r in rows if r["sigma"] == s]) for s in sig]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([f"{s:g}" for s in sig], means)
    ax.set_xlabel("value noise std")
    ax.set_ylabel("evaluation profit per episode")
    return _save(fig, svg_path)


def plot_entropy_curves(csv_path, svg_path) -> Path:
    rows = read_csv(csv_path)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in sorted({r["sigma"] for r in rows}):
        its = sorted({r["iteration"] for r in rows if r["sigma"] == s})
        ent = [np.mean([r["entropy"] for r in rows if r["sigma"] == s and r["iteration"] == i]) for i in its]
        ax.plot(its, ent, label=f"noise {s:g}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean policy entropy (nats)")
    ax.legend(fontsize=7)
    return _save(fig, svg_path)


def plot_demand_shift(csv_path, svg_path) -> Path:
    rows = read_csv(csv_path)
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.5))
    lam = [r["lambda_d"] for r in rows]
    for ax, col in zip(axes, ("profit_mean", "backlog_median", "inventory_median")):
        ax.plot(lam, [r[col] for r in rows], marker="o")
        ax.set_xlabel("demand rate")
        ax.set_ylabel(col)
    return _save(fig, svg_path)


def plot_histograms(csv_path, svg_path) -> Path:
    rows = read_csv(csv_path)
    levels = sorted({r["lambda_d"] for r in rows})
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(levels), figsize=(3 * len(levels), 3), squeeze=False)
    for ax, lam in zip(axes[0], levels):
        sub = [r for r in rows if r["lambda_d"] == lam]
        k = [r["k"] for r in sub]
        ax.bar(k, [r["empirical"] for r in sub], alpha=0.6, label="sampled")
        ax.plot(k, [r["pmf"] for r in sub], color="k", marker=".", label="pmf")
        ax.set_title(f"rate {lam:g}")
    axes[0][0].legend(fontsize=7)
    return _save(fig, svg_path)


def plot_timing(csv_path, svg_path) -> Path:
    rows = read_csv(csv_path)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for v in dict.fromkeys(r["variant"] for r in rows):
        sub = sorted((r for r in rows if r["variant"] == v), key=lambda r: r["N"])
        ax.errorbar([r["N"] for r in sub], [r["mean_seconds"] for r in sub], yerr=[r["std_seconds"] for r in sub],
                    marker="o", capsize=3, label=v)
    ax.set_xlabel("nodes")
    ax.set_ylabel("seconds per iteration")
    ax.legend(fontsize=7)
    return _save(fig, svg_path)
