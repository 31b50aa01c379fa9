"""Experiment configs, presets and the grid runner behind the CLI.

A grid is a list of cells, one per (method, condition, replicate). Cells
are independent and may run in a process pool; each derives its seeds from
``(base_seed, condition_index, replicate)`` so every method in a cell sees
the same noisy labels and initialisation, and results do not depend on
scheduling. Output files are written by the parent in grid order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import Dataset, NoiseSpec, inject_noise, load_csv, load_idx, make_gaussian_mixture, make_imbalanced
from .metrics import RunRecord, accuracy, detect_overfit_shape, generalization_gap, worst_class_accuracy
from .nn import predict
from .sat import METHODS, TrainConfig
from .theory import WeightingScenario, optimal_weights, random_unit_weights, variance_sweep
from .training import fit

EXPERIMENTS = ("noise_sweep", "random_labels", "imbalance", "variance_lab", "single_run")
SOURCES = ("gaussian", "csv", "idx")


@dataclass
class DataSpec:
    source: str = "gaussian"
    class_count: int = 4
    dim: int = 10
    train_per_class: int | list = 250
    test_per_class: int | list = 1000
    separation: float = 3.0
    spread: float = 1.0
    seed: int = 0
    noise_kind: str = "none"
    noise_rate: float = 0.0
    majority_class: int = 0
    minority_class: int = 1
    train_path: str | None = None
    test_path: str | None = None
    sidecar_path: str | None = None
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None

    def problems(self) -> list[str]:
        out = []
        if self.source not in SOURCES:
            out.append(f"data.source must be one of {', '.join(SOURCES)} (got {self.source!r})")
        if self.source == "gaussian":
            if not (isinstance(self.class_count, int) and self.class_count >= 2):
                out.append(f"data.class_count must be an integer >= 2 (got {self.class_count!r})")
            if not (isinstance(self.dim, int) and self.dim > 0):
                out.append(f"data.dim must be a positive integer (got {self.dim!r})")
            for name in ("train_per_class", "test_per_class"):
                v = getattr(self, name)
                vals = v if isinstance(v, list) else [v]
                if not all(isinstance(x, int) and x >= 0 for x in vals):
                    out.append(f"data.{name} must be a non-negative integer or list of them (got {v!r})")
                elif isinstance(v, list) and isinstance(self.class_count, int) and len(v) != self.class_count:
                    out.append(f"data.{name} needs {self.class_count} entries (got {len(v)})")
            if not self.separation > 0:
                out.append(f"data.separation must be positive (got {self.separation!r})")
            if not self.spread > 0:
                out.append(f"data.spread must be positive (got {self.spread!r})")
        if self.source == "csv" and not (self.train_path and self.test_path):
            out.append("data.train_path and data.test_path are required for source csv")
        if self.source == "idx" and not all(
            (self.train_images, self.train_labels, self.test_images, self.test_labels)
        ):
            out.append("data.train_images/train_labels/test_images/test_labels are required for source idx")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            out.append(f"data.seed must be a non-negative integer (got {self.seed!r})")
        try:
            NoiseSpec(self.noise_kind, self.noise_rate)
        except (ValueError, TypeError) as exc:
            out.append(f"data.noise_kind/noise_rate: {exc}")
        if self.majority_class == self.minority_class:
            out.append("data.majority_class and data.minority_class must differ")
        return out

    def per_class(self, which: str) -> list[int]:
        v = getattr(self, which)
        return list(v) if isinstance(v, list) else [v] * self.class_count


@dataclass
class VarianceSpec:
    in_dist_probs: list = field(default_factory=lambda: [0.9, 0.9, 0.3, 0.3])
    competitors: int = 20
    trials: int = 100_000
    loss_variance: float = 1.0
    in_dist_loss_mean: float = 1.0

    def problems(self) -> list[str]:
        out = []
        if not self.in_dist_probs or not all(0 < p <= 1 for p in self.in_dist_probs):
            out.append(f"variance.in_dist_probs must be a nonempty list in (0, 1] (got {self.in_dist_probs!r})")
        if not (isinstance(self.competitors, int) and self.competitors >= 0):
            out.append(f"variance.competitors must be a non-negative integer (got {self.competitors!r})")
        if not (isinstance(self.trials, int) and self.trials >= 10_000):
            out.append(f"variance.trials must be an integer >= 10000 (got {self.trials!r})")
        if not self.loss_variance > 0:
            out.append(f"variance.loss_variance must be positive (got {self.loss_variance!r})")
        return out


@dataclass
class ExperimentConfig:
    experiment: str = "single_run"
    data: DataSpec = field(default_factory=DataSpec)
    methods: list = field(default_factory=lambda: ["sat"])
    noise_rates: list = field(default_factory=lambda: [0.4])
    imbalance_ratios: list = field(default_factory=lambda: [9, 99])
    replications: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "results"
    variance: VarianceSpec = field(default_factory=VarianceSpec)

    def problems(self) -> list[str]:
        out = []
        if self.experiment not in EXPERIMENTS:
            out.append(f"experiment must be one of {', '.join(EXPERIMENTS)} (got {self.experiment!r})")
        out += self.data.problems()
        if self.experiment != "variance_lab":
            if not self.methods:
                out.append("methods must be a nonempty list")
            for m in self.methods:
                if m not in METHODS:
                    out.append(f"methods: unknown method {m!r} (expected one of {', '.join(METHODS)})")
        if self.experiment == "noise_sweep":
            if not self.noise_rates:
                out.append("noise_rates must be a nonempty list")
            if not all(isinstance(r, (int, float)) and 0 <= r <= 1 for r in self.noise_rates):
                out.append(f"noise_rates must lie in [0, 1] (got {self.noise_rates!r})")
        if self.experiment == "imbalance":
            if not self.imbalance_ratios:
                out.append("imbalance_ratios must be a nonempty list")
            if not all(isinstance(r, (int, float)) and r >= 1 for r in self.imbalance_ratios):
                out.append(f"imbalance_ratios must all be >= 1 (got {self.imbalance_ratios!r})")
        if self.experiment == "variance_lab":
            out += self.variance.problems()
        if not (isinstance(self.replications, int) and self.replications >= 1):
            out.append(f"replications must be a positive integer (got {self.replications!r})")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ValueError("invalid config:\n  " + "\n  ".join(problems))
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Build a config; fields left out take the named experiment's preset."""
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
        problems = []
        top = {f.name for f in fields(cls)}
        problems += [f"unknown field {k!r}" for k in sorted(set(d) - top)]
        base = preset(d.get("experiment", "single_run")) if d.get("experiment", "single_run") in EXPERIMENTS else cls()
        merged = base.to_dict()
        for key, value in d.items():
            if key in ("data", "train", "variance"):
                if not isinstance(value, dict):
                    problems.append(f"{key} must be an object")
                    continue
                known = set(merged[key])
                problems += [f"unknown field {key}.{k}" for k in sorted(set(value) - known)]
                merged[key].update({k: v for k, v in value.items() if k in known})
            elif key in top:
                merged[key] = value
        try:
            train = TrainConfig(**merged["train"])
        except (ValueError, TypeError) as exc:
            train = None
            problems.append(f"train: {exc}")
        cfg = cls(
            experiment=merged["experiment"],
            data=DataSpec(**merged["data"]),
            methods=list(merged["methods"]) if isinstance(merged["methods"], list) else merged["methods"],
            noise_rates=merged["noise_rates"],
            imbalance_ratios=merged["imbalance_ratios"],
            replications=merged["replications"],
            train=train or TrainConfig(),
            output_dir=merged["output_dir"],
            variance=VarianceSpec(**merged["variance"]),
        )
        problems += cfg.problems()
        if problems:
            raise ValueError("invalid config:\n  " + "\n  ".join(problems))
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(d)


def preset(name: str) -> ExperimentConfig:
    """Default config for each experiment.

    Weight decay is what lets soft labels forget spurious structure at this
    scale; the random-label and imbalance presets need it, the noise sweep
    runs plain SGD.
    """
    if name == "noise_sweep":
        return ExperimentConfig(
            experiment=name,
            data=DataSpec(class_count=4, dim=10, train_per_class=250, test_per_class=1000),
            methods=["ce", "ce_early_stop", "mixup", "sat", "sam"],
            noise_rates=[0.2, 0.4, 0.6, 0.8],
            replications=3,
            train=TrainConfig(total_epochs=200, start_epoch=60),
        )
    if name == "random_labels":
        return ExperimentConfig(
            experiment=name,
            data=DataSpec(class_count=4, dim=10, train_per_class=500, test_per_class=500),
            methods=["ce", "mixup", "sat", "sam"],
            replications=1,
            train=TrainConfig(total_epochs=100, start_epoch=20, weight_decay=2e-2),
        )
    if name == "imbalance":
        return ExperimentConfig(
            experiment=name,
            data=DataSpec(class_count=2, dim=10, train_per_class=900, test_per_class=1000),
            methods=["ce", "sat"],
            imbalance_ratios=[9, 24, 99],
            replications=1,
            train=TrainConfig(total_epochs=200, start_epoch=60, weight_decay=5e-3),
        )
    if name == "variance_lab":
        return ExperimentConfig(experiment=name, methods=[], replications=1)
    if name == "single_run":
        return ExperimentConfig(
            experiment=name,
            data=DataSpec(noise_kind="uniform", noise_rate=0.4),
            methods=["sat"],
            train=TrainConfig(total_epochs=200, start_epoch=60),
        )
    raise ValueError(f"unknown experiment {name!r}")


# ---------------------------------------------------------------- data


def _pair_subset(ds: Dataset, majority: int, minority: int) -> Dataset:
    keep = np.flatnonzero((ds.labels == majority) | (ds.labels == minority))
    labels = np.where(ds.labels[keep] == majority, 0, 1)
    return Dataset(ds.features[keep], labels, 2, labels.copy(), ds.split_tag)


def load_base_data(spec: DataSpec) -> tuple[Dataset, Dataset]:
    """Clean train and test sets described by ``spec``."""
    if spec.source == "gaussian":
        args = (spec.class_count, spec.dim)
        train = make_gaussian_mixture(*args, spec.per_class("train_per_class"), spec.separation, spec.spread, spec.seed)
        test = make_gaussian_mixture(
            *args, spec.per_class("test_per_class"), spec.separation, spec.spread, spec.seed, split="test"
        )
        return train, test
    if spec.source == "csv":
        train = load_csv(spec.train_path)
        test = load_csv(spec.test_path, split_tag="test")
        c = max(train.class_count, test.class_count)
        train = load_csv(spec.train_path, class_count=c)
        test = load_csv(spec.test_path, class_count=c, split_tag="test")
        if spec.sidecar_path:
            side = json.loads(Path(spec.sidecar_path).read_text())
            train.clean_labels = np.asarray(side["train_clean_labels"], dtype=np.int64)
            test.clean_labels = np.asarray(side["test_clean_labels"], dtype=np.int64)
        return train, test
    train = load_idx(spec.train_images, spec.train_labels)
    test = load_idx(spec.test_images, spec.test_labels, split_tag="test")
    c = max(train.class_count, test.class_count)
    train.class_count = test.class_count = c
    return train, test


def cell_seeds(base_seed: int, condition_index: int, replicate: int) -> dict:
    noise, test_noise, train = np.random.SeedSequence([base_seed, condition_index, replicate]).generate_state(3)
    return {"noise_seed": int(noise), "test_noise_seed": int(test_noise), "train_seed": int(train)}


def cell_data(cfg: ExperimentConfig, condition, seeds: dict):
    """(train, test, noisy_test) for one grid condition."""
    train, test = load_base_data(cfg.data)
    exp = cfg.experiment
    if exp == "imbalance":
        train = make_imbalanced(train, cfg.data.majority_class, cfg.data.minority_class, condition, seeds["noise_seed"])
        test = _pair_subset(test, cfg.data.majority_class, cfg.data.minority_class)
        return train, test, test
    if exp == "random_labels":
        kind, rate = "random_all", 1.0
    elif exp == "noise_sweep":
        kind, rate = "uniform", float(condition)
    else:
        kind, rate = cfg.data.noise_kind, cfg.data.noise_rate
    train = inject_noise(train, NoiseSpec(kind, rate, seeds["noise_seed"]))
    noisy_test = inject_noise(test, NoiseSpec(kind, rate, seeds["test_noise_seed"]))
    if exp == "random_labels":
        return train, noisy_test, noisy_test
    return train, test, noisy_test


# ---------------------------------------------------------------- grid


@dataclass
class Cell:
    index: int
    method: str
    condition_index: int
    condition: object
    replicate: int
    experiment: str = ""

    @property
    def condition_name(self) -> str:
        if isinstance(self.condition, str):
            return self.condition
        prefix = {"noise_sweep": "rate", "imbalance": "ratio"}
        return f"{prefix.get(self.experiment, 'cond')}{self.condition:g}"

    @property
    def path(self) -> str:
        return f"{self.method}/{self.condition_name}/rep{self.replicate}"


def conditions(cfg: ExperimentConfig) -> list:
    if cfg.experiment == "noise_sweep":
        return list(cfg.noise_rates)
    if cfg.experiment == "imbalance":
        return list(cfg.imbalance_ratios)
    if cfg.experiment == "random_labels":
        return ["random"]
    return ["run"]


def build_grid(cfg: ExperimentConfig) -> list[Cell]:
    cells = []
    for ci, cond in enumerate(conditions(cfg)):
        for method in cfg.methods:
            for rep in range(cfg.replications):
                cells.append(Cell(len(cells), method, ci, cond, rep, cfg.experiment))
    return cells


def run_cell(cfg: ExperimentConfig, cell: Cell) -> dict:
    """Train one cell; returns its per-epoch CSV text and summary."""
    seeds = cell_seeds(cfg.train.seed, cell.condition_index, cell.replicate)
    train, test, noisy_test = cell_data(cfg, cell.condition, seeds)
    tc = cfg.train.with_(method=cell.method, seed=seeds["train_seed"])
    result = fit(tc, train, test)
    record = result.record
    final = record.final
    test_noisy = accuracy(result.net, noisy_test, "noisy")
    summary = {
        "experiment": cfg.experiment,
        "method": cell.method,
        "condition": cell.condition,
        "replicate": cell.replicate,
        **seeds,
        "epochs_run": len(record),
        "final_test_acc": final.test_acc,
        "test_acc_noisy": test_noisy,
        "train_acc_noisy": final.train_acc_noisy,
        "train_acc_clean": final.train_acc_clean,
        "gen_gap": generalization_gap(final.train_acc_noisy, test_noisy),
        "worst_class_acc": worst_class_accuracy(final.per_class_test_acc),
        "soft_label_uniformity": final.soft_label_uniformity,
        "labels_changed_count": final.labels_changed_count,
        "per_class_test_acc": final.per_class_test_acc,
    }
    if cfg.experiment == "random_labels":
        majority = int(np.argmax(np.bincount(train.labels, minlength=train.class_count)))
        summary["all_test_predictions_majority"] = bool(np.all(predict(result.net, test.features) == majority))
    if cfg.experiment == "imbalance":
        curve = record.worst_class_curve()
        at = min(tc.start_epoch, len(curve)) - 1
        summary["worst_class_at_start_epoch"] = float(curve[at])
    if cfg.experiment == "noise_sweep" or (cfg.experiment == "single_run" and cfg.data.noise_kind == "uniform"):
        rate = cell.condition if cfg.experiment == "noise_sweep" else cfg.data.noise_rate
        summary.update(detect_overfit_shape(record, rate, train.class_count))
    return {"cell": cell, "ok": True, "epochs_csv": record.to_csv(), "summary": summary}


def _safe_run(cfg, cell):
    try:
        return run_cell(cfg, cell)
    except Exception as exc:  # reported per cell; the rest of the grid still runs
        return {
            "cell": cell,
            "ok": False,
            "error": f"{type(exc).__name__}: {exc}",
            "traceback": traceback.format_exc(),
        }


def run_grid(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    cells = build_grid(cfg)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_safe_run, [cfg] * len(cells), cells))
    return [_safe_run(cfg, c) for c in cells]


def median_summary(summaries: list[dict]) -> dict:
    """The replicate with the median final clean-test accuracy (lower median
    for an even count; ties broken by replicate order)."""
    ranked = sorted(summaries, key=lambda s: (s["final_test_acc"], s["replicate"]))
    chosen = dict(ranked[(len(ranked) - 1) // 2])
    chosen["median_of"] = len(summaries)
    chosen["replicate_test_accs"] = [s["final_test_acc"] for s in summaries]
    return chosen


# ---------------------------------------------------------------- output


def _dump(obj) -> str:
    def fix(v):
        if isinstance(v, float) and math.isnan(v):
            return None
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        return v

    return json.dumps(fix(obj), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    return "FAILED" if v is None else f"{v:.6f}"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


@dataclass
class ExperimentOutcome:
    root: Path
    results: list
    medians: dict
    table: str
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def run_experiment(cfg: ExperimentConfig, output_dir, jobs: int = 1, figures: bool = True) -> ExperimentOutcome:
    cfg.validate()
    root = Path(output_dir) / cfg.experiment
    root.mkdir(parents=True, exist_ok=True)
    (root / "config.json").write_text(cfg.to_json())
    if cfg.experiment == "variance_lab":
        return _variance_lab(cfg, root, figures)

    results = run_grid(cfg, jobs)
    failures = []
    groups: dict[tuple, list] = {}
    records: dict[tuple, RunRecord] = {}
    for res in results:
        cell = res["cell"]
        cell_dir = root / cell.path
        cell_dir.mkdir(parents=True, exist_ok=True)
        if not res["ok"]:
            failures.append({"cell": cell.path, "error": res["error"]})
            (cell_dir / "error.txt").write_text(res["traceback"])
            continue
        (cell_dir / "epochs.csv").write_text(res["epochs_csv"])
        (cell_dir / "summary.json").write_text(_dump(res["summary"]))
        key = (cell.method, cell.condition_index)
        groups.setdefault(key, []).append(res["summary"])
        records[(cell.method, cell.condition_index, cell.replicate)] = RunRecord.from_csv(res["epochs_csv"])

    names = {c.condition_index: c.condition_name for c in build_grid(cfg)}
    medians = {}
    for (method, ci), sums in groups.items():
        if len(sums) < cfg.replications:
            continue
        medians[(method, ci)] = med = median_summary(sums)
        if cfg.replications > 1:
            (root / method / names[ci] / "summary.json").write_text(_dump(med))

    table = _table(cfg, medians)
    (root / "table.csv").write_text(table)
    if failures:
        (root / "failures.json").write_text(_dump(failures))
    curves = None
    if cfg.experiment == "imbalance":
        curves = _worst_class_curves(cfg, medians, records)
        (root / "curves.dat").write_text(curves)
    if figures:
        from . import plotting

        plotting.render(cfg, root, medians, records, curves)
    return ExperimentOutcome(root, results, medians, table, failures)


def _table(cfg: ExperimentConfig, medians: dict) -> str:
    conds = conditions(cfg)

    def get(method, ci, field_name):
        med = medians.get((method, ci))
        return None if med is None else med[field_name]

    if cfg.experiment == "noise_sweep":
        rows = [["noise_rate", *cfg.methods]]
        for ci, rate in enumerate(conds):
            rows.append([f"{rate:g}", *[_fmt(get(m, ci, "final_test_acc")) for m in cfg.methods]])
        return _csv_text(rows)
    if cfg.experiment == "random_labels":
        rows = [["method", "train_acc", "test_acc", "gen_gap", "uniformity"]]
        for m in cfg.methods:
            rows.append(
                [m, *[_fmt(get(m, 0, f)) for f in ("train_acc_noisy", "test_acc_noisy", "gen_gap", "soft_label_uniformity")]]
            )
        return _csv_text(rows)
    if cfg.experiment == "imbalance":
        rows = [["method", "ratio", "worst_class_at_start_epoch", "worst_class_final", "test_acc_final"]]
        for ci, ratio in enumerate(conds):
            for m in cfg.methods:
                rows.append(
                    [m, f"{ratio:g}", *[_fmt(get(m, ci, f)) for f in ("worst_class_at_start_epoch", "worst_class_acc", "final_test_acc")]]
                )
        return _csv_text(rows)
    rows = [["method", "final_test_acc", "test_acc_noisy", "gen_gap", "worst_class_acc", "soft_label_uniformity"]]
    for m in cfg.methods:
        rows.append(
            [m, *[_fmt(get(m, 0, f)) for f in ("final_test_acc", "test_acc_noisy", "gen_gap", "worst_class_acc", "soft_label_uniformity")]]
        )
    return _csv_text(rows)


def _worst_class_curves(cfg, medians, records) -> str:
    """Gnuplot data: one column per (method, ratio), one row per epoch."""
    columns, curves = [], []
    for ci, ratio in enumerate(conditions(cfg)):
        for m in cfg.methods:
            med = medians.get((m, ci))
            if med is None:
                continue
            columns.append(f"{m}_r{ratio:g}")
            curves.append(records[(m, ci, med["replicate"])].worst_class_curve())
    length = max((len(c) for c in curves), default=0)
    lines = ["# worst-class test accuracy per epoch", "# epoch " + " ".join(columns)]
    for e in range(length):
        vals = [f"{c[e]:.6f}" if e < len(c) else "NaN" for c in curves]
        lines.append(" ".join([str(e + 1), *vals]))
    return "\n".join(lines) + "\n"


def variance_candidates(cfg: ExperimentConfig) -> list[tuple[str, np.ndarray]]:
    p = np.asarray(cfg.variance.in_dist_probs, dtype=np.float64)
    cands = [("proportional_to_p", optimal_weights(p)), ("uniform", np.ones_like(p) / math.sqrt(p.size))]
    sq = p**2
    cands.append(("proportional_to_p_squared", sq / np.linalg.norm(sq)))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.train.seed, 1]))
    for k, q in enumerate(random_unit_weights(p.size, cfg.variance.competitors, rng)):
        cands.append((f"random_{k:02d}", q))
    return cands


def _variance_lab(cfg, root, figures) -> ExperimentOutcome:
    v = cfg.variance
    scenario = WeightingScenario(
        np.asarray(v.in_dist_probs), np.ones(len(v.in_dist_probs)), v.loss_variance, v.in_dist_loss_mean
    )
    cands = variance_candidates(cfg)
    rows = variance_sweep(scenario, [q for _, q in cands], trials=v.trials, seed=cfg.train.seed)
    best = min(range(len(rows)), key=lambda i: rows[i].empirical_variance)
    out = [["candidate", "weights", "empirical_variance", "closed_form_variance", "relative_gap", "empirical_mean", "is_min"]]
    for i, ((name, q), row) in enumerate(zip(cands, rows)):
        out.append([
            name,
            ";".join(f"{x:.6f}" for x in q),
            f"{row.empirical_variance:.6f}",
            f"{row.closed_form_variance:.6f}",
            f"{row.relative_gap:.6f}",
            f"{row.empirical_mean:.6f}",
            int(i == best),
        ])
    table = _csv_text(out)
    (root / "table.csv").write_text(table)
    if figures:
        from . import plotting

        plotting.plot_variance(cands, rows, root / "variance.png")
    return ExperimentOutcome(root, rows, {}, table, [])


def resolve_output_dir(flag: str | None, cfg: ExperimentConfig) -> Path:
    """``--output`` beats ``CONFLAB_OUTPUT``, which beats the config."""
    if flag:
        return Path(flag)
    env = os.environ.get("CONFLAB_OUTPUT")
    if env:
        return Path(env)
    return Path(cfg.output_dir)
