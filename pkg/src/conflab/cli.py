"""``conflab`` command line: gen-data, train, experiment."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data import NoiseSpec, inject_noise, make_gaussian_mixture, save_csv
from .experiments import ExperimentConfig, preset, resolve_output_dir, run_experiment


def load_config(path: str | None, default_experiment: str) -> ExperimentConfig:
    if path is None:
        return preset(default_experiment)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None
    d = json.loads(text) if text.strip() else {}
    if isinstance(d, dict):
        d.setdefault("experiment", default_experiment)
    return ExperimentConfig.from_dict(d)


def _apply_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    if seed is not None:
        cfg.train = cfg.train.with_(seed=seed)
    return cfg


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config, "single_run")
    spec = cfg.data
    if spec.source != "gaussian":
        raise ValueError("gen-data needs data.source = gaussian")
    if args.seed is not None:
        spec.seed = args.seed
    out = resolve_output_dir(args.output, cfg) / "data"
    args_ = (spec.class_count, spec.dim)
    train = make_gaussian_mixture(*args_, spec.per_class("train_per_class"), spec.separation, spec.spread, spec.seed)
    test = make_gaussian_mixture(
        *args_, spec.per_class("test_per_class"), spec.separation, spec.spread, spec.seed, split="test"
    )
    noise_seed = int(np.random.SeedSequence([spec.seed, 3]).generate_state(1)[0])
    train = inject_noise(train, NoiseSpec(spec.noise_kind, spec.noise_rate, noise_seed))
    out.mkdir(parents=True, exist_ok=True)
    save_csv(train, out / "train.csv")
    save_csv(test, out / "test.csv")
    sidecar = {
        "seed": spec.seed,
        "noise_seed": noise_seed,
        "data": cfg.to_dict()["data"],
        "train_clean_labels": train.clean_labels.tolist(),
        "test_clean_labels": test.labels.tolist(),
    }
    (out / "data.json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")
    print(f"wrote {len(train)} training and {len(test)} test rows to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _apply_seed(load_config(args.config, "single_run"), args.seed)
    cfg.experiment = "single_run"
    cfg.methods = [cfg.train.method]
    return _run(cfg, args)


def cmd_experiment(args) -> int:
    cfg = _apply_seed(load_config(args.config, args.name or "single_run"), args.seed)
    if args.name:
        cfg.experiment = args.name
    return _run(cfg, args)


def _run(cfg: ExperimentConfig, args) -> int:
    cfg.validate()
    out = resolve_output_dir(args.output, cfg)
    outcome = run_experiment(cfg, out, jobs=args.jobs, figures=not args.no_figures)
    sys.stdout.write(outcome.table)
    for f in outcome.failures:
        print(f"cell {f['cell']} failed: {f['error']}", file=sys.stderr)
    print(f"results in {outcome.root}", file=sys.stderr)
    return 0 if outcome.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conflab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config; omitted fields take the experiment's preset")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--output", help="output directory (overrides CONFLAB_OUTPUT and the config)")

    p = sub.add_parser("gen-data", help="write a Gaussian-mixture dataset as CSV plus a JSON sidecar")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    for name, func, helptext in (
        ("train", cmd_train, "train one method (train.method) on the configured data"),
        ("experiment", cmd_experiment, "run a preset experiment grid"),
    ):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--jobs", type=int, default=1, help="grid cells run in parallel")
        p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
        if name == "experiment":
            p.add_argument("name", nargs="?", help="experiment to run (overrides the config's)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
