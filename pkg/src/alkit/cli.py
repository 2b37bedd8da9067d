"""Command-line entry points.

    alkit synth     generate a synthetic scene dataset directory
    alkit explore   run the batch exploration experiment, write curves CSV
    alkit report    summarize a curves/discovery CSV into a table + figures
    alkit discover  run the class-discovery experiment, write CSV
    alkit serve     run the annotation HTTP service
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import detector as det
from . import synthdata as sd
from .metrics import METRIC_KINDS


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--image-size", type=int, default=48, help="scene edge length in pixels")
    p.add_argument("--num-classes", type=int, default=7, help="total object classes")
    p.add_argument("--new-classes", type=int, default=2, help="classes held out as new")


def _scene_spec(args: argparse.Namespace) -> sd.SceneSpec:
    shapes = sd.SHAPE_ARCHETYPES[: args.num_classes]
    return sd.SceneSpec(image_size=args.image_size, class_shapes=shapes)


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = _scene_spec(args)
    scenes = sd.generate_dataset(spec, args.n, args.seed)
    class_names = [f"{shape}_{i}" for i, shape in enumerate(spec.class_shapes)]
    manifest = sd.save_dataset(scenes, Path(args.out), class_names, spec)
    print(f"wrote {args.n} scenes to {manifest.parent} ({manifest.name})")
    return 0


def _cmd_explore(args: argparse.Namespace) -> int:
    from .protocol import ExperimentConfig, run_exploration, save_curves

    metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
    for m in metrics:
        if m not in METRIC_KINDS:
            print(f"unknown metric {m!r}; choose from {', '.join(METRIC_KINDS)}", file=sys.stderr)
            return 2
    spec = _scene_spec(args)
    new_classes = tuple(range(args.num_classes - args.new_classes, args.num_classes))
    curves = []
    for seed in range(args.seeds):
        dataset = sd.generate_dataset(spec, args.scenes, seed=seed * 100_000)
        part_a, part_b = sd.split_known_new(dataset, new_classes)
        rng = np.random.default_rng(seed)
        rng.shuffle(part_a)
        test = part_a[: args.test_size] + part_b[: args.test_size]
        train_a = part_a[args.test_size : args.test_size + args.train_size]
        pool_b = part_b[args.test_size : args.test_size + args.pool_size]
        cfg = det.GridConfig(num_classes=args.num_classes)
        model = det.train_initial(
            det.initialize_model(cfg, args.image_size),
            train_a,
            det.TrainHyper(iterations=args.init_iters),
            seed=seed,
        )
        for metric in metrics:
            config = ExperimentConfig(
                metric=metric,
                new_classes=new_classes,
                batch_size=args.batch_size,
                lam=getattr(args, "lambda"),
                update_iterations=args.update_iters,
                eval_every=args.eval_every,
            )
            curve = run_exploration(config, model, train_a, pool_b, test, seed=seed)
            curves.append(curve)
            print(f"seed {seed} metric {metric}: rows={len(curve.rows)} final map_new="
                  f"{curve.rows[-1].map_new:.3f}")
    save_curves(curves, args.out, num_classes=args.num_classes)
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import write_report

    paths = write_report(Path(getattr(args, "in")), args.out_dir, args.eval_every)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_discover(args: argparse.Namespace) -> int:
    from .emoc import DISCOVERY_METHODS, DiscoveryConfig, run_discovery, save_discovery

    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    for m in methods:
        if m not in DISCOVERY_METHODS:
            print(f"unknown method {m!r}; choose from {', '.join(DISCOVERY_METHODS)}", file=sys.stderr)
            return 2
    config = DiscoveryConfig(budget=args.budget)
    results = []
    for task in range(args.tasks):
        dataset = sd.generate_feature_clusters(
            k_classes=args.clusters,
            per_class=args.per_class,
            d=args.dim,
            cluster_sigma=args.sigma,
            rejection_clusters=args.rejection_clusters,
            noise_points=args.noise_points,
            seed=task,
        )
        for init in range(args.inits):
            seed = task * 1000 + init
            for method in methods:
                results.append(
                    run_discovery(dataset, method, config, seed=seed, task=task, init=init)
                )
        print(f"task {task}: done")
    save_discovery(results, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(Path(args.project), port=args.port, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alkit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene dataset")
    _add_dataset_args(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("explore", help="run the batch exploration experiment")
    _add_dataset_args(p)
    p.add_argument("--metric", default="sum,random",
                   help="metric kind, or comma-separated list for paired runs")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds (0..N-1)")
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--lambda", type=float, default=0.5, dest="lambda")
    p.add_argument("--update-iters", type=int, default=100)
    p.add_argument("--eval-every", type=int, default=50)
    p.add_argument("--scenes", type=int, default=400, help="scenes generated per seed")
    p.add_argument("--train-size", type=int, default=30, help="initial labeled pool")
    p.add_argument("--pool-size", type=int, default=60, help="unlabeled exploration pool")
    p.add_argument("--test-size", type=int, default=40, help="held-out scenes per part")
    p.add_argument("--init-iters", type=int, default=3000, help="initial training iterations")
    p.add_argument("--out", required=True, help="output curves CSV")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("report", help="summarize an experiment CSV")
    p.add_argument("--in", required=True, help="curves or discovery CSV")
    p.add_argument("--out-dir", default=None, help="where to write summary + figures")
    p.add_argument("--eval-every", type=int, default=50, help="x-axis unit for AUC")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("discover", help="run the class-discovery experiment")
    p.add_argument("--method", default="emoc,random",
                   help="method, or comma-separated list")
    p.add_argument("--tasks", type=int, default=10)
    p.add_argument("--inits", type=int, default=10)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--clusters", type=int, default=10)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--rejection-clusters", type=int, default=2)
    p.add_argument("--noise-points", type=int, default=20)
    p.add_argument("--out", required=True, help="output discovery CSV")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--project", required=True,
                   help="project directory, or a root directory of projects")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
