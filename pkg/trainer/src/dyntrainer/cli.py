"""Command-line entry points: generate, train, export, validate."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bicycle import bicycle_step
from .dataset import DEFAULT_RANGES, generate_dataset, load_dataset, save_dataset
from .export import export_weights, load_weights, reexport_weights
from .train import TrainConfig, train_mlp, normalized_test_rmse, split_indices


def cmd_generate(args) -> int:
    ds = generate_dataset(rows=args.rows, dt=args.dt, seed=args.seed,
                          wheelbase=args.wheelbase)
    save_dataset(ds, args.out)
    print(f"wrote {ds.rows} transitions to {args.out} (dt={ds.dt}, seed={ds.seed})")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    cfg = TrainConfig(layer_sizes=tuple(args.layers), learning_rate=args.lr,
                      batch_size=args.batch_size, epochs=args.epochs,
                      test_split=args.test_split, seed=args.seed)
    model = train_mlp(ds, cfg)
    export_weights(model, args.out)
    _, test_idx = split_indices(ds.rows, cfg.test_split, cfg.seed)
    rmse = normalized_test_rmse(model, ds, test_idx)
    final = model.train_loss_history[-1] if model.train_loss_history else float("nan")
    print(f"trained {cfg.epochs} epochs: train_loss={final:.6g} "
          f"test_loss={model.test_loss:.6g} normalized_test_rmse={rmse:.6g}")
    print(f"weights written to {args.out}")
    return 0


def cmd_export(args) -> int:
    reexport_weights(args.weights, args.out)
    print(f"canonical rewrite: {args.weights} -> {args.out}")
    return 0


def cmd_validate(args) -> int:
    if args.samples < 1:
        print("error: samples must be >= 1", file=sys.stderr)
        return 1
    wf = load_weights(args.weights)
    rng = np.random.default_rng(args.seed)
    lows = np.array([lo for lo, _ in DEFAULT_RANGES.values()])
    highs = np.array([hi for _, hi in DEFAULT_RANGES.values()])
    draws = rng.uniform(lows, highs, size=(args.samples, 6))
    states, controls = draws[:, :4], draws[:, 4:]
    true_rates = (bicycle_step(states, controls, wf.dt, args.wheelbase) - states) / wf.dt
    pred_rates = wf.predict_rates(draws)
    err = pred_rates - true_rates
    sigma = np.std(true_rates, axis=0)
    channel_rmse = np.sqrt(np.mean((err * wf.dt) ** 2, axis=0))
    normalized = float(np.sqrt(np.mean((err / sigma) ** 2)))
    for name, rmse in zip(("px", "py", "v", "psi"), channel_rmse):
        print(f"{name:5s} one-step RMSE {rmse:.6g}")
    print(f"normalized RMSE {normalized:.6g} ({args.samples} samples, dt={wf.dt})")
    ok = normalized <= 0.05
    print("model check:", "PASS" if ok else "FAIL")
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyntrainer",
                                     description="Vehicle dynamics dataset and MLP trainer.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample transitions from the bicycle model")
    gen.add_argument("--rows", type=int, default=100_000)
    gen.add_argument("--dt", type=float, default=0.2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--wheelbase", type=float, default=4.0)
    gen.add_argument("--out", required=True)

    train = sub.add_parser("train", help="train the network and export weights")
    train.add_argument("--data", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--layers", type=int, nargs="+", default=[200, 300, 300, 100])
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--batch-size", type=int, default=512)
    train.add_argument("--epochs", type=int, default=50)
    train.add_argument("--test-split", type=float, default=0.1)
    train.add_argument("--seed", type=int, default=0)

    export = sub.add_parser("export", help="canonical rewrite of a weights file")
    export.add_argument("--weights", required=True)
    export.add_argument("--out", required=True)

    validate = sub.add_parser("validate", help="compare weights with the bicycle model")
    validate.add_argument("--weights", required=True)
    validate.add_argument("--samples", type=int, default=1000)
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument("--wheelbase", type=float, default=4.0)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "export":
            return cmd_export(args)
        if args.command == "validate":
            return cmd_validate(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
