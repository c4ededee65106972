"""Command line entry point: ``diffged <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import plotting
from .denoiser import load_checkpoint, save_checkpoint
from .diffusion import build_schedule
from .graphs import (GraphValidationError, LabelVocabulary, load_dataset, load_graphs, pair_from_record,
                     save_dataset)
from .oracle import OracleSizeError, exact_ged_astar, exact_ged_bruteforce
from .solver import SolveConfig, diffged_solve, evaluate
from .synthetic import build_corpus, random_graphs
from .training import TrainConfig, split_validation, train

log = logging.getLogger("diffged")

SWEEP_DEFAULTS = {"k": [1, 2, 5, 10, 20, 50, 100], "s": [1, 2, 3, 4, 5, 10, 20]}


def _emit(obj, args, text: str | None = None):
    if args.json or text is None:
        print(json.dumps(obj))
    else:
        print(text)


def _load_model(path):
    model, vocab, extra, _ = load_checkpoint(path)
    schedule = build_schedule(extra.get("T", 1000), extra.get("beta_start", 1e-4), extra.get("beta_end", 0.02))
    return model, vocab, schedule


def _check_vocab(vocab: LabelVocabulary, model):
    if vocab.size > model.config.vocab_size:
        raise GraphValidationError(
            f"data uses {vocab.size} labels but the checkpoint knows {model.config.vocab_size}: "
            f"unknown {vocab.names[model.config.vocab_size:]}")


def _solve_config(args) -> SolveConfig:
    return SolveConfig(k=args.k, S=args.s, method=args.method, one_shot=args.one_shot, seed=args.seed)


def cmd_gen_synthetic(args):
    if args.input:
        graphs, vocab = load_graphs(args.input)
    else:
        vocab = LabelVocabulary.numbered(args.labels)
        graphs = random_graphs(args.random, args.seed, args.min_nodes, args.max_nodes, args.labels,
                               args.edge_prob)
    pairs = build_corpus(graphs, args.per_graph, args.seed, num_labels=vocab.size,
                         small_max_delta=args.max_delta, permute=not args.no_permute)
    out = args.out or "/dev/stdout"
    save_dataset(pairs, out, vocab)
    if args.out:
        log.info("wrote %d pairs to %s", len(pairs), args.out)
    return 0


def cmd_oracle(args):
    pairs, _ = load_dataset(args.input)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for i, p in enumerate(pairs):
            rec = {"index": i}
            if p.g.n > args.max_nodes:
                rec["skipped"] = f"|V|={p.g.n} exceeds --max-nodes {args.max_nodes}"
            else:
                try:
                    if args.method == "bruteforce":
                        res = exact_ged_bruteforce(p, args.cap, max_nodes=args.max_nodes)
                    else:
                        res = exact_ged_astar(p, node_budget=args.budget, mapping_cap=args.cap)
                    rec.update(res.to_json())
                    rec["swapped"] = p.swapped
                except OracleSizeError as exc:
                    rec["skipped"] = str(exc)
            out.write(json.dumps(rec) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_train(args):
    cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else TrainConfig()
    if args.epochs is not None:
        cfg.epochs = args.epochs
    pairs, vocab = load_dataset(args.data)
    if args.val:
        val, _ = load_dataset(args.val, vocab)
    else:
        pairs, val = split_validation(pairs, cfg.val_fraction, cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = train(pairs, vocab.size, cfg, val,
                on_epoch=lambda e, l: log.info("epoch %d mean loss %.5f", e, l))
    extra = {"T": cfg.T, "beta_start": cfg.beta_start, "beta_end": cfg.beta_end,
             "best_epoch": res.best_epoch, "train_config": cfg.__dict__}
    save_checkpoint(out / "model.npz", res.model, vocab, extra, res.optimizer.state_arrays())
    with open(out / "loss_curve.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["step", "epoch", "loss"])
        w.writeheader()
        w.writerows(res.loss_curve)
    with open(out / "validation.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["epoch", "accuracy", "mean_loss"])
        w.writeheader()
        w.writerows(res.val_history)
    if res.loss_curve:
        plotting.plot_loss_curve(res.loss_curve, out / "loss_curve.png")
    _emit({"checkpoint": str(out / "model.npz"), "best_epoch": res.best_epoch,
           "steps": len(res.loss_curve)}, args,
          f"saved {out / 'model.npz'} (best epoch {res.best_epoch})")
    return 0


def cmd_solve(args):
    model, vocab, schedule = _load_model(args.ckpt)
    vocab = LabelVocabulary(list(vocab.names)) if vocab else LabelVocabulary.unlabeled()
    text = Path(args.pair).read_text().strip().splitlines()[0]
    pair = pair_from_record(json.loads(text), vocab)
    _check_vocab(vocab, model)
    res = diffged_solve(pair, model, schedule, _solve_config(args))
    out = res.to_json(emit_path=args.emit_path)
    out["swapped"] = pair.swapped
    _emit(out, args, f"predicted GED {res.predicted_ged} mapping {list(res.best_mapping)} "
                     f"({res.distinct_optimal_paths} distinct optimal paths, {res.seconds:.3f}s)")
    return 0


def _evaluate(args, pairs, model, schedule, config):
    if args.predictor == "oracle":
        return evaluate(pairs, None, None, config, predictor=lambda p: exact_ged_astar(p).ged)
    return evaluate(pairs, model, schedule, config)


def cmd_evaluate(args):
    if args.predictor == "model" and not args.ckpt:
        print("diffged evaluate: --ckpt is required unless --predictor oracle", file=sys.stderr)
        return 2
    model = schedule = None
    vocab = None
    if args.ckpt:
        model, vocab, schedule = _load_model(args.ckpt)
        vocab = LabelVocabulary(list(vocab.names)) if vocab else None
    pairs, vocab = load_dataset(args.data, vocab)
    if model is not None:
        _check_vocab(vocab, model)
    report, preds = _evaluate(args, pairs, model, schedule, _solve_config(args))
    out = report.to_json()
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "report.json").write_text(json.dumps(out, indent=2))
        with open(d / "predictions.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "gt_ged", "predicted_ged"])
            w.writerows((i, p.gt_ged, y) for i, (p, y) in enumerate(zip(pairs, preds)))
        plotting.plot_predictions([p.gt_ged for p in pairs], preds, d / "predictions.png")
    _emit(out, args, "\n".join(f"{k:>9}: {v}" for k, v in out.items()))
    return 0


def cmd_ablate(args):
    model, vocab, schedule = _load_model(args.ckpt)
    vocab = LabelVocabulary(list(vocab.names)) if vocab else None
    pairs, vocab = load_dataset(args.data, vocab)
    _check_vocab(vocab, model)
    values = [int(v) for v in args.values.split(",")] if args.values else SWEEP_DEFAULTS[args.sweep]
    rows = []
    for v in values:
        cfg = _solve_config(args)
        if args.sweep == "k":
            cfg.k = v
        else:
            cfg.S = v
        report, _ = evaluate(pairs, model, schedule, cfg)
        rows.append({"param": args.sweep, "value": v, "accuracy": report.accuracy, "mae": report.mae,
                     "time_s": report.mean_solve_seconds})
        log.info("%s=%d accuracy %.4f mae %.4f", args.sweep, v, report.accuracy, report.mae)
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / f"sweep_{args.sweep}.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["param", "value", "accuracy", "mae", "time_s"])
        w.writeheader()
        w.writerows(rows)
    plotting.plot_sweep(rows, args.sweep, d / f"sweep_{args.sweep}.png")
    _emit({"csv": str(d / f"sweep_{args.sweep}.csv"), "rows": rows}, args,
          f"wrote {d / f'sweep_{args.sweep}.csv'} and {d / f'sweep_{args.sweep}.png'}")
    return 0


def _add_solve_flags(p):
    p.add_argument("--k", type=int, default=100, help="matching matrices sampled per pair")
    p.add_argument("--s", type=int, default=10, help="reverse denoising steps")
    p.add_argument("--method", choices=["greedy", "hungarian"], default="greedy")
    p.add_argument("--one-shot", action="store_true", help="single denoising pass (no reverse chain)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffged", description="Graph edit distance via sampled node matchings")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="synthetic pairs from base graphs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="JSON lines of graphs or pairs to use as base graphs")
    src.add_argument("--random", type=int, help="draw this many random connected base graphs")
    p.add_argument("--per-graph", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-nodes", type=int, default=5)
    p.add_argument("--max-nodes", type=int, default=8)
    p.add_argument("--labels", type=int, default=1, help="label alphabet size for --random")
    p.add_argument("--edge-prob", type=float, default=0.15)
    p.add_argument("--max-delta", type=int, default=5, help="largest edit count for graphs of <= 10 nodes")
    p.add_argument("--no-permute", action="store_true", help="keep the edited graph's node order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("oracle", help="exact GED per pair")
    p.add_argument("--input", required=True)
    p.add_argument("--max-nodes", type=int, default=8)
    p.add_argument("--method", choices=["astar", "bruteforce"], default="astar")
    p.add_argument("--cap", type=int, default=1, help="optimal mappings to list per pair")
    p.add_argument("--budget", type=int, default=2_000_000, help="A* expansion budget")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("train", help="train the denoiser")
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--data", required=True)
    p.add_argument("--val")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("solve", help="solve one pair")
    p.add_argument("--pair", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--emit-path", action="store_true", help="include the edit script")
    _add_solve_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="metrics over a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt")
    p.add_argument("--predictor", choices=["model", "oracle"], default="model")
    p.add_argument("--out-dir", help="write report.json, predictions.csv and predictions.png here")
    _add_solve_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep k or the number of reverse steps")
    p.add_argument("--sweep", choices=["k", "s"], required=True)
    p.add_argument("--values", help="comma-separated grid")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    _add_solve_flags(p)
    p.set_defaults(func=cmd_ablate)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (GraphValidationError, OracleSizeError, ValueError, OSError) as exc:
        print(f"diffged {args.command}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
