"""Command-line entry points for the full pipeline.

Subcommands: ``gen`` (datasets), ``train-clf`` (frame classifier),
``train-seq`` (sequence models), ``eval`` (the error-metric grid),
``rollout`` (closed-loop batches), ``label-imu`` (IMU labeling), and
``serve`` (the live session service). A ``--config`` file of
``key = value`` lines supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .embedder import FrameClassifier
from .envsim import generate_dataset, get_task, load_manifest, load_split
from .executor import DEFAULT_BUDGET, ModelPolicy, OraclePolicy, batch_rollout
from .ioutil import atomic_write_json, atomic_write_text
from .metrics import MetricsReport, ReportRow, evaluate_model
from .seqmodel import MODEL_KINDS, load_model


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; '#' comments; values parsed as JSON when
    possible, else kept as strings."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip().strip("\"'")
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    return values


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_classifier(path: str) -> FrameClassifier:
    if not Path(path).exists():
        raise FileNotFoundError(f"classifier checkpoint {path} does not exist")
    return FrameClassifier.load(path)


def _embedded_split(data_dir: str, split: str, clf: FrameClassifier):
    episodes = load_split(data_dir, split)
    return [clf.transform(ep.obs) for ep in episodes], [ep.labels for ep in episodes], episodes


def cmd_gen(args) -> int:
    manifest = generate_dataset(args.task, args.n, args.seed, args.out, noise_std=args.noise)
    print(json.dumps(manifest["counts"]))
    return 0


def cmd_train_clf(args) -> int:
    manifest = load_manifest(args.data)
    train = load_split(args.data, "train")
    val = load_split(args.data, "val")
    X = np.concatenate([ep.obs for ep in train])
    y = np.concatenate([ep.labels for ep in train])
    n_classes = len(manifest["alphabet"])
    clf = FrameClassifier(
        n_classes=n_classes,
        hidden_dim=args.hidden,
        lr=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        seed=args.seed,
    )
    clf.fit(X, y)
    Xv = np.concatenate([ep.obs for ep in val])
    yv = np.concatenate([ep.labels for ep in val])
    val_acc = float((clf.predict(Xv) == yv).mean())
    clf.save(args.out)
    print(f"train_accuracy={clf.train_accuracy_:.4f} val_accuracy={val_acc:.4f} epochs={len(clf.loss_curve_)}")
    return 0


def cmd_train_seq(args) -> int:
    manifest = load_manifest(args.data)
    clf = _load_classifier(args.clf)
    X, y, _ = _embedded_split(args.data, "train", clf)
    Xv, yv, _ = _embedded_split(args.data, "val", clf)
    model_cls = MODEL_KINDS[args.kind]
    model = model_cls(
        vocab_size=len(manifest["alphabet"]),
        embed_dim=clf.embed_dim,
        latent_dim=args.latent,
        window=args.sl,
        offset=args.k,
        lr=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        max_batches_per_epoch=args.max_batches,
        alphabet_id=manifest["task"] if manifest["task"] == "blocks" else "manipulation",
        task_id=manifest["task"],
        seed=args.seed,
    )
    model.fit(X, y, X_val=Xv, y_val=yv)
    model.save(args.out)
    print(f"kind={args.kind} epochs_run={model.epochs_run_} best_val_loss={model.best_val_loss_:.4f}")
    return 0


def cmd_eval(args) -> int:
    report = MetricsReport()
    datasets = {}
    for data_dir in args.data:
        manifest = load_manifest(data_dir)
        datasets[manifest["task"]] = data_dir

    if args.oracle:
        from .metrics import edit_distance, structure_error, symbol_error

        for task_id, data_dir in sorted(datasets.items()):
            episodes = load_split(data_dir, "test")
            window, offset = args.sl, args.k
            syms, pairs, edits = [], [], []
            for ep in episodes:
                truth = ep.labels[window - 1 + offset :].tolist()
                predicted = [int(ep.labels[t]) for t in range(window - 1 + offset, ep.n_frames)]
                if not truth:
                    continue
                syms.append(symbol_error(predicted, truth))
                pairs.append((predicted, truth))
                edits.append(edit_distance(predicted, truth))
            report.add(
                ReportRow(
                    task=task_id,
                    window=window,
                    model_kind="oracle",
                    symbol=float(np.mean(syms)),
                    structure=structure_error(pairs),
                    edit=float(np.mean(edits)),
                    n_episodes=len(pairs),
                )
            )

    clf = _load_classifier(args.clf) if args.clf else None
    for ckpt in args.checkpoints:
        model = load_model(ckpt)
        task_id = model.task_id or ""
        if task_id not in datasets:
            return _fail(f"checkpoint {ckpt} was trained on task {task_id!r}; no matching --data directory")
        if clf is None:
            return _fail("model evaluation needs --clf")
        episodes = load_split(datasets[task_id], "test")
        report.add(evaluate_model(model, episodes, clf.transform, task_id=task_id))

    print(report.to_table())
    if args.out:
        atomic_write_text(args.out, report.to_csv())
    return 0


def cmd_rollout(args) -> int:
    task = get_task(args.task)
    if args.policy == "oracle":
        policy = OraclePolicy(task)
    else:
        if not args.clf:
            return _fail("--policy <checkpoint> needs --clf")
        policy = ModelPolicy(load_model(args.policy), _load_classifier(args.clf))
    perturbations = None
    if args.perturb:
        perturbations = json.loads(Path(args.perturb).read_text())
    counts = batch_rollout(
        task,
        policy,
        n=args.n,
        seed=args.seed,
        perturbations=perturbations,
        budget=args.budget,
        keep_trace=bool(args.traces),
    )
    summary = counts.as_dict()
    summary["verdicts"] = [o.verdict for o in counts.outcomes]
    print(json.dumps({k: summary[k] for k in ("success", "recovered", "failure", "accuracy")}))
    if args.out:
        atomic_write_json(args.out, summary)
    if args.traces:
        out_dir = Path(args.traces)
        for i, outcome in enumerate(counts.outcomes):
            lines = [json.dumps(e, sort_keys=True) for e in outcome.trace]
            atomic_write_text(out_dir / f"rollout_{i:03d}.jsonl", "\n".join(lines) + "\n")
    return 0


def cmd_label_imu(args) -> int:
    from .imulabel import label_episode_from_imu, read_stream_csv
    from .symbols import BLOCKS

    stream_dir = Path(args.streams)
    if not stream_dir.is_dir():
        return _fail(f"{stream_dir} is not a directory")
    from .envsim.tasks import BLOCK_GLYPHS

    streams = {}
    for block, glyph in BLOCK_GLYPHS.items():
        path = stream_dir / f"{block}.csv"
        if not path.exists():
            return _fail(f"missing stream file {path}")
        streams[BLOCKS.id_of(glyph)] = read_stream_csv(path)
    if args.frames:
        n_frames = args.frames
    else:
        last_t = min(float(s[-1, 0]) for s in streams.values())
        n_frames = int(np.floor(last_t * args.rate)) + 1
    labels = label_episode_from_imu(streams, n_frames, args.rate)
    header = {
        "task": "blocks",
        "n_frames": n_frames,
        "frame_rate": args.rate,
        "source": "imu",
    }
    lines = [json.dumps(header, sort_keys=True)]
    for i, lab in enumerate(labels):
        lines.append(json.dumps({"t": round(i / args.rate, 6), "obs": [], "label": int(lab)}))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"labeled {n_frames} frames -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symplan", description=__doc__)
    parser.add_argument("--config", help="key = value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a demonstration dataset")
    p.add_argument("--task", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=0.05)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train-clf", help="train the frame classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_clf)

    p = sub.add_parser("train-seq", help="train a sequence model")
    p.add_argument("--data", required=True)
    p.add_argument("--clf", required=True)
    p.add_argument("--kind", choices=sorted(MODEL_KINDS), default="seq2seq")
    p.add_argument("--sl", type=int, default=20, help="window length")
    p.add_argument("--k", type=int, default=1, help="prediction offset")
    p.add_argument("--latent", type=int, default=64)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--max-batches", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_seq)

    p = sub.add_parser("eval", help="evaluate checkpoints on test splits")
    p.add_argument("--data", action="append", required=True, help="dataset dir (repeatable)")
    p.add_argument("--clf")
    p.add_argument("--checkpoints", nargs="*", default=[])
    p.add_argument("--oracle", action="store_true", help="include the oracle (all-zero) rows")
    p.add_argument("--sl", type=int, default=20)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rollout", help="closed-loop batch rollouts")
    p.add_argument("--task", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--policy", default="oracle", help="'oracle' or a model checkpoint path")
    p.add_argument("--clf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", help="perturbation script JSON file")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.add_argument("--traces", help="directory for rollout trace files")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("label-imu", help="label frames from IMU stream CSVs")
    p.add_argument("--streams", required=True, help="directory of <block>.csv streams")
    p.add_argument("--frames", type=int, default=0, help="frame count (default: infer)")
    p.add_argument("--rate", type=float, default=10.0, help="frame rate Hz")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label_imu)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8741)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            config = parse_config_file(argv[idx + 1])
        except (OSError, IndexError, ValueError) as err:
            return _fail(f"bad config file: {err}")
        for p in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            known = {a.dest for a in p._actions}
            p.set_defaults(**{k: v for k, v in config.items() if k in known})
            for action in p._actions:
                if action.dest in config:
                    action.required = False
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as err:
        return _fail(str(err))


if __name__ == "__main__":
    sys.exit(main())
