"""Sequence prediction error metrics and the per-task evaluation grid.

Three errors over predicted vs. ground-truth symbol sequences: positional
symbol error, structure error on compact encodings, and length-normalized
Levenshtein distance. ``evaluate_model`` rolls a trained model across test
episodes frame by frame and aggregates all three.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .symbols import compact_encode


def symbol_error(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of positions where the sequences disagree (equal lengths)."""
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(truth)}")
    if len(truth) == 0:
        raise ValueError("empty sequences")
    mismatch = sum(1 for p, t in zip(predicted, truth) if p != t)
    return mismatch / len(truth)


def structure_error(pairs: Sequence[tuple[Sequence[int], Sequence[int]]]) -> float:
    """Fraction of pairs whose compact encodings differ anywhere."""
    if len(pairs) == 0:
        raise ValueError("empty pair list")
    wrong = sum(1 for pred, truth in pairs if compact_encode(list(pred)) != compact_encode(list(truth)))
    return wrong / len(pairs)


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Unit-cost insert/delete/substitute edit distance."""
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[m]


def edit_distance(predicted: Sequence[int], truth: Sequence[int], compact: bool = False) -> float:
    """Levenshtein distance normalized by the ground-truth length.

    Computed on the raw per-frame sequences by default; ``compact=True``
    compares compact encodings instead.
    """
    if compact:
        predicted = compact_encode(list(predicted))
        truth = compact_encode(list(truth))
    return levenshtein(list(predicted), list(truth)) / max(1, len(truth))


@dataclass
class ReportRow:
    task: str
    window: int
    model_kind: str
    symbol: float
    structure: float
    edit: float
    edit_compact: float = float("nan")
    n_episodes: int = 0


@dataclass
class MetricsReport:
    """Rows of (task, window, model) -> the three error fractions."""

    rows: list[ReportRow] = field(default_factory=list)

    def add(self, row: ReportRow) -> None:
        self.rows.append(row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["task", "window", "model", "symbol", "structure", "edit", "edit_compact", "episodes"])
        for r in self.rows:
            writer.writerow(
                [r.task, r.window, r.model_kind]
                + [f"{v:.6f}" for v in (r.symbol, r.structure, r.edit, r.edit_compact)]
                + [r.n_episodes]
            )
        return buf.getvalue()

    def to_table(self) -> str:
        """Formatted text table: model blocks x tasks, errors in percent."""
        header = f"{'Model':10s} {'Task':10s} {'SL':>4s} {'Symbol':>8s} {'Struct':>8s} {'Edit':>8s}"
        lines = [header, "-" * len(header)]
        for r in sorted(self.rows, key=lambda r: (r.model_kind, r.task, r.window)):
            lines.append(
                f"{r.model_kind:10s} {r.task:10s} {r.window:4d} "
                f"{100 * r.symbol:7.2f}% {100 * r.structure:7.2f}% {100 * r.edit:7.2f}%"
            )
        return "\n".join(lines)


def evaluate_episode(model, embeddings: np.ndarray, labels: np.ndarray):
    """Per-frame predictions over one episode via sliding windows.

    Returns (predicted, truth) covering times window-1+offset .. T-1;
    frames before the first full window are skipped. Windows are evaluated
    in one batch.
    """
    window, offset = model.window, model.offset
    T = len(labels)
    n = T - window - offset + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    wins = np.stack([embeddings[s : s + window] for s in range(n)])
    preds = model.predict_tail(wins, offset)[:, -1]
    truth = labels[window - 1 + offset :]
    return preds.astype(np.int64), truth.astype(np.int64)


def evaluate_model(model, episodes, embed_fn, task_id: str | None = None) -> ReportRow:
    """Aggregate the three metrics for ``model`` over test episodes.

    ``embed_fn`` maps an episode's observation matrix to frame embeddings
    (the trained frame classifier's ``transform``).
    """
    if not episodes:
        raise ValueError("no episodes to evaluate")
    sym_errs, pairs, edits, edits_c = [], [], [], []
    for ep in episodes:
        emb = embed_fn(ep.obs)
        if emb.shape[1] != model.embed_dim:
            raise ValueError(f"embedding dim {emb.shape[1]} != model dim {model.embed_dim}")
        pred, truth = evaluate_episode(model, emb, ep.labels)
        if len(truth) == 0:
            continue
        sym_errs.append(symbol_error(pred.tolist(), truth.tolist()))
        pairs.append((pred.tolist(), truth.tolist()))
        edits.append(edit_distance(pred.tolist(), truth.tolist()))
        edits_c.append(edit_distance(pred.tolist(), truth.tolist(), compact=True))
    if not pairs:
        raise ValueError(f"every episode is shorter than window+offset = {model.window + model.offset}")
    return ReportRow(
        task=task_id or getattr(episodes[0], "task_id", "?"),
        window=model.window,
        model_kind=getattr(model, "kind", type(model).__name__),
        symbol=float(np.mean(sym_errs)),
        structure=structure_error(pairs),
        edit=float(np.mean(edits)),
        edit_compact=float(np.mean(edits_c)),
        n_episodes=len(pairs),
    )
