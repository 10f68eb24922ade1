"""Acceptance suite: every criterion at its stated tolerance.

Ordered so the cheap structural checks run first and the training-heavy
criteria share one trained pipeline per task. Each test emits one
pass/fail line into the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from symplan.embedder import FrameClassifier
from symplan.envsim import get_task, goal_reached, replay_compact_plan, sample_demonstration
from symplan.envsim.demos import LENGTH_BANDS
from symplan.executor import ModelPolicy, OraclePolicy, Perturbation, batch_rollout, run_episode
from symplan.imulabel import ImuNoise, fuse, label_episode_from_imu, synth_imu
from symplan.metrics import edit_distance, evaluate_model, levenshtein, structure_error, symbol_error
from symplan.seqmodel import AttentionTagger, Seq2SeqTranslator, grad_check
from symplan.symbols import compact_encode, compact_encode_glyphs

TRAIN_BUDGET_S = 900.0


# -- shared trained pipelines ----------------------------------------------


@pytest.fixture(scope="session")
def abcdef_pipeline():
    task = get_task("abcdef")
    episodes = [sample_demonstration(task, seed=s) for s in range(440)]
    train, test = episodes[:400], episodes[400:]
    X = np.concatenate([e.obs for e in train])
    y = np.concatenate([e.labels for e in train])
    clf = FrameClassifier(n_classes=12, batch_size=256, max_epochs=60, seed=0).fit(X, y)
    embedded = [clf.transform(e.obs) for e in train]
    model = Seq2SeqTranslator(
        vocab_size=12, window=20, offset=1, latent_dim=64, epochs=42,
        max_batches_per_epoch=100, batch_size=256, patience=1000, seed=0,
    )
    t0 = time.monotonic()
    model.fit(embedded, [e.labels for e in train])
    train_seconds = time.monotonic() - t0
    return {"task": task, "train": train, "test": test, "clf": clf, "model": model, "train_seconds": train_seconds}


@pytest.fixture(scope="session")
def c_pipeline():
    task = get_task("c")
    episodes = [sample_demonstration(task, seed=1000 + s) for s in range(440)]
    train, test = episodes[:400], episodes[400:]
    X = np.concatenate([e.obs for e in train])
    y = np.concatenate([e.labels for e in train])
    clf = FrameClassifier(n_classes=12, batch_size=256, max_epochs=60, seed=0).fit(X, y)
    embedded = [clf.transform(e.obs) for e in train]
    model = Seq2SeqTranslator(
        vocab_size=12, window=20, offset=1, latent_dim=64, epochs=30,
        max_batches_per_epoch=100, batch_size=256, patience=1000, seed=0,
    )
    model.fit(embedded, [e.labels for e in train])
    return {"task": task, "test": test, "clf": clf, "model": model}


# -- criteria ----------------------------------------------------------------


def test_gradient_correctness(acceptance_report):
    t0 = time.monotonic()
    errs = {kind: grad_check(kind, seed=1) for kind in ("seq2seq", "attn_lstm", "frame_classifier")}
    elapsed = time.monotonic() - t0
    ok = all(e < 1e-4 for e in errs.values()) and elapsed < 30.0
    acceptance_report(
        "gradient correctness",
        ok,
        f"max rel errs {dict((k, f'{v:.2e}') for k, v in errs.items())} in {elapsed:.1f}s",
    )
    assert ok, (errs, elapsed)


def brute_symbol_error(a, b):
    return sum(1 for x, y in zip(a, b) if x != y) / len(a)


def brute_levenshtein(a, b):
    from functools import lru_cache

    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            rec(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1),
            rec(i - 1, j) + 1,
            rec(i, j - 1) + 1,
        )

    return rec(len(a), len(b))


def brute_compact(seq):
    out = []
    for s in seq:
        if not out or out[-1] != s:
            out.append(s)
    return out


def test_metric_oracles(acceptance_report):
    rng = np.random.default_rng(42)
    mismatches = 0
    for _ in range(1000):
        vocab = int(rng.integers(3, 7))
        n = int(rng.integers(1, 13))
        a = rng.integers(0, vocab, size=n).tolist()
        b = rng.integers(0, vocab, size=n).tolist()
        if symbol_error(a, b) != brute_symbol_error(a, b):
            mismatches += 1
        if levenshtein(a, b) != brute_levenshtein(a, b):
            mismatches += 1
        want_structural = brute_compact(a) != brute_compact(b)
        if (structure_error([(a, b)]) == 1.0) != want_structural:
            mismatches += 1
        if edit_distance(a, b) != brute_levenshtein(a, b) / len(b):
            mismatches += 1

    axiom_violations = 0
    for _ in range(1000):
        vocab = int(rng.integers(3, 7))
        a, b, c = (rng.integers(0, vocab, size=int(rng.integers(0, 13))).tolist() for _ in range(3))
        if levenshtein(a, b) != levenshtein(b, a):
            axiom_violations += 1
        if (levenshtein(a, b) == 0) != (a == b):
            axiom_violations += 1
        if levenshtein(a, c) > levenshtein(a, b) + levenshtein(b, c):
            axiom_violations += 1

    ok = mismatches == 0 and axiom_violations == 0
    acceptance_report("metric oracles", ok, f"{mismatches} oracle mismatches, {axiom_violations} axiom violations")
    assert ok


def test_compact_encoding(acceptance_report):
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(10_000):
        seq = rng.integers(0, int(rng.integers(2, 7)), size=int(rng.integers(0, 40))).tolist()
        once = compact_encode(seq)
        if compact_encode(once) != once:
            bad += 1
        if any(x == y for x, y in zip(once, once[1:])):
            bad += 1
    paper_forms = (
        compact_encode_glyphs("EEEBBBAAACCCDDDFFF___") == "EBACDF_"
        and compact_encode_glyphs("__YY_BBB__GG_RRR__PP__") == "_Y_B_G_R_P_"
    )
    ok = bad == 0 and paper_forms
    acceptance_report("compact encoding", ok, f"{bad} violations in 10k sequences; canonical forms {'ok' if paper_forms else 'WRONG'}")
    assert ok


@pytest.mark.parametrize("task_id", ["c", "abc", "abcd", "abcdef", "blocks"])
def test_generator_validity(task_id, acceptance_report):
    task = get_task(task_id)
    lo, hi = LENGTH_BANDS[task.kind]
    bad = []
    for seed in range(1000):
        ep = sample_demonstration(task, seed=10_000 + seed)
        glyphs = task.alphabet.to_glyphs(ep.compact_labels())
        if not (lo <= ep.n_frames <= hi):
            bad.append((seed, "length", ep.n_frames))
            continue
        try:
            final = replay_compact_plan(ep, task)
        except Exception as err:  # precondition violation during replay
            bad.append((seed, "replay", str(err)))
            continue
        if not goal_reached(final, task):
            bad.append((seed, "goal", glyphs))
            continue
        if task_id == "abcdef":
            if "E" in glyphs:
                movers = [glyphs.index(c) for c in "ABD" if c in glyphs]
                if glyphs.index("E") >= min(movers):
                    bad.append((seed, "E-order", glyphs))
            if glyphs.index("F") < glyphs.index("D"):
                bad.append((seed, "F-order", glyphs))
        if task_id == "blocks":
            if glyphs.index("Y") > glyphs.index("G") or glyphs.index("R") > glyphs.index("P"):
                bad.append((seed, "precedence", glyphs))
    ok = not bad
    acceptance_report(f"generator validity [{task_id}]", ok, f"1000 episodes, {len(bad)} violations")
    assert ok, bad[:5]


def test_learning_synthetic_abcdef(acceptance_report, abcdef_pipeline):
    p = abcdef_pipeline
    row = evaluate_model(p["model"], p["test"], p["clf"].transform)
    ok = (
        row.symbol <= 0.10
        and row.structure <= 0.25
        and p["model"].epochs_run_ <= 50
        and p["train_seconds"] <= TRAIN_BUDGET_S
    )
    acceptance_report(
        "learning at synthetic scale [abcdef]",
        ok,
        f"symbol {row.symbol:.3f} (<=0.10, anchor 6.62%), structure {row.structure:.3f} (<=0.25, anchor 18.02%), "
        f"{p['model'].epochs_run_} epochs in {p['train_seconds']:.0f}s",
    )
    assert ok, row


def test_learning_synthetic_c(acceptance_report, c_pipeline):
    p = c_pipeline
    row = evaluate_model(p["model"], p["test"], p["clf"].transform)
    ok = row.symbol <= 0.05
    acceptance_report("learning at synthetic scale [c]", ok, f"symbol {row.symbol:.3f} (<=0.05, anchor 4.01%)")
    assert ok, row


def test_model_comparison_direction(acceptance_report, abcdef_pipeline):
    """Report-only: seq2seq should predict task structure at least as well
    as the attention baseline, mirroring the published comparison."""
    p = abcdef_pipeline
    train = p["train"][:120]
    test = p["test"][:20]
    clf = p["clf"]
    embedded = [clf.transform(e.obs) for e in train]
    labels = [e.labels for e in train]
    kw = dict(
        vocab_size=12, window=20, offset=1, latent_dim=64, epochs=6,
        max_batches_per_epoch=60, batch_size=128, patience=1000,
    )
    seq_scores, attn_scores = [], []
    for seed in range(5):
        seq = Seq2SeqTranslator(**kw, seed=seed).fit(embedded, labels)
        attn = AttentionTagger(**kw, attn_dim=32, seed=seed).fit(embedded, labels)
        seq_scores.append(evaluate_model(seq, test, clf.transform).structure)
        attn_scores.append(evaluate_model(attn, test, clf.transform).structure)
    seq_mean, attn_mean = float(np.mean(seq_scores)), float(np.mean(attn_scores))
    direction_holds = seq_mean <= attn_mean
    acceptance_report(
        "model comparison direction (report-only)",
        direction_holds,
        f"structure seq2seq {seq_mean:.3f} vs attn_lstm {attn_mean:.3f} over 5 seeds",
    )
    # non-blocking by specification: the direction is reported, not gated


def test_closed_loop_oracle(acceptance_report):
    failures = []
    for task_id in ("c", "abc", "abcd", "abcdef", "blocks"):
        task = get_task(task_id)
        counts = batch_rollout(task, OraclePolicy(task), n=100, seed=500)
        if counts.success != 100:
            failures.append((task_id, counts.as_dict()))
    ok = not failures
    acceptance_report("closed loop, oracle (no perturbation)", ok, "100/100 Success on every task" if ok else str(failures))
    assert ok, failures


def test_closed_loop_oracle_perturbed(acceptance_report):
    task = get_task("abcdef")
    bad = []
    for seed in range(100):
        pert = [Perturbation(mutation={"op": "move_object", "object": "ball", "to": "cabinet"}, when="ball_on_table")]
        out = run_episode(task, OraclePolicy(task), seed=seed, perturbations=pert)
        glyphs = task.alphabet.to_glyphs(out.executed)
        fired = any(p.fired for p in pert)
        refetched = "HB" in glyphs
        if not out.goal or (fired and not refetched):
            bad.append((seed, out.verdict, glyphs))
    ok = not bad
    acceptance_report("closed loop, oracle (ball-back-to-cabinet)", ok, f"100 rollouts, {len(bad)} without goal+refetch")
    assert ok, bad[:5]


def test_closed_loop_learned(acceptance_report, abcdef_pipeline):
    p = abcdef_pipeline
    policy = ModelPolicy(p["model"], p["clf"])
    counts = batch_rollout(p["task"], policy, n=20, seed=9000)
    ok = counts.accuracy >= 0.80
    acceptance_report(
        "closed loop, learned [abcdef]",
        ok,
        f"{counts.success}/{counts.recovered}/{counts.failure} -> accuracy {counts.accuracy:.2f} (>=0.80, anchor 80.0%)",
    )
    assert ok, counts.as_dict()


def test_imu_round_trip(acceptance_report):
    wrong = 0
    for seed in range(100):
        ep = sample_demonstration("blocks", seed=20_000 + seed)
        streams = synth_imu(ep, noise=ImuNoise(0.0, 0.0), seed=seed)
        labels = label_episode_from_imu(streams, ep.n_frames, float(ep.meta["frame_rate"]))
        if compact_encode(labels.tolist()) != ep.compact_labels():
            wrong += 1

    # static stream: < 0.5 degrees over 10 s
    st = np.zeros((1001, 7))
    st[:, 0] = np.arange(1001) / 100.0
    st[:, 3] = 9.81
    q = fuse(st)
    drift = max(2 * np.degrees(np.arccos(np.clip(np.abs(q[:, 0]), -1, 1))))

    # 1 s constant rotation recovered within 2 degrees
    st = np.zeros((101, 7))
    st[:, 0] = np.arange(101) / 100.0
    st[:, 3] = 9.81
    st[:, 6] = np.pi / 2
    q = fuse(st)
    yaw = np.degrees(2 * np.arctan2(q[-1, 3], q[-1, 0]))

    ok = wrong == 0 and drift < 0.5 and abs(yaw - 90.0) < 2.0
    acceptance_report(
        "IMU round trip",
        ok,
        f"{100 - wrong}/100 exact label round trips, static drift {drift:.3f} deg/10s, 90deg turn recovered as {yaw:.2f} deg",
    )
    assert ok, (wrong, drift, yaw)


def test_determinism(acceptance_report, tmp_path):
    from symplan.cli import main

    identical = []
    for name in ("a", "b"):
        rc = main(["gen", "--task", "c", "--n", "10", "--seed", "21", "--out", str(tmp_path / name)])
        assert rc == 0
    a_files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.jsonl"))
    identical.append(
        bool(a_files)
        and all((tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes() for rel in a_files)
    )

    for name in ("ca", "cb"):
        rc = main(["train-clf", "--data", str(tmp_path / "a"), "--out", str(tmp_path / f"{name}.json"), "--epochs", "4"])
        assert rc == 0
    identical.append((tmp_path / "ca.json").read_bytes() == (tmp_path / "cb.json").read_bytes())

    for name in ("sa", "sb"):
        rc = main(
            [
                "train-seq", "--data", str(tmp_path / "a"), "--clf", str(tmp_path / "ca.json"),
                "--latent", "16", "--epochs", "2", "--max-batches", "8", "--batch", "32",
                "--out", str(tmp_path / f"{name}.json"),
            ]
        )
        assert rc == 0
    identical.append((tmp_path / "sa.json").read_bytes() == (tmp_path / "sb.json").read_bytes())

    for name in ("ra", "rb"):
        rc = main(["rollout", "--task", "abc", "--n", "5", "--policy", "oracle", "--seed", "3", "--out", str(tmp_path / f"{name}.json")])
        assert rc == 0
    identical.append((tmp_path / "ra.json").read_bytes() == (tmp_path / "rb.json").read_bytes())

    ok = all(identical)
    acceptance_report("determinism", ok, f"gen/train-clf/train-seq/rollout reruns byte-identical: {identical}")
    assert ok, identical
