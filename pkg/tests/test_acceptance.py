"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Tolerances and case counts are pinned here and are not meant to be
relaxed.
"""

import json
import time

import numpy as np

from lingalloc.acquisition import AcquisitionScore, StrategyKind, nlpdt_score, select_batch
from lingalloc.cli import main
from lingalloc.corpus import DepTree
from lingalloc.experiment import (
    BudgetSpec,
    Setting,
    SettingFamily,
    allocate,
    curriculum,
    initial_composition,
    run_rounds,
)
from lingalloc.graph import Arborescence, ArcScores, chu_liu_edmonds, log_partition
from lingalloc.models import (
    DependencyParser,
    FeatureSpace,
    TrainingConfig,
    class_objective,
    featurize_text,
    featurize_tokens,
    parser_objective,
)
from lingalloc.synth import synth_classification
from lingalloc.tasks import BudgetUnit, accuracy, attachment_scores, span_f1

from oracles import all_single_root_trees, best_tree, logsumexp_over_trees, tree_total

SPACE = FeatureSpace(hash_dimension=1024, ngram_min=2, ngram_max=4)


def _verdict(number: int, description: str):
    print(f"\n[acceptance] criterion {number}: PASS - {description}")


def test_criterion_1_mst_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.monotonic()
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        scores = ArcScores(rng.uniform(-8.0, 8.0, size=(n + 1, n)))
        tree = chu_liu_edmonds(scores)
        got = tree_total(scores.scores, tree.heads)
        expected, _ = best_tree(scores.scores, n)
        assert abs(got - expected) <= 1e-9
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    _verdict(1, f"1000 decodes match exhaustive maxima within 1e-9 ({elapsed:.2f}s)")


def test_criterion_2_partition_oracle_equivalence():
    rng = np.random.default_rng(2025)
    start = time.monotonic()
    for _ in range(200):
        n = int(rng.integers(1, 6))
        scores = ArcScores(rng.uniform(-6.0, 6.0, size=(n + 1, n)))
        got = log_partition(scores)
        expected = logsumexp_over_trees(scores.scores, n)
        assert abs(got - expected) <= 1e-9
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    _verdict(2, f"200 log-partitions match enumeration within 1e-9 ({elapsed:.2f}s)")


STEP = 1e-5
REL_TOL = 1e-4


def _fd_check(f, flat, grad, coords):
    worst = 0.0
    for i in coords:
        plus = flat.copy()
        minus = flat.copy()
        plus[i] += STEP
        minus[i] -= STEP
        fd = (f(plus) - f(minus)) / (2 * STEP)
        rel = abs(grad[i] - fd) / max(1.0, abs(fd))
        worst = max(worst, rel)
        assert rel <= REL_TOL
    return worst


def test_criterion_3_gradient_checks():
    rng = np.random.default_rng(77)
    dim = SPACE.hash_dimension
    worst = 0.0

    for _ in range(50):  # classification objective
        examples = [
            (featurize_text("".join(rng.choice(list("abcdef"), 6)), SPACE), int(rng.integers(0, 3)))
            for _ in range(int(rng.integers(1, 4)))
        ]
        weights = rng.normal(0, 0.6, size=(3, dim))
        _, grad = class_objective(weights, examples, l2=0.01)

        def f(flat):
            return class_objective(flat.reshape(3, dim), examples, l2=0.01)[0]

        coords = sorted({c * dim + int(i) for (idx, _), _ in examples for i in idx for c in range(3)})
        worst = max(worst, _fd_check(f, weights.ravel(), grad.ravel(), coords[:25]))

    for _ in range(50):  # tagging objective over token-context features
        tokens = tuple("".join(rng.choice(list("uvwxyz"), 4)) for _ in range(int(rng.integers(1, 4))))
        examples = [(vec, int(rng.integers(0, 2))) for vec in featurize_tokens(tokens, SPACE)]
        weights = rng.normal(0, 0.6, size=(2, dim))
        _, grad = class_objective(weights, examples, l2=0.005)

        def f(flat):
            return class_objective(flat.reshape(2, dim), examples, l2=0.005)[0]

        coords = sorted({c * dim + int(i) for (idx, _), _ in examples for i in idx for c in range(2)})
        worst = max(worst, _fd_check(f, weights.ravel(), grad.ravel(), coords[:25]))

    parser = DependencyParser(SPACE, ("a", "b"))
    for _ in range(50):  # gold-tree objective (head softmax + label terms)
        n = int(rng.integers(2, 4))
        trees = all_single_root_trees(n)
        payload = DepTree(
            tuple("".join(rng.choice(list("nvad"), 3)) for _ in range(n)),
            tuple(str(rng.choice(["NOUN", "VERB", "ADJ"])) for _ in range(n)),
            trees[int(rng.integers(0, len(trees)))],
            tuple(str(rng.choice(["a", "b"])) for _ in range(n)),
        )
        sentences = [parser._sentence_examples(payload, {"a": 0, "b": 1})]
        arc_w = rng.normal(0, 0.6, size=dim)
        label_w = rng.normal(0, 0.6, size=(2, dim))
        _, g_arc, g_label = parser_objective(arc_w, label_w, sentences, l2=0.01)

        def f(flat):
            return parser_objective(flat[:dim], flat[dim:].reshape(2, dim), sentences, l2=0.01)[0]

        flat = np.concatenate([arc_w, label_w.ravel()])
        grad = np.concatenate([g_arc, g_label.ravel()])
        active = sorted({int(i) for groups, _ in sentences for vecs, _ in groups for idx, _ in vecs for i in idx})
        coords = active[:15] + [dim + c * dim + i for i in active[:8] for c in range(2)]
        worst = max(worst, _fd_check(f, flat, grad, coords))

    _verdict(3, f"3 x 50 finite-difference checks within rel. {REL_TOL} (worst {worst:.2e})")


def test_criterion_4_metric_fixtures():
    assert accuracy(["pos", "neg"], ["pos", "neg"]) == 1.0
    assert accuracy(["pos", "neg"], ["neg", "pos"]) == 0.0
    assert accuracy(["a", "a", "a", "a"], ["a", "a", "a", "b"]) == 0.75

    two_span = [["B-PER", "I-PER", "O", "B-LOC"]]
    assert span_f1(two_span, two_span)[:3] == (1.0, 1.0, 1.0)
    partial = span_f1([["B-PER", "O", "O"]], [["B-PER", "O", "B-LOC"]])
    assert partial[:3] == (1.0, 0.5, 2 / 3)
    repaired = span_f1([["O", "I-PER", "I-PER"]], [["O", "B-PER", "I-PER"]])
    assert repaired[:3] == (1.0, 1.0, 1.0)

    def tree(heads, labels):
        n = len(heads)
        return DepTree(tuple(f"w{i}" for i in range(n)), ("X",) * n, tuple(heads), tuple(labels))

    same = [tree([2, 0], ["a", "root"])]
    assert attachment_scores(same, same)[:2] == (1.0, 1.0)
    assert attachment_scores([tree([2, 0], ["b", "root"])], same)[:2] == (1.0, 0.5)
    gold = [tree([0, 1, 1], ["root", "x", "y"]), tree([2, 0], ["z", "root"])]
    pred = [tree([0, 1, 2], ["root", "x", "y"]), tree([2, 0], ["q", "root"])]
    assert attachment_scores(pred, gold)[:2] == (0.8, 0.6)

    rng = np.random.default_rng(404)
    labels = ["a", "b", "c"]
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        trees_n = all_single_root_trees(n)
        gold_heads = list(trees_n[int(rng.integers(0, len(trees_n)))])
        pred_heads = []
        for d in range(1, n + 1):
            h = int(rng.integers(0, n + 1))
            pred_heads.append(h if h != d else (h + 1) % (n + 1))
        g = tree(gold_heads, [labels[int(rng.integers(0, 3))] for _ in range(n)])
        p = tree(pred_heads, [labels[int(rng.integers(0, 3))] for _ in range(n)])
        uas, las, *_ = attachment_scores([p], [g])
        assert las <= uas
    _verdict(4, "all metric fixtures exact; LAS <= UAS on 1000 random fixtures")


def test_criterion_5_acquisition_properties():
    rng = np.random.default_rng(505)

    def random_pool():
        n = int(rng.integers(1, 40))
        return [
            AcquisitionScore(int(i), float(rng.normal()), "en", int(rng.integers(1, 8)))
            for i in rng.permutation(n)
        ]

    for _ in range(500):  # budget safety
        pool = random_pool()
        budget = int(rng.integers(1, 80))
        selected, spent = select_batch(pool, budget)
        assert spent <= budget
        by_id = {s.instance_id: s.cost for s in pool}
        assert spent == sum(by_id[i] for i in selected)

    for _ in range(500):  # determinism under input reordering
        pool = random_pool()
        budget = int(rng.integers(1, 80))
        shuffled = [pool[int(k)] for k in rng.permutation(len(pool))]
        assert select_batch(pool, budget) == select_batch(shuffled, budget)

    for _ in range(500):  # ids bought once never reappear in later rounds
        pool = random_pool()
        first, _ = select_batch(pool, int(rng.integers(1, 50)))
        taken = set(first)
        remaining = [s for s in pool if s.instance_id not in taken]
        second, _ = select_batch(remaining, int(rng.integers(1, 50)))
        assert not taken & set(second)

    n = 3
    trees = all_single_root_trees(n)
    for _ in range(500):  # equal-length rank agreement of the two normalizations
        items = []
        for _ in range(8):
            raw = rng.uniform(0.05, 1.0, size=(n + 1, n))
            for d in range(1, n + 1):
                raw[d, d - 1] = 0.0
            probas = raw / raw.sum(axis=0, keepdims=True)
            heads = trees[int(rng.integers(0, len(trees)))]
            items.append((probas, Arborescence(heads)))
        plain = [nlpdt_score(p, t, n, StrategyKind.NLPDT) for p, t in items]
        squared = [nlpdt_score(p, t, n, StrategyKind.NLPDT_N2) for p, t in items]
        assert np.argsort(plain, kind="stable").tolist() == np.argsort(squared, kind="stable").tolist()

    _verdict(5, "4 selection properties hold on 500 random cases each")


FAST = TrainingConfig(learning_rates=(0.5,), batch_size=32, max_epochs=8, patience=8, rng_seed=0)


def test_criterion_6_curriculum_identity():
    data = synth_classification(["aa", "bb", "cc"], 150, 30, 0.5, seed=5)
    spec = BudgetSpec(40, 30, 20, rounds=4, unit=BudgetUnit.INSTANCE)
    worst = 0.0
    for setting in (
        Setting(SettingFamily.SMA, StrategyKind.LC, True),
        Setting(SettingFamily.MMA, StrategyKind.LC, True),
        Setting(SettingFamily.SMA, StrategyKind.LC, False),
    ):
        plan = allocate(setting, spec, data.languages)
        _, events = run_rounds(plan, data, FAST, SPACE, rng_seed=42)
        per_round_total = sum(mp.acq_budget // spec.acquisition_rounds for mp in plan.models)
        report = curriculum(events, initial_composition(plan, data, 42), per_round_total)
        for round_index in sorted(report.relative_difference):
            gap = report.identity_gap(round_index)
            worst = max(worst, gap)
            assert gap <= 1e-9
    _verdict(6, f"share identity holds every round on 3 live runs (worst gap {worst:.1e})")


def test_criterion_7_protocol_shape():
    data = synth_classification(["aa", "bb", "cc"], 150, 30, 0.5, seed=5)
    spec = BudgetSpec(30, 30, 30, rounds=4, unit=BudgetUnit.INSTANCE)

    sma_plan = allocate(Setting(SettingFamily.SMA, StrategyKind.LC, True), spec, data.languages)
    results, events = run_rounds(sma_plan, data, FAST, SPACE, rng_seed=7)
    assert len(results) == 4
    rounds_with_events = sorted({e.round for e in events})
    assert rounds_with_events == [1, 2, 3]
    for r in (1, 2, 3):
        round_spend = sum(e.cost for e in events if e.round == r)
        assert round_spend <= spec.acq_budget / 3

    mma_plan = allocate(Setting(SettingFamily.MMA, StrategyKind.LC, True), spec, data.languages)
    _, mma_events = run_rounds(mma_plan, data, FAST, SPACE, rng_seed=7)
    for mp in mma_plan.models:
        lang = mp.languages[0]
        model_rounds = sorted({e.round for e in mma_events if e.language == lang})
        assert model_rounds == [1, 2, 3]
        for r in model_rounds:
            spend = sum(e.cost for e in mma_events if e.round == r and e.language == lang)
            assert spend <= spec.acq_budget / 3

    mono_plan = allocate(
        Setting(SettingFamily.MONOA, StrategyKind.LC, True, source="bb"), spec, data.languages
    )
    mono_results, mono_events = run_rounds(mono_plan, data, FAST, SPACE, rng_seed=7)
    for result in mono_results:
        assert sorted(result.report.per_language) == ["aa", "bb", "cc"]
    assert {e.language for e in mono_events} == {"bb"}
    _verdict(7, "R=4 yields 3 acquisitions per model within b/3; zero-shot eval everywhere")


def test_criterion_8_directional_replication():
    start = time.monotonic()
    data = synth_classification(["aa", "bb", "cc", "dd"], 700, 150, 0.5, seed=11)
    spec = BudgetSpec(300, 300, 300, rounds=4, unit=BudgetUnit.INSTANCE)
    config = TrainingConfig(learning_rates=(0.5,), batch_size=32, max_epochs=25, patience=5, rng_seed=0)
    space = FeatureSpace(hash_dimension=4096, ngram_min=2, ngram_max=4)

    def replicate_mean(setting):
        plan = allocate(setting, spec, data.languages)
        values = []
        for rep in range(5):
            results, _ = run_rounds(plan, data, config, space, rng_seed=100 + rep)
            values.append(
                float(np.mean([m["accuracy"] for r in results for m in r.report.per_language.values()]))
            )
        return float(np.mean(values))

    sma_lc = replicate_mean(Setting(SettingFamily.SMA, StrategyKind.LC, True))
    sma_random = replicate_mean(Setting(SettingFamily.SMA, StrategyKind.LC, False))
    mma_lc = replicate_mean(Setting(SettingFamily.MMA, StrategyKind.LC, True))
    mma_random = replicate_mean(Setting(SettingFamily.MMA, StrategyKind.LC, False))
    elapsed = time.monotonic() - start

    assert sma_lc >= mma_lc, f"SMA+AL {sma_lc:.4f} < MMA+AL {mma_lc:.4f}"
    assert sma_random >= mma_random, f"SMA {sma_random:.4f} < MMA {mma_random:.4f}"
    assert sma_lc >= sma_random, f"SMA+AL {sma_lc:.4f} < SMA+random {sma_random:.4f}"
    assert elapsed < 300.0
    _verdict(
        8,
        f"SMA+AL {sma_lc:.4f} >= MMA+AL {mma_lc:.4f}; SMA {sma_random:.4f} >= "
        f"MMA {mma_random:.4f}; SMA+AL >= SMA+random {sma_random:.4f} ({elapsed:.0f}s)",
    )


def test_criterion_9_full_determinism(tmp_path):
    rc = main(
        [
            "synth", "--task", "classification", "--languages", "aa,bb",
            "--train-size", "80", "--test-size", "20", "--overlap", "0.5",
            "--seed", "3", "--budget", "16", "--out", str(tmp_path / "corpus"),
        ]
    )
    assert rc == 0
    config_path = tmp_path / "corpus" / "config.json"
    cfg = json.loads(config_path.read_text())
    cfg["settings"] = [{"kind": "sma", "strategy": "lc"}, {"kind": "mma", "strategy": "lc"}]
    cfg["budget"] = {"seed": 16, "rounds": 3}
    cfg["training"] = {"learning_rates": [0.5], "max_epochs": 4, "patience": 4}
    cfg["feature_space"] = {"hash_dimension": 1024}
    cfg["replicates"] = 2
    config_path.write_text(json.dumps(cfg))

    outs = []
    for name, jobs in (("serial", "1"), ("again", "1"), ("parallel", "3")):
        out = tmp_path / name
        assert main(["run", "--config", str(config_path), "--jobs", jobs, "--out", str(out)]) == 0
        outs.append(
            {
                p.name: p.read_bytes()
                for p in sorted((out / "results").glob("*.jsonl"))
            }
        )
    assert outs[0] == outs[1] == outs[2]
    assert outs[0], "no result files produced"
    _verdict(9, "result JSON-lines byte-identical across reruns and --jobs values")


def test_criterion_10_single_language_degeneracy():
    data = synth_classification(["solo"], 150, 30, 0.5, seed=6)
    spec = BudgetSpec(40, 30, 20, rounds=4, unit=BudgetUnit.INSTANCE)
    outputs = []
    for setting in (
        Setting(SettingFamily.SMA, StrategyKind.LC, True),
        Setting(SettingFamily.MMA, StrategyKind.LC, True),
        Setting(SettingFamily.MONOA, StrategyKind.LC, True, source="solo"),
    ):
        plan = allocate(setting, spec, data.languages)
        outputs.append(run_rounds(plan, data, FAST, SPACE, rng_seed=2))
    assert outputs[0] == outputs[1] == outputs[2]
    _verdict(10, "SMA, MMA, MonoA coincide exactly for a single language")
