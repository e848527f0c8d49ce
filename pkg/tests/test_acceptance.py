"""Acceptance suite.

One test per acceptance criterion; each prints a single PASS line with the
measured quantities when its assertions hold. Thresholds and tolerances are
pinned here and nowhere else.
"""

import time

import numpy as np
import pytest

from verbspace import annotations as ann
from verbspace import data_io, metrics, model, retrieval
from verbspace.vocab import default_vocabulary

from oracles import brute_force_accuracy, brute_force_ap, finite_difference


def _report(name: str, detail: str) -> None:
    print(f"PASS  {name}: {detail}")


# ---------------------------------------------------------------------------
# Shared fixtures: public-scale annotation corpora written through the
# annotation file formats and re-ingested, standing in for the converted
# public annotation releases (the originals are not redistributable here).
# ---------------------------------------------------------------------------

PUBLIC_SCALE = {
    # videos, videos per annotated action (matches the datasets' class sizes)
    "BEOID": (732, 21),
    "CMU": (404, 13),
    "GTEA+": (1001, 16),
}


@pytest.fixture(scope="module")
def vocab():
    return default_vocabulary()


@pytest.fixture(scope="module")
def public_bundles(vocab, tmp_path_factory):
    """dataset id -> list of bundles, produced by the full file pipeline."""
    root = tmp_path_factory.mktemp("public_scale")
    out = {}
    for seed, (dataset_id, (videos, per_action)) in enumerate(PUBLIC_SCALE.items()):
        corpus = data_io.synthesize(
            video_count=videos,
            noise=0.0,
            seed=100 + seed,
            vocab=vocab,
            dataset_id=dataset_id,
            videos_per_action=per_action,
        )
        safe = dataset_id.replace("+", "_")
        ann_file = root / f"{safe}.csv"
        with ann_file.open("w", encoding="utf-8") as fh:
            import csv as _csv

            writer = _csv.writer(fh)
            for action_id, aset in corpus.annotation_sets.items():
                for k, selection in enumerate(aset.annotator_selections):
                    lemmas = ";".join(vocab.verbs[j] for j in sorted(selection))
                    writer.writerow([action_id, f"a{k:03d}", lemmas])
        manifest_file = root / f"{safe}_manifest.csv"
        data_io.save_manifest_records(corpus.records, manifest_file)

        sets = ann.load_annotation_sets(ann_file, vocab)
        records = data_io.load_manifest_records(manifest_file)
        from dataclasses import replace

        bundles = [
            replace(ann.build_bundle(sets[r.action_id], vocab), video_id=r.video_id)
            for r in records
        ]
        out[dataset_id] = bundles
    return out


class TestEq3Oracle:
    def test_accuracy_matches_brute_force_exactly(self, rng):
        start = time.time()
        for _ in range(200):
            n_verbs = int(rng.integers(1, 9))
            n_videos = int(rng.integers(1, 9))
            scores = rng.random((n_videos, n_verbs))
            gts = [
                set(rng.choice(n_verbs, size=int(rng.integers(1, n_verbs + 1)),
                               replace=False).tolist())
                for _ in range(n_videos)
            ]
            report = metrics.multilabel_accuracy(scores, gts)
            assert report.mean == brute_force_accuracy(scores, gts)

        # worked example: 3 relevant verbs, 2 recovered in the top 3
        scores = np.array([[0.9, 0.8, 0.1, 0.7, 0.0]])
        report = metrics.multilabel_accuracy(scores, [{0, 1, 2}])
        assert abs(report.mean - 2 / 3) < 1e-12
        elapsed = time.time() - start
        assert elapsed < 5
        _report(
            "eq3-oracle",
            f"200 random instances exact, worked example 2/3 within 1e-12, "
            f"{elapsed:.2f}s",
        )


class TestGradientChecks:
    def test_analytic_gradients_match_central_differences(self, rng):
        start = time.time()
        checked = 0
        for trial in range(50):
            d = int(rng.integers(2, 7))
            h = int(rng.integers(2, 6))
            out = int(rng.integers(2, 5))
            params = model.init_params(
                d, out, "SAMV", hidden=(h,), seed=int(rng.integers(1 << 30))
            )
            X = rng.normal(size=(2, d))
            loss = "ML" if trial % 2 == 0 else "SL"
            if loss == "ML":
                Y = rng.uniform(0, 1, size=(2, out))
            else:
                Y = np.eye(out)[rng.integers(out, size=2)]
            analytic = model.gradient(params, X, Y, loss)
            numeric = finite_difference(params, X, Y, loss)
            for a, n in zip(analytic[0] + analytic[1], numeric[0] + numeric[1]):
                np.testing.assert_allclose(a, n, rtol=1e-4, atol=1e-8)
                checked += a.size

        # stated property: at sigmoid(z) = y the loss stays positive for
        # fractional targets while the output-logit gradient vanishes
        y = rng.uniform(0.05, 0.95, size=12)
        logits = np.log(y / (1 - y))
        grad_norm = float(np.abs(model.ml_logit_gradient(logits, y)).max())
        from verbspace.model import Prediction, sigmoid

        value = model.loss_ml(
            Prediction(logits=logits, scores=sigmoid(logits), scheme="SAMV"), y
        )
        assert grad_norm < 1e-9
        assert value > 0
        elapsed = time.time() - start
        assert elapsed < 10
        _report(
            "gradient-checks",
            f"50 networks / {checked} coordinates within 1e-4 of central "
            f"differences; zero-gradient point has grad {grad_norm:.1e} with "
            f"loss {value:.3f} > 0; {elapsed:.2f}s",
        )


class TestApOracle:
    def test_average_precision_matches_exhaustive_recomputation(self, rng):
        start = time.time()
        for _ in range(500):
            n = int(rng.integers(1, 13))
            ranking = list(range(n))
            rng.shuffle(ranking)
            relevant = set(
                rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist()
            )
            assert metrics.average_precision(ranking, relevant) == brute_force_ap(
                ranking, relevant
            )
        case = metrics.average_precision(["r1", "x", "r2"], {"r1", "r2"})
        assert case == pytest.approx(5 / 6, abs=1e-15)
        elapsed = time.time() - start
        _report(
            "ap-oracle",
            f"500 random rankings exact, [rel, non, rel] = {case:.6f} = 5/6, "
            f"{elapsed:.2f}s",
        )


class TestPerfectPredictorSuite:
    def test_beoid_scale_perfect_retrieval_and_recognition(self, vocab, public_bundles):
        start = time.time()
        bundles = public_bundles["BEOID"]
        scores = np.stack([b.samv.scores for b in bundles])
        rel = [ann.relevant_set(b.samv, 0.3) for b in bundles]
        assert all(rel), "every video must have a nonempty relevant set at 0.3"

        report = metrics.multilabel_accuracy(scores, rel)
        assert report.mean == 1.0

        v2t_aps = [
            metrics.average_precision(retrieval.video_to_text(scores[i]).ids(), rel[i])
            for i in range(len(bundles))
        ]
        v2t_map = float(np.mean(v2t_aps))
        assert v2t_map == 1.0

        index = retrieval.build_index(
            [(b.video_id, "BEOID", scores[i]) for i, b in enumerate(bundles)],
            vocab.fingerprint(),
        )
        gt_sets = {b.video_id: r for b, r in zip(bundles, rel)}
        rows = retrieval.text_to_video_sweep(index, gt_sets, range(1, 6))
        for row in rows:
            assert row.query_count > 0, f"no co-occurring queries at n={row.n}"
            assert row.mean_ap == 1.0, f"n={row.n} mAP {row.mean_ap}"
        elapsed = time.time() - start
        assert elapsed < 30
        _report(
            "perfect-predictor",
            f"732 videos: accuracy 1.0, v2t mAP 1.0, t2v mAP 1.0 at n=1..5 "
            f"({[r.query_count for r in rows]} queries), {elapsed:.1f}s",
        )


class TestSyntheticLearnability:
    def test_heldout_rmse_and_accuracy(self):
        start = time.time()
        corpus = data_io.synthesize(verb_count=20, video_count=500, noise=0.05, seed=7)
        split = data_io.stratified_kfold(
            {b.video_id: b.sv for b in corpus.bundles}, k=5, seed=7
        )
        train_ids, test_ids = split.train_test(0)
        by_id = {b.video_id: (f, b) for f, b in corpus.training_pairs()}
        train_pairs = [by_id[i] for i in train_ids]
        test_pairs = [by_id[i] for i in test_ids]

        cfg = model.TrainConfig(
            learning_rate=0.1, epochs=800, batch_size=0, seed=7,
            momentum=0.9, hidden=(256,),
        )
        result = model.train(
            train_pairs, "SAMV", cfg, vocab_fingerprint=corpus.vocab.fingerprint()
        )
        X = np.stack([f.values for f, _ in test_pairs])
        gts = [b.samv for _, b in test_pairs]
        pred = model.forward(result.params, X)
        manner_rmse, result_rmse = metrics.rmse_by_verb_type(
            pred.scores, gts, corpus.vocab
        )
        rel = [ann.relevant_set(g, 0.3) for g in gts]
        report = metrics.multilabel_accuracy(pred.scores, rel)
        elapsed = time.time() - start
        assert manner_rmse < 0.1
        assert result_rmse < 0.1
        assert report.mean > 0.9
        assert elapsed < 120
        _report(
            "synthetic-learnability",
            f"held-out rmse manner {manner_rmse:.4f} / result {result_rmse:.4f} "
            f"(< 0.1), accuracy {report.mean:.4f} (> 0.9), {elapsed:.1f}s",
        )


class TestRetrievalTrend:
    def test_samv_query_growth_beats_single_verb_model(self):
        """Soft-trained scores: t2v mAP non-decreasing from n=1 to n=3 and
        above the one-hot-trained model by >= 0.02 at n >= 2, 5-seed means."""
        start = time.time()
        samv = np.zeros(3)
        sv = np.zeros(3)
        seeds = range(5)
        for seed in seeds:
            corpus = data_io.synthesize(
                verb_count=20, video_count=600, noise=0.18, seed=seed
            )
            pairs = corpus.training_pairs()
            fingerprint = corpus.vocab.fingerprint()
            X = np.stack([f.values for f, _ in pairs])
            gt_sets = {
                b.video_id: ann.relevant_set(b.samv, 0.3) for b in corpus.bundles
            }
            for scheme, acc in (("SAMV", samv), ("SV", sv)):
                cfg = model.TrainConfig(
                    learning_rate=0.1, epochs=150, batch_size=0, seed=seed,
                    momentum=0.9, hidden=(128,),
                )
                result = model.train(pairs, scheme, cfg, vocab_fingerprint=fingerprint)
                scores = model.forward(result.params, X).scores
                index = retrieval.build_index(
                    [(b.video_id, "SYNTH", scores[i]) for i, (_, b) in enumerate(pairs)],
                    fingerprint,
                )
                rows = retrieval.text_to_video_sweep(index, gt_sets, range(1, 4))
                acc += np.array([row.mean_ap for row in rows])
        samv /= len(seeds)
        sv /= len(seeds)
        elapsed = time.time() - start
        assert samv[1] >= samv[0], f"mAP dropped from n=1 to n=2: {samv}"
        assert samv[2] >= samv[1], f"mAP dropped from n=2 to n=3: {samv}"
        for n in (1, 2):
            assert samv[n] - sv[n] >= 0.02, (
                f"margin at n={n + 1}: {samv[n] - sv[n]:.4f}"
            )
        _report(
            "retrieval-trend",
            f"soft model mAP {np.round(samv, 4).tolist()} non-decreasing; "
            f"one-hot model {np.round(sv, 4).tolist()}; margins "
            f"{np.round(samv[1:] - sv[1:], 3).tolist()} >= 0.02; {elapsed:.0f}s",
        )


class TestAlphaSweepBehavior:
    def test_exclusion_and_flagging_fixtures(self):
        # videos drop out exactly when their relevant set empties
        gts = [
            ann.SoftLabel(counts=np.array([8, 4]), total=10),
            ann.SoftLabel(counts=np.array([4, 8]), total=10),
            ann.SoftLabel(counts=np.array([3, 3]), total=10),
        ]
        preds = np.array([[0.8, 0.4], [0.4, 0.8], [0.3, 0.3]])
        from fractions import Fraction

        grid = [Fraction(i, 10) for i in range(10)]
        curve = metrics.alpha_sweep(preds, gts, grid)
        for alpha, point in zip(grid, curve.points):
            expected_counted = sum(1 for g in gts if ann.relevant_set(g, alpha))
            assert point.counted == expected_counted
            if expected_counted == 0:
                assert point.accuracy is None and point.mean_set_size is None
            else:
                assert point.accuracy is not None
        # all populations vanish above the global max score
        high = metrics.alpha_sweep(preds, gts, [Fraction(9, 10)])
        assert high.points[0].counted == 0 and high.points[0].accuracy is None
        flagged = sum(1 for p in curve.points if p.accuracy is None)
        _report(
            "alpha-sweep",
            f"{len(curve.points)}-point grid, exclusions match relevant-set "
            f"emptiness at every point ({flagged} flagged empty)",
        )


class TestDeterminism:
    def test_checkpoints_splits_and_corpora_reproduce_bit_identically(self, tmp_path):
        corpus_a = data_io.synthesize(verb_count=10, video_count=80, noise=0.1, seed=13)
        corpus_b = data_io.synthesize(verb_count=10, video_count=80, noise=0.1, seed=13)
        for x, y in zip(corpus_a.features, corpus_b.features):
            assert x.values.tobytes() == y.values.tobytes()
        for x, y in zip(corpus_a.bundles, corpus_b.bundles):
            assert x.samv.counts.tobytes() == y.samv.counts.tobytes()

        strata = {b.video_id: b.sv for b in corpus_a.bundles}
        assert (
            data_io.stratified_kfold(strata, 5, seed=2).folds
            == data_io.stratified_kfold(strata, 5, seed=2).folds
        )

        pairs = corpus_a.training_pairs()
        cfg = model.TrainConfig(
            learning_rate=0.1, epochs=40, batch_size=16, seed=3, momentum=0.9,
            hidden=(32,),
        )
        r1 = model.train(pairs, "SAMV", cfg, "fp")
        r2 = model.train(pairs, "SAMV", cfg, "fp")
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        model.save_checkpoint(r1.params, p1, cfg)
        model.save_checkpoint(r2.params, p2, cfg)
        assert p1.read_bytes() == p2.read_bytes()
        _report(
            "determinism",
            "corpora, fold splits, and checkpoints bit-identical across reruns",
        )


class TestAnnotationPipeline:
    def test_public_scale_counts_and_bundle_invariants(self, public_bundles):
        counts = {k: len(v) for k, v in public_bundles.items()}
        assert counts == data_io.PUBLIC_DATASET_SIZES
        checked = 0
        for bundles in public_bundles.values():
            for bundle in bundles:
                assert (
                    bundle.mv.bits == ann.binarize(bundle.samv, 0.5).bits
                ).all()
                assert bundle.sv == int(np.argmax(bundle.samv.counts))
                checked += 1
        _report(
            "annotation-pipeline",
            f"bundle counts {counts} match published sizes; mv/sv invariants "
            f"hold for all {checked} bundles",
        )
