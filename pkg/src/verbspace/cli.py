"""Command-line entry points.

Each command reads files, drives exactly one library pipeline, writes its
artifact, and prints a one-line summary. Multi-word verb lemmas are written
with hyphens on the command line ("turn-off" for "turn off").

All relative paths resolve against $VERBSPACE_DATA_DIR when it is set.
"""

from __future__ import annotations

import csv
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import annotations as ann
from . import data_io, metrics, model, retrieval
from .vocab import load_vn_classes, load_vocabulary

SCHEME_CHOICES = click.Choice(model.SCHEMES)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _path(value: str) -> Path:
    return data_io.resolve_data_path(value)


def _cli_lemma(token: str) -> str:
    return token.strip().replace("-", " ")


def _load_inputs(features_file, bundles_file, vocab_file):
    vocab = load_vocabulary(_path(vocab_file))
    bundles = ann.load_bundles(_path(bundles_file))
    features = data_io.load_features(_path(features_file))
    missing = [b.video_id for b in bundles if b.video_id not in features]
    if missing:
        _fail(f"no feature rows for {len(missing)} videos: {missing[:5]}")
    pairs = [
        (model.FeatureVector(video_id=b.video_id, values=features[b.video_id]), b)
        for b in bundles
    ]
    return vocab, bundles, pairs


def _load_scores_csv(path: Path, width: int) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) != width + 2:
            _fail(f"{path}: expected video_id,dataset_id plus {width} score columns")
        for row in reader:
            if row:
                out[row[0]] = np.array([float(v) for v in row[2:]], dtype=np.float64)
    return out


def _scheme_gt_sets(bundles, scheme: str, alpha: Fraction) -> list[set[int]]:
    if scheme == "SV":
        return [{b.sv} for b in bundles]
    if scheme == "VN":
        missing = [b.video_id for b in bundles if b.vn is None]
        if missing:
            _fail(f"bundles without a verb-noun class: {missing[:5]}")
        return [{b.vn} for b in bundles]
    if scheme == "MV":
        return [{int(j) for j in np.flatnonzero(b.mv.bits)} for b in bundles]
    return [ann.relevant_set(b.samv, alpha) for b in bundles]


def _predict_scores(pairs, vocab, model_file, scores_file, scheme):
    if (model_file is None) == (scores_file is None):
        _fail("provide exactly one of --model or --scores")
    if scores_file is not None:
        table = _load_scores_csv(_path(scores_file), len(vocab))
        missing = [fv.video_id for fv, _ in pairs if fv.video_id not in table]
        if missing:
            _fail(f"scores file lacks {len(missing)} videos: {missing[:5]}")
        return np.stack([table[fv.video_id] for fv, _ in pairs])
    params, _ = model.load_checkpoint(_path(model_file), vocab.fingerprint())
    if scheme and params.scheme != scheme:
        _fail(f"checkpoint was trained for {params.scheme}, not {scheme}")
    X = np.stack([fv.values for fv, _ in pairs])
    return model.forward(params, X).scores


@click.group()
def main() -> None:
    """Multi-verb action labels: aggregation, training, evaluation, retrieval."""


@main.command()
@click.option("--annotations", "annotations_file", required=True, help="raw annotator responses (CSV or JSON)")
@click.option("--vocab", "vocab_file", required=True)
@click.option("--out", "out_file", required=True, help="bundle file to write (JSON lines)")
@click.option("--manifest", "manifest_file", default=None,
              help="map videos to annotated actions; one bundle per manifest video")
def aggregate(annotations_file, vocab_file, out_file, manifest_file):
    """Aggregate annotator selections into label bundles."""
    try:
        vocab = load_vocabulary(_path(vocab_file))
        sets = ann.load_annotation_sets(_path(annotations_file), vocab)
        if manifest_file:
            records = data_io.load_manifest_records(_path(manifest_file))
            missing = [r.video_id for r in records if r.action_id not in sets]
            if missing:
                _fail(f"no annotation for {len(missing)} videos: {missing[:5]}")
            from dataclasses import replace

            bundles = [
                replace(ann.build_bundle(sets[r.action_id], vocab), video_id=r.video_id)
                for r in records
            ]
        else:
            bundles = [ann.build_bundle(sets[vid], vocab) for vid in sets]
        ann.save_bundles(bundles, _path(out_file))
    except (ann.AnnotationError, data_io.DataError, OSError, ValueError) as exc:
        _fail(str(exc))
    click.echo(f"aggregate: wrote {len(bundles)} bundles to {out_file}")


@main.command()
@click.option("--features", "features_file", required=True)
@click.option("--bundles", "bundles_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--scheme", type=SCHEME_CHOICES, required=True)
@click.option("--out", "out_file", required=True, help="checkpoint path")
@click.option("--epochs", default=500, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--batch-size", default=0, show_default=True, help="0 = full batch")
@click.option("--momentum", default=0.9, show_default=True)
@click.option("--hidden", default="256", show_default=True, help="comma-separated hidden widths")
@click.option("--seed", default=0, show_default=True)
@click.option("--vn-classes", "vn_file", default=None, help="verb-noun class list (for VN)")
def train(features_file, bundles_file, vocab_file, scheme, out_file, epochs,
          learning_rate, batch_size, momentum, hidden, seed, vn_file):
    """Train the verb-score regressor on precomputed features."""
    try:
        vocab, bundles, pairs = _load_inputs(features_file, bundles_file, vocab_file)
        cfg = model.TrainConfig(
            learning_rate=learning_rate,
            epochs=epochs,
            batch_size=batch_size,
            seed=seed,
            momentum=momentum,
            hidden=tuple(int(h) for h in hidden.split(",") if h),
        )
        output_dim = None
        if scheme == "VN":
            if vn_file is None:
                _fail("--vn-classes is required for the VN scheme")
            output_dim = len(load_vn_classes(_path(vn_file)))
        result = model.train(pairs, scheme, cfg, vocab.fingerprint(), output_dim)
        model.save_checkpoint(result.params, _path(out_file), cfg)
    except (model.ModelError, model.TrainingDiverged, ann.AnnotationError,
            data_io.DataError, OSError) as exc:
        _fail(str(exc))
    click.echo(
        f"train: scheme {scheme}, {len(pairs)} videos, {epochs} epochs, "
        f"final loss {result.epoch_losses[-1]:.6f} -> {out_file}"
    )


@main.command("eval")
@click.option("--features", "features_file", required=True)
@click.option("--bundles", "bundles_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--model", "model_file", default=None, help="checkpoint to evaluate")
@click.option("--scores", "scores_file", default=None,
              help="precomputed score table (as written by export-scores)")
@click.option("--scheme", type=SCHEME_CHOICES, required=True)
@click.option("--alpha", default="0.3", show_default=True,
              help="relevance threshold for SAMV ground truth")
@click.option("--out", "out_file", default=None, help="JSON report path")
def eval_command(features_file, bundles_file, vocab_file, model_file, scores_file,
                 scheme, alpha, out_file):
    """Top-k recognition accuracy (and RMSE for multi-label schemes)."""
    try:
        alpha_value = Fraction(alpha)
        vocab, bundles, pairs = _load_inputs(features_file, bundles_file, vocab_file)
        scores = _predict_scores(pairs, vocab, model_file, scores_file, scheme)
        gts = _scheme_gt_sets(bundles, scheme, alpha_value)
        kept = [i for i, gt in enumerate(gts) if gt]
        excluded = len(gts) - len(kept)
        report = metrics.multilabel_accuracy(
            scores[kept], [gts[i] for i in kept], scheme=scheme
        )
        payload = report.to_dict()
        payload["alpha"] = float(alpha_value)
        payload["excluded_videos"] = excluded
        if scheme in ("MV", "SAMV"):
            manner, result = metrics.rmse_by_verb_type(
                scores, [b.samv for b in bundles], vocab
            )
            payload["rmse_manner"] = manner
            payload["rmse_result"] = result
        if out_file:
            import json

            Path(_path(out_file)).write_text(
                json.dumps(payload, indent=2), encoding="utf-8"
            )
    except (metrics.MetricError, model.ModelError, ann.AnnotationError,
            data_io.DataError, OSError, ValueError) as exc:
        _fail(str(exc))
    extra = ""
    if scheme in ("MV", "SAMV"):
        extra = (f", rmse manner {payload['rmse_manner']:.4f}"
                 f" result {payload['rmse_result']:.4f}")
    click.echo(
        f"eval: scheme {scheme}, accuracy {report.mean:.4f} over "
        f"{report.counted} videos ({excluded} excluded){extra}"
    )


@main.command("sweep-alpha")
@click.option("--features", "features_file", required=True)
@click.option("--bundles", "bundles_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--model", "model_file", default=None)
@click.option("--scores", "scores_file", default=None)
@click.option("--out", "out_file", required=True, help="CSV table (alpha, accuracy)")
@click.option("--steps", default=20, show_default=True,
              help="grid points at 1/steps spacing starting from 0")
def sweep_alpha(features_file, bundles_file, vocab_file, model_file, scores_file,
                out_file, steps):
    """Accuracy across relevance thresholds, excluding emptied videos."""
    try:
        vocab, bundles, pairs = _load_inputs(features_file, bundles_file, vocab_file)
        scores = _predict_scores(pairs, vocab, model_file, scores_file, None)
        grid = [Fraction(i, steps) for i in range(steps)]
        curve = metrics.alpha_sweep(scores, [b.samv for b in bundles], grid)
        metrics.write_sweep_csv(curve, _path(out_file))
    except (metrics.MetricError, model.ModelError, ann.AnnotationError,
            data_io.DataError, OSError) as exc:
        _fail(str(exc))
    defined = sum(1 for p in curve.points if p.accuracy is not None)
    click.echo(
        f"sweep-alpha: {len(curve.points)} grid points ({defined} with "
        f"nonempty populations) -> {out_file}"
    )


@main.command("build-index")
@click.option("--features", "features_file", required=True)
@click.option("--bundles", "bundles_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--model", "model_file", default=None)
@click.option("--use-gt-scores", is_flag=True,
              help="index the ground-truth soft labels instead of predictions")
@click.option("--dataset-id", default=None, help="override the dataset tag")
@click.option("--out", "out_file", required=True)
def build_index(features_file, bundles_file, vocab_file, model_file, use_gt_scores,
                dataset_id, out_file):
    """Build the retrieval index of per-video verb scores."""
    try:
        vocab, bundles, pairs = _load_inputs(features_file, bundles_file, vocab_file)
        if use_gt_scores:
            scores = np.stack([b.samv.scores for b in bundles])
        else:
            if model_file is None:
                _fail("provide --model or --use-gt-scores")
            params, _ = model.load_checkpoint(_path(model_file), vocab.fingerprint())
            X = np.stack([fv.values for fv, _ in pairs])
            scores = model.forward(params, X).scores
        tag = dataset_id or "default"
        index = retrieval.build_index(
            [(b.video_id, tag, scores[i]) for i, b in enumerate(bundles)],
            vocab.fingerprint(),
            bundles={b.video_id: b for b in bundles},
        )
        retrieval.save_index(index, _path(out_file))
    except (retrieval.RetrievalError, model.ModelError, ann.AnnotationError,
            data_io.DataError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"build-index: {len(index)} videos -> {out_file}")


@main.group()
def retrieve() -> None:
    """Retrieval over an index: t2v, v2v, or v2t."""


@retrieve.command("t2v")
@click.option("--index", "index_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--verbs", required=True, help="comma-separated lemmas; hyphens for spaces")
@click.option("--mode", type=click.Choice(["min", "mean"]), default="min", show_default=True)
@click.option("--limit", default=10, show_default=True, help="0 = all")
def retrieve_t2v(index_file, vocab_file, verbs, mode, limit):
    """Rank videos for a verb-set query."""
    try:
        vocab = load_vocabulary(_path(vocab_file))
        index = retrieval.load_index(_path(index_file), vocab.fingerprint())
        query = {_cli_lemma(v) for v in verbs.split(",") if v.strip()}
        result = retrieval.text_to_video(query, index, vocab, mode=mode)
    except (retrieval.RetrievalError, model.ModelError, ValueError, OSError) as exc:
        _fail(str(exc))
    shown = result.items if limit == 0 else result.items[:limit]
    click.echo(f"t2v: query {sorted(query)} over {len(index)} videos")
    for rank, (vid, score) in enumerate(shown, 1):
        click.echo(f"{rank}\t{vid}\t{score:.6f}")


@retrieve.command("v2v")
@click.option("--index", "index_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--video-id", required=True)
@click.option("--cross-dataset", is_flag=True)
@click.option("--limit", default=10, show_default=True, help="0 = all")
def retrieve_v2v(index_file, vocab_file, video_id, cross_dataset, limit):
    """Rank other videos by verb-space similarity."""
    try:
        vocab = load_vocabulary(_path(vocab_file))
        index = retrieval.load_index(_path(index_file), vocab.fingerprint())
        result = retrieval.video_to_video(video_id, index, cross_dataset)
    except retrieval.UnknownVideo as exc:
        _fail(f"unknown video id {exc.args[0]!r}")
    except (retrieval.RetrievalError, model.ModelError, OSError) as exc:
        _fail(str(exc))
    shown = result.items if limit == 0 else result.items[:limit]
    click.echo(f"v2v: query {video_id} (cross_dataset={cross_dataset})")
    for rank, (vid, score) in enumerate(shown, 1):
        click.echo(f"{rank}\t{vid}\t{score:.6f}")


@retrieve.command("v2t")
@click.option("--index", "index_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--video-id", required=True)
@click.option("--limit", default=10, show_default=True, help="0 = all")
def retrieve_v2t(index_file, vocab_file, video_id, limit):
    """Rank all verbs for one video's indexed scores."""
    try:
        vocab = load_vocabulary(_path(vocab_file))
        index = retrieval.load_index(_path(index_file), vocab.fingerprint())
        item = index.get(video_id)
        result = retrieval.video_to_text(item.scores, vocab)
    except retrieval.UnknownVideo as exc:
        _fail(f"unknown video id {exc.args[0]!r}")
    except (retrieval.RetrievalError, model.ModelError, OSError) as exc:
        _fail(str(exc))
    shown = result.items if limit == 0 else result.items[:limit]
    click.echo(f"v2t: video {video_id}")
    for rank, (lemma, score) in enumerate(shown, 1):
        click.echo(f"{rank}\t{lemma}\t{score:.6f}")


@main.command("export-scores")
@click.option("--index", "index_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--out", "out_file", required=True)
def export_scores(index_file, vocab_file, out_file):
    """Write the per-video score table for external plotting."""
    try:
        vocab = load_vocabulary(_path(vocab_file))
        index = retrieval.load_index(_path(index_file), vocab.fingerprint())
        retrieval.export_scores_csv(index, _path(out_file), vocab)
    except (retrieval.RetrievalError, model.ModelError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"export-scores: {len(index)} rows x {index.width} verbs -> {out_file}")


@main.command()
@click.option("--verbs", "verb_count", default=20, show_default=True)
@click.option("--videos", "video_count", default=200, show_default=True)
@click.option("--noise", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--videos-per-action", default=20, show_default=True)
@click.option("--dataset-id", default="SYNTH", show_default=True)
@click.option("--vocab", "vocab_file", default=None,
              help="use an existing vocabulary instead of a synthetic one")
@click.option("--out-dir", required=True)
def synth(verb_count, video_count, noise, seed, videos_per_action, dataset_id,
          vocab_file, out_dir):
    """Generate a synthetic corpus (vocab, manifest, annotations, features)."""
    try:
        vocab = load_vocabulary(_path(vocab_file)) if vocab_file else None
        corpus = data_io.synthesize(
            verb_count=verb_count,
            video_count=video_count,
            noise=noise,
            seed=seed,
            vocab=vocab,
            dataset_id=dataset_id,
            videos_per_action=videos_per_action,
        )
        out = _path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        from .vocab import save_vocabulary

        save_vocabulary(corpus.vocab, out / "vocab.csv")
        data_io.save_manifest_records(corpus.records, out / "manifest.csv")
        data_io.save_features_text(
            {f.video_id: f.values for f in corpus.features}, out / "features.csv"
        )
        with (out / "annotations.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for action_id, aset in corpus.annotation_sets.items():
                for a_num, selection in enumerate(aset.annotator_selections):
                    lemmas = ";".join(corpus.vocab.verbs[j] for j in sorted(selection))
                    writer.writerow([action_id, f"annotator{a_num:03d}", lemmas])
    except (data_io.DataError, OSError) as exc:
        _fail(str(exc))
    click.echo(
        f"synth: {video_count} videos / {len(corpus.annotation_sets)} actions "
        f"/ {len(corpus.vocab)} verbs -> {out_dir}"
    )


@main.command()
@click.option("--index", "index_file", required=True)
@click.option("--vocab", "vocab_file", required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--cors", default="", help="comma-separated CORS origins")
def serve(index_file, vocab_file, host, port, cors):
    """Start the read-only retrieval service."""
    from .service import ServiceConfig, create_app

    cfg = ServiceConfig(
        host=host,
        port=port,
        index_path=_path(index_file),
        vocab_path=_path(vocab_file),
        cors_origins=tuple(o.strip() for o in cors.split(",") if o.strip()),
    )
    try:
        app = create_app(cfg)
    except (model.FingerprintMismatch, retrieval.RetrievalError, OSError) as exc:
        _fail(str(exc))
    import uvicorn

    click.echo(f"serve: http://{host}:{port}/v1 (index {index_file})")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
