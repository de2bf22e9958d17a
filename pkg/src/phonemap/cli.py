"""Command-line pipeline: one subcommand per stage, files between stages.

Every subcommand writes its results into ``--out`` together with a
``config.resolved`` snapshot of the effective configuration and a
``manifest.json`` recording the SHA-256 of each input file.  Before
computing, a stage re-checks the manifests found next to its inputs, so
outputs regenerated upstream invalidate stale downstream files instead
of silently mixing runs.  Progress goes to standard error; results go to
files only.  Failures print a single JSON line to standard error and
exit nonzero.

All randomness flows from the root seed (``seed`` in the config or
``--seed``), expanded per stage with a fixed label via
``phonemap.nn.rng.derive_seed``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .autoencoder import SequenceAutoencoder, write_sae
from .clustering import (
    ClusterIndexSequence,
    SegmentKMeans,
    read_cluster_sequences,
    read_codebook,
    write_cluster_sequences,
    write_codebook,
)
from .config import PipelineConfig, apply_overrides, format_config, read_config
from .features import (
    cmvn,
    read_embeddings,
    read_features,
    segment_utterance,
    write_embeddings,
    write_features,
)
from .mapping import (
    GanConfig,
    decode,
    generate,
    read_mapping,
    train,
    write_decoded,
    write_mapping,
    write_training_log,
)
from .metrics import ensemble_vote, evaluate, write_report
from .nn.rng import derive_seed
from .sweep import sweep_clusters, write_sweep
from .synth import gen_corpus, gen_text, gen_world
from .text import Lexicon, load_lexicon, text_to_phonemes, write_lexicon

__all__ = ["main"]


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _verify_upstream(inputs: list[Path]) -> None:
    """Abort if any input's producing run has itself gone stale.

    An input sitting next to a ``manifest.json`` was produced by a
    pipeline stage; if the files that stage consumed have changed since,
    the input no longer reflects them.
    """
    seen: set[Path] = set()
    for path in inputs:
        manifest_path = path.resolve().parent / "manifest.json"
        if manifest_path in seen or not manifest_path.exists():
            continue
        seen.add(manifest_path)
        manifest = json.loads(manifest_path.read_text())
        for recorded, want in manifest.get("inputs", {}).items():
            upstream = Path(recorded)
            if not upstream.exists():
                raise ValueError(
                    f"stale input: {path} was built from {recorded}, "
                    "which no longer exists"
                )
            if _sha256(upstream) != want:
                raise ValueError(
                    f"stale input: {path} was built from {recorded}, "
                    "whose content has changed; regenerate the intermediate stage"
                )


def _finish_run(out: Path, config: PipelineConfig, inputs: list[Path]) -> None:
    (out / "config.resolved").write_text(format_config(config))
    manifest = {"inputs": {str(p): _sha256(p) for p in sorted(set(inputs))}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config(args) -> PipelineConfig:
    config = read_config(args.config) if args.config else PipelineConfig()
    if args.set:
        apply_overrides(config, args.set)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _existing(path_str: str, flag: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ValueError(f"{flag}: no such file: {path}")
    return path


def _config_inputs(args) -> list[Path]:
    return [_existing(args.config, "--config")] if args.config else []


def _identity_lexicon(names: list[str]) -> Lexicon:
    return Lexicon(entries={n: (i,) for i, n in enumerate(names)}, phoneme_names=names)


def _read_reference_labels(path: Path) -> dict[str, np.ndarray]:
    """Per-utterance labels from an embeddings or features JSON-lines file."""
    first = ""
    with path.open() as fh:
        for line in fh:
            if line.strip():
                first = line
                break
    if '"frames"' in first:
        utts = read_features(path)
        if any(u.labels is None for u in utts):
            raise ValueError(f"{path}: reference labels missing from some utterances")
        return {u.id: u.labels for u in utts}
    ids, _, labels = read_embeddings(path)
    if labels is None:
        raise ValueError(f"{path}: reference labels missing from some utterances")
    return dict(zip(ids, labels))


def _text_corpus(text_path: Path, lexicon_path: Path) -> tuple[list[np.ndarray], int, list[str]]:
    lexicon = load_lexicon(lexicon_path)
    sentences = text_path.read_text().splitlines()
    seqs, report = text_to_phonemes(sentences, lexicon)
    if report.n_skipped:
        _log(
            f"skipped {report.n_skipped} of {report.n_sentences} sentences "
            f"({len(report.unknown_words)} unknown words)"
        )
    return seqs, lexicon.l, lexicon.phoneme_names


def _gan_config(config: PipelineConfig, k: int, l: int, seed: int) -> GanConfig:
    g = config.ganmap
    return GanConfig(
        k=k,
        l=l,
        mode=g.mode,
        inv_temp=g.inv_temp,
        lr_g=g.lr_g,
        lr_d=g.lr_d,
        d_steps_per_g=g.d_steps_per_g,
        gp_lambda=g.gp_lambda,
        batch=g.batch,
        seq_len=g.seq_len,
        iterations=g.iterations,
        channels=g.channels,
        leak=g.leak,
        e_init_scale=g.e_init_scale,
        early_stop=g.early_stop,
        probe_every=g.probe_every,
        patience=g.patience,
        min_iterations=g.min_iterations,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    sy = config.synth
    world = gen_world(
        seed=config.seed,
        l=sy.l,
        modes=sy.modes,
        d=sy.d,
        sigma=sy.sigma,
        min_proto_gap=sy.min_proto_gap,
    )
    len_range = (sy.len_lo, sy.len_hi)
    splits = {
        "train": gen_corpus(
            world, sy.n_utts, len_range,
            seed=derive_seed(config.seed, "synth-train"),
            emit=sy.emit, frames_per_segment=(sy.frames_lo, sy.frames_hi),
        ),
        "test": gen_corpus(
            world, sy.n_test_utts, len_range,
            seed=derive_seed(config.seed, "synth-test"),
            emit=sy.emit, frames_per_segment=(sy.frames_lo, sy.frames_hi),
        ),
    }
    for split, corpus in splits.items():
        if sy.emit == "embeddings":
            ids = [f"{split}-{i:05d}" for i in range(len(corpus.labels))]
            write_embeddings(
                out / f"{split}_embeddings.jsonl", ids, corpus.embeddings, corpus.labels
            )
        else:
            for utt in corpus.features:
                utt.id = f"{split}-{utt.id}"
            write_features(out / f"{split}_features.jsonl", corpus.features)
    (out / "matched_text.txt").write_text("\n".join(splits["train"].sentences) + "\n")
    unrelated = gen_text(
        world, sy.n_text, len_range, seed=derive_seed(config.seed, "synth-text")
    )
    (out / "unrelated_text.txt").write_text("\n".join(unrelated) + "\n")
    write_lexicon(out / "lexicon.txt", _identity_lexicon(world.names))
    _log(
        f"synth: wrote {sy.n_utts} train / {sy.n_test_utts} test utterances "
        f"({sy.emit}), {sy.n_text} unrelated sentences"
    )
    _finish_run(out, config, _config_inputs(args))


def cmd_embed(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    features_path = _existing(args.features, "--features")
    _verify_upstream([features_path])
    utts = read_features(features_path)
    if not utts:
        raise ValueError(f"{features_path}: no utterances")
    normed = [cmvn(u) for u in utts]
    per_utt_segments = [segment_utterance(u) for u in normed]
    flat_segments = [seg for segs in per_utt_segments for seg in segs]
    a2v = config.audio2vec
    model = SequenceAutoencoder(
        hidden_size=a2v.hidden_size,
        epochs=a2v.epochs,
        lr=a2v.lr,
        batch_size=a2v.batch_size,
        reverse_targets=a2v.reverse_targets,
        seed=derive_seed(config.seed, "audio2vec"),
    )
    model.fit(flat_segments)
    _log(
        f"embed: trained on {len(flat_segments)} segments, "
        f"mse {model.loss_curve_[0]:.6f} -> {model.loss_curve_[-1]:.6f}"
    )
    embedded = model.transform(flat_segments)
    counts = [len(segs) for segs in per_utt_segments]
    offsets = np.concatenate([[0], np.cumsum(counts)])
    per_utt = [embedded[offsets[i] : offsets[i + 1]] for i in range(len(utts))]
    labels = None
    if all(u.labels is not None for u in utts):
        labels = [u.labels for u in utts]
    write_sae(out / "sae.json", model)
    write_embeddings(out / "embeddings.jsonl", [u.id for u in utts], per_utt, labels)
    _finish_run(out, config, [features_path] + _config_inputs(args))


def cmd_cluster(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    embeddings_path = _existing(args.embeddings, "--embeddings")
    _verify_upstream([embeddings_path])
    ids, embeddings, _ = read_embeddings(embeddings_path)
    flat = np.concatenate(embeddings)
    cl = config.cluster
    est = SegmentKMeans(
        n_clusters=cl.k,
        seed=derive_seed(config.seed, "cluster"),
        max_iter=cl.max_iter,
        tol=cl.tol,
        normalize=cl.normalize,
    ).fit(flat)
    seqs = [
        ClusterIndexSequence(id=utt_id, indices=est.predict(emb))
        for utt_id, emb in zip(ids, embeddings)
    ]
    write_codebook(out / "codebook.json", est.codebook_)
    write_cluster_sequences(out / "clusters.jsonl", seqs)
    _log(
        f"cluster: K={cl.k} over {flat.shape[0]} segments, "
        f"inertia {est.inertia_:.4f} after {est.n_iter_} iterations"
    )
    _finish_run(out, config, [embeddings_path] + _config_inputs(args))


def cmd_train_gan(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    clusters_path = _existing(args.clusters, "--clusters")
    codebook_path = _existing(args.codebook, "--codebook")
    text_path = _existing(args.text, "--text")
    lexicon_path = _existing(args.lexicon, "--lexicon")
    _verify_upstream([clusters_path, codebook_path, text_path, lexicon_path])
    seqs = read_cluster_sequences(clusters_path)
    if not seqs:
        raise ValueError(f"{clusters_path}: no cluster sequences")
    codebook = read_codebook(codebook_path)
    p_seqs, l, names = _text_corpus(text_path, lexicon_path)
    gan = _gan_config(config, codebook.k, l, derive_seed(config.seed, "ganmap"))
    table, log = train([s.indices for s in seqs], p_seqs, gan)
    write_mapping(out / "mapping.json", table, names)
    write_training_log(out / "training_log.csv", log)
    _log(f"train-gan: {gan.mode} mode stopped after {log[-1].iteration} iterations")
    _finish_run(
        out,
        config,
        [clusters_path, codebook_path, text_path, lexicon_path] + _config_inputs(args),
    )


def cmd_decode(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    clusters_path = _existing(args.clusters, "--clusters")
    mapping_path = _existing(args.mapping, "--mapping")
    _verify_upstream([clusters_path, mapping_path])
    seqs = read_cluster_sequences(clusters_path)
    table, _ = read_mapping(mapping_path)
    preds = [decode(s.indices, table) for s in seqs]
    write_decoded(out / "decoded.jsonl", [s.id for s in seqs], preds)
    _log(f"decode: {len(seqs)} utterances")
    _finish_run(out, config, [clusters_path, mapping_path] + _config_inputs(args))


def cmd_eval(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    decoded_path = _existing(args.decoded, "--decoded")
    labels_path = _existing(args.labels_from, "--labels-from")
    mapping_path = _existing(args.mapping, "--mapping")
    _verify_upstream([decoded_path, labels_path, mapping_path])
    ids, preds = read_decoded(decoded_path)
    reference = _read_reference_labels(labels_path)
    _, names = read_mapping(mapping_path)
    refs = []
    for utt_id, pred in zip(ids, preds):
        if utt_id not in reference:
            raise ValueError(f"{labels_path}: no reference labels for utterance {utt_id!r}")
        ref = reference[utt_id]
        if ref.size != pred.size:
            raise ValueError(
                f"utterance {utt_id!r}: {pred.size} predictions vs {ref.size} labels"
            )
        refs.append(ref)
    report = evaluate(np.concatenate(preds), np.concatenate(refs), len(names))
    write_report(out / "report.json", report)
    _log(f"eval: accuracy {report.accuracy:.4f} over {report.n_segments} segments")
    _finish_run(out, config, [decoded_path, labels_path, mapping_path] + _config_inputs(args))


def cmd_sweep(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    train_path = _existing(args.train, "--train")
    test_path = _existing(args.test, "--test")
    text_path = _existing(args.text, "--text")
    lexicon_path = _existing(args.lexicon, "--lexicon")
    _verify_upstream([train_path, test_path, text_path, lexicon_path])
    _, train_embeddings, train_labels = read_embeddings(train_path)
    _, test_embeddings, test_labels = read_embeddings(test_path)
    if train_labels is None or test_labels is None:
        raise ValueError("sweep needs reference labels in both embeddings files")
    p_seqs, l, _ = _text_corpus(text_path, lexicon_path)
    base = _gan_config(config, max(config.sweep.ks), l, config.seed)
    rows = sweep_clusters(
        list(config.sweep.ks),
        train_embeddings,
        train_labels,
        test_embeddings,
        test_labels,
        p_seqs,
        base,
        seed=derive_seed(config.seed, "sweep"),
        jobs=args.jobs,
    )
    write_sweep(out / "sweep.csv", rows)
    _log(f"sweep: {len(rows)} rows over K in {sorted(config.sweep.ks)}")
    _finish_run(
        out, config, [train_path, test_path, text_path, lexicon_path] + _config_inputs(args)
    )


def cmd_ensemble(args) -> None:
    config = _load_config(args)
    out = _out_dir(args)
    clusters_path = _existing(args.clusters, "--clusters")
    labels_path = _existing(args.labels_from, "--labels-from")
    run_dirs = [Path(r) for r in args.runs]
    mapping_paths = []
    for run in run_dirs:
        mapping_path = run / "mapping.json"
        if not mapping_path.is_file():
            raise ValueError(f"--runs: no mapping.json in {run}")
        mapping_paths.append(mapping_path)
    _verify_upstream([clusters_path, labels_path] + mapping_paths)
    if len(run_dirs) != config.eval.ensemble_size:
        _log(
            f"ensemble: voting over {len(run_dirs)} models "
            f"(configured default is {config.eval.ensemble_size})"
        )
    seqs = read_cluster_sequences(clusters_path)
    reference = _read_reference_labels(labels_path)

    names = None
    preds, probs = [], []
    for mapping_path in mapping_paths:
        table, model_names = read_mapping(mapping_path)
        if names is None:
            names = model_names
        elif model_names != names:
            raise ValueError(f"{mapping_path}: phoneme inventory differs between runs")
        preds.append(np.concatenate([decode(s.indices, table) for s in seqs]))
        probs.append(
            np.concatenate(
                [
                    generate(
                        s.indices, table, mode="softmax", inv_temp=config.ganmap.inv_temp
                    ).vectors
                    for s in seqs
                ]
            )
        )
    voted = ensemble_vote(preds, probs)

    refs = []
    cursor = 0
    split_preds = []
    for s in seqs:
        if s.id not in reference:
            raise ValueError(f"{labels_path}: no reference labels for utterance {s.id!r}")
        ref = reference[s.id]
        if ref.size != s.indices.size:
            raise ValueError(
                f"utterance {s.id!r}: {s.indices.size} segments vs {ref.size} labels"
            )
        refs.append(ref)
        split_preds.append(voted[cursor : cursor + s.indices.size])
        cursor += s.indices.size
    report = evaluate(voted, np.concatenate(refs), len(names))
    write_decoded(out / "decoded.jsonl", [s.id for s in seqs], split_preds)
    write_report(out / "report.json", report)
    _log(f"ensemble: {len(preds)} models, voted accuracy {report.accuracy:.4f}")
    _finish_run(
        out, config, [clusters_path, labels_path] + mapping_paths + _config_inputs(args)
    )


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonemap",
        description="Unsupervised cluster-to-phoneme mapping pipeline",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file of section.key=value lines")
    common.add_argument("--seed", type=int, help="root seed overriding the config")
    common.add_argument("--out", required=True, help="output directory for this stage")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers where supported")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="config override, repeatable",
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed", parents=[common], help="train the autoencoder and embed segments")
    p.add_argument("--features", required=True, help="feature JSON-lines file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", parents=[common], help="fit K-means over segment embeddings")
    p.add_argument("--embeddings", required=True, help="embeddings JSON-lines file")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train-gan", parents=[common], help="train the cluster-to-phoneme mapping")
    p.add_argument("--clusters", required=True, help="cluster-sequence JSON-lines file")
    p.add_argument("--codebook", required=True, help="codebook JSON file (fixes K)")
    p.add_argument("--text", required=True, help="text corpus, one sentence per line")
    p.add_argument("--lexicon", required=True, help="lexicon file (word<TAB>phonemes)")
    p.set_defaults(func=cmd_train_gan)

    p = sub.add_parser("decode", parents=[common], help="decode cluster sequences to phonemes")
    p.add_argument("--clusters", required=True, help="cluster-sequence JSON-lines file")
    p.add_argument("--mapping", required=True, help="mapping JSON file")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", parents=[common], help="score decoded output against labels")
    p.add_argument("--decoded", required=True, help="decoded JSON-lines file")
    p.add_argument("--labels-from", required=True, help="embeddings or features file with labels")
    p.add_argument("--mapping", required=True, help="mapping JSON file (fixes inventory size)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="purity/accuracy table across K values")
    p.add_argument("--train", required=True, help="training embeddings JSON-lines file")
    p.add_argument("--test", required=True, help="held-out embeddings JSON-lines file")
    p.add_argument("--text", required=True, help="text corpus, one sentence per line")
    p.add_argument("--lexicon", required=True, help="lexicon file (word<TAB>phonemes)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ensemble", parents=[common], help="majority-vote over trained mappings")
    p.add_argument("--clusters", required=True, help="cluster-sequence JSON-lines file")
    p.add_argument("--labels-from", required=True, help="embeddings or features file with labels")
    p.add_argument("--runs", required=True, nargs="+", help="run directories with mapping.json")
    p.set_defaults(func=cmd_ensemble)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
