# Calibration harness, not shipped.  Criterion 6 grid: more data, both modes.
import sys
import time

import numpy as np

from phonemap.clustering import assign, kmeans_fit, purity
from phonemap.mapping import GanConfig, decode, train
from phonemap.synth import gen_corpus, gen_text, gen_world


def run(tag, sigma, n_utts, n_text, cfg_kw):
    accs = {"softmax": [], "gumbel": []}
    for seed in range(5):
        world = gen_world(seed=seed, l=10, modes=2, d=8, sigma=sigma, min_proto_gap=2.0)
        corpus = gen_corpus(world, n_utts=n_utts, len_range=(12, 24), seed=seed)
        flat = np.concatenate([e for e in corpus.embeddings])
        labels_flat = np.concatenate([la for la in corpus.labels])
        cb = kmeans_fit(flat, k=20, seed=seed)
        seqs = []
        pos = 0
        for e in corpus.embeddings:
            seqs.append(assign(e, cb))
            pos += len(e)
        idx_flat = np.concatenate(seqs)
        pur = purity(idx_flat, labels_flat)
        text = gen_text(world, n_sentences=n_text, len_range=(12, 24), seed=seed + 1000)
        name_to_id = {n: i for i, n in enumerate(world.names)}
        phon = [np.array([name_to_id[w] for w in s.split()]) for s in text]
        for mode in ("softmax", "gumbel"):
            cfg = GanConfig(k=20, l=10, mode=mode, seed=seed, **cfg_kw)
            t0 = time.time()
            table, log = train(seqs, phon, cfg, probe_labels=labels_flat)
            secs = time.time() - t0
            decoded = np.concatenate([decode(s, table) for s in seqs])
            acc = float((decoded == labels_flat).mean())
            accs[mode].append(acc)
            print(
                f"{tag} {mode} seed {seed}: purity={pur:.3f} acc={acc:.3f} "
                f"iters={log[-1].iteration} secs={secs:.0f}",
                flush=True,
            )
    for mode in ("softmax", "gumbel"):
        a = accs[mode]
        print(f"{tag} {mode}: median={np.median(a):.3f} all={[round(x,3) for x in a]}", flush=True)


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "G2"
    base = dict(
        batch=64,
        seq_len=16,
        channels=4,
        iterations=4000,
        min_iterations=500,
        probe_every=25,
        patience=10,
    )
    if which == "G2":
        run("G2", sigma=0.4, n_utts=200, n_text=400, cfg_kw=base)
    elif which == "G3":
        kw = dict(base, lr_g=0.005, iterations=6000)
        run("G3", sigma=0.4, n_utts=200, n_text=400, cfg_kw=kw)
    elif which == "G5":
        kw = dict(base, seq_len=24, channels=8)
        run("G5", sigma=0.5, n_utts=200, n_text=400, cfg_kw=kw)
