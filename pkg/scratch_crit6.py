"""Scratch criterion-6 calibration: unrelated text, both modes (not shipped)."""

import sys
import time

import numpy as np

from phonemap.clustering import SegmentKMeans, purity
from phonemap.mapping import GanConfig, decode, train
from phonemap.synth import gen_corpus, gen_text, gen_world

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 3000

for mode in ("softmax", "gumbel"):
    accs = []
    for seed in range(5):
        world = gen_world(seed=seed, l=10, modes=2, d=8, sigma=0.5, min_proto_gap=2.0)
        corpus = gen_corpus(world, n_utts=80, len_range=(12, 24), seed=seed)
        emb = np.concatenate(corpus.embeddings)
        labels = np.concatenate(corpus.labels)
        km = SegmentKMeans(n_clusters=20, seed=seed).fit(emb)
        pur = purity(km.labels_, labels)

        c_seqs = []
        pos = 0
        for e in corpus.embeddings:
            c_seqs.append(km.labels_[pos : pos + len(e)])
            pos += len(e)

        text = gen_text(world, 80, (12, 24), seed=seed + 1000)
        text_seqs = [np.array([int(w[1:]) for w in s.split()]) for s in text]

        cfg = GanConfig(
            k=20, l=10, mode=mode, seed=seed,
            batch=32, seq_len=16, channels=4,
            iterations=iters, min_iterations=300, probe_every=25, patience=8,
        )
        t0 = time.time()
        table, log = train(c_seqs, text_seqs, cfg, probe_labels=labels)
        dt = time.time() - t0
        acc = float((decode(np.concatenate(c_seqs), table) == labels).mean())
        accs.append(acc)
        print(f"{mode} seed {seed}: purity={pur:.3f} acc={acc:.3f} "
              f"iters={log[-1].iteration} secs={dt:.0f}", flush=True)
    print(f"{mode}: median={sorted(accs)[2]:.3f} all={[round(a, 3) for a in accs]}", flush=True)
