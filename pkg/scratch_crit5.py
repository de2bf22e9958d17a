"""Scratch criterion-5 calibration: matched modes=2 world (not shipped)."""

import time

import numpy as np

from phonemap.clustering import SegmentKMeans, purity
from phonemap.mapping import GanConfig, decode, train
from phonemap.synth import gen_corpus, gen_world

results = []
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

    cfg = GanConfig(
        k=20, l=10, mode="gumbel", seed=seed,
        batch=32, seq_len=16, channels=4,
        iterations=3000, min_iterations=300, probe_every=25, patience=8,
    )
    t0 = time.time()
    table, log = train(c_seqs, corpus.labels, cfg, probe_labels=labels)
    dt = time.time() - t0
    acc = float((decode(np.concatenate(c_seqs), table) == labels).mean())
    results.append((pur, acc, log[-1].iteration, dt))
    print(f"seed {seed}: purity={pur:.3f} acc={acc:.3f} iters={log[-1].iteration} secs={dt:.0f}")

purs = sorted(r[0] for r in results)
accs = sorted(r[1] for r in results)
print(f"median purity={purs[2]:.3f} median acc={accs[2]:.3f} gap={purs[2]-accs[2]:.3f}")
