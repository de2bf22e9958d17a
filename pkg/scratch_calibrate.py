"""Scratch calibration of GAN training speed and convergence (not shipped)."""

import time

import numpy as np

from phonemap.clustering import SegmentKMeans, purity
from phonemap.mapping import GanConfig, decode, train
from phonemap.synth import gen_corpus, gen_text, gen_world, oracle_best_map


def run(seed, mode, k, l, sigma, modes, unrelated=False, **overrides):
    world = gen_world(seed=seed, l=l, modes=modes, d=8, sigma=sigma, min_proto_gap=2.0)
    corpus = gen_corpus(world, n_utts=60, len_range=(12, 24), seed=seed)
    emb = np.concatenate(corpus.embeddings)
    labels = np.concatenate(corpus.labels)

    km = SegmentKMeans(n_clusters=k, seed=seed).fit(emb)
    c_seqs = []
    pos = 0
    for e in corpus.embeddings:
        c_seqs.append(km.labels_[pos : pos + len(e)])
        pos += len(e)
    pur = purity(km.labels_, labels)

    if unrelated:
        text_seqs = [np.array([int(w[1:]) for w in s.split()]) for s in
                     gen_text(world, 60, (12, 24), seed=seed + 999)]
    else:
        text_seqs = corpus.labels

    cfg = GanConfig(k=k, l=l, mode=mode, seed=seed, **overrides)
    t0 = time.time()
    table, log = train(c_seqs, text_seqs, cfg, probe_labels=labels)
    dt = time.time() - t0

    flat = np.concatenate(c_seqs)
    preds = decode(flat, table)
    acc = float((preds == labels).mean())
    _, oracle = oracle_best_map(flat, labels)
    return dict(purity=pur, oracle=oracle, acc=acc, iters=log[-1].iteration, secs=dt)


if __name__ == "__main__":
    print("== noiseless L=10 K=10 matched, gumbel ==")
    for seed in range(5):
        r = run(seed, "gumbel", k=10, l=10, sigma=0.0, modes=1,
                batch=32, seq_len=16, channels=4, iterations=2000,
                min_iterations=300, probe_every=25, patience=8)
        print(f"seed {seed}: {r}")
