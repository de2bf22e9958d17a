"""Scratch sigma calibration for the modes=2 world (not shipped)."""

import numpy as np

from phonemap.clustering import SegmentKMeans, purity
from phonemap.synth import gen_corpus, gen_world

for sigma in (0.3, 0.45, 0.6, 0.8):
    purities = []
    for seed in range(5):
        world = gen_world(seed=seed, l=10, modes=2, d=8, sigma=sigma, min_proto_gap=2.0)
        corpus = gen_corpus(world, n_utts=60, len_range=(12, 24), seed=seed)
        emb = np.concatenate(corpus.embeddings)
        labels = np.concatenate(corpus.labels)
        km = SegmentKMeans(n_clusters=20, seed=seed).fit(emb)
        purities.append(purity(km.labels_, labels))
    med = float(np.median(purities))
    print(f"sigma={sigma}: purities={[round(p, 3) for p in purities]} median={med:.3f}")
