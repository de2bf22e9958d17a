"""Unsupervised phoneme recognition from segmented audio features.

Pipeline stages: sequence-autoencoder embeddings of variable-length
segments, k-means quantization of the embeddings, and an adversarially
trained lookup table mapping cluster indices to phoneme identities.
"""

__version__ = "0.1.0"
