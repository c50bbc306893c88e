"""Weakly-supervised best-view selection for multi-view instructional video.

Pipeline: ingest multi-view clip manifests, produce best-view pseudo-labels
by scoring per-view captions against ground-truth narrations, train a small
view selector with an auxiliary relative-pose head, and evaluate selections
with caption metrics, baselines, significance tests, and a pairwise human
preference study service.
"""

__version__ = "0.1.0"
