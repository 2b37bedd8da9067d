"""Active and incremental learning toolkit.

Synthetic detection data, a miniature grid detector with incremental
updates, selection metrics for pool-based active learning, a Gaussian
process backend with output-change query strategies, and an annotation
service for propose-and-confirm labeling.
"""

__version__ = "0.1.0"
