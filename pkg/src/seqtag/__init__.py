"""seqtag: sequence labeling under heavy class imbalance.

Bi-LSTM-CRF taggers, a weighted-loss weak-class detector, and a gated
position-wise voting merge, built on a small numpy autodiff core with
numba-accelerated sequence kernels.
"""

__version__ = "0.1.0"
