"""Backend dispatch for the hot sequence kernels.

Set SEQTAG_BACKEND=numpy to force the pure-numpy path (useful where numba is
unavailable or for benchmarking); SEQTAG_BACKEND=numba forces the compiled
path. Default: numba if it imports, else numpy.
"""

import os

from ..errors import ConfigError

_requested = os.environ.get("SEQTAG_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ConfigError(f"SEQTAG_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested in ("auto", "numba"):
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise ConfigError("SEQTAG_BACKEND=numba but numba is not importable")
        from . import numpy_backend as _impl

        BACKEND = "numpy"
else:
    from . import numpy_backend as _impl

    BACKEND = "numpy"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
crf_forward = _impl.crf_forward
crf_forward_backward = _impl.crf_forward_backward
viterbi = _impl.viterbi


def backend_name() -> str:
    return BACKEND
