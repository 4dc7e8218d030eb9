"""LSTM recurrence kernels: compiled extension with a numpy fallback.

The Cython extension is used when it was built and the environment
variable VOICEID_FORCE_NUMPY is not set; otherwise the pure-numpy twin
takes over. Both expose the same two functions and the same numerics up
to floating-point library differences.
"""

import os

from . import _lstm_np

if os.environ.get("VOICEID_FORCE_NUMPY"):
    _impl = _lstm_np
    BACKEND = "numpy"
else:
    try:
        from . import _lstm_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _lstm_np
        BACKEND = "numpy"

lstm_sequence_forward = _impl.lstm_sequence_forward
lstm_sequence_backward = _impl.lstm_sequence_backward

__all__ = ["lstm_sequence_forward", "lstm_sequence_backward", "BACKEND"]
