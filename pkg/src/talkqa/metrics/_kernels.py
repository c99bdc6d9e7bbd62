"""Kernel selection: compiled extension when built, numpy fallback otherwise.

Set ``TALKQA_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
by tests that must cover both paths).
"""

import os

from talkqa.metrics import _kernels_py

if os.environ.get("TALKQA_PURE_PYTHON") == "1":
    _impl = _kernels_py
    KERNEL_BACKEND = "python"
else:
    try:
        from talkqa import _native as _impl

        KERNEL_BACKEND = "native"
    except ImportError:
        _impl = _kernels_py
        KERNEL_BACKEND = "python"


def average_ranks(values):
    return _impl.average_ranks(values)


def kendall_counts(x, y):
    return _impl.kendall_counts(x, y)
