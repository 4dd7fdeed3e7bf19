"""Runtime knobs.

``HANDLE_FORGE_THREADS`` caps the library's grid-evaluation parallelism;
the default (1) keeps everything sequential.  Evaluation is pure, so any
cap is safe.
"""

from __future__ import annotations

import os

__all__ = ["thread_cap"]


def thread_cap() -> int:
    raw = os.environ.get("HANDLE_FORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
