"""Worker-count policy: PONQ_THREADS caps parallelism, 0 or unset means auto."""

from __future__ import annotations

import os


def worker_count() -> int:
    """Value suitable for scipy's `workers=` arguments (-1 = all cores)."""
    raw = os.environ.get("PONQ_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return -1 if n <= 0 else n
