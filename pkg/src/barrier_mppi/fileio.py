"""Atomic file writes: temp file in the target directory, rename on success."""

from __future__ import annotations

import os
import tempfile


def atomic_write_text(path: str, text: str):
    """Write text so the destination never holds a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
