"""On-disk store for descent histograms.

Histogram runs can be expensive, so completed (and partially completed)
counts can be persisted under a cache directory.  Files are plain text,
written atomically via a temp file and `os.replace`.  A partial file
records how many logical streams have been merged so far; a later run
with the same parameters resumes from that point.

The cache directory comes from the `RIFFMIX_CACHE_DIR` environment
variable when not given explicitly.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

FORMAT_TAG = "riffmix histogram v1"
ENV_VAR = "RIFFMIX_CACHE_DIR"


def default_cache_dir() -> Path | None:
    val = os.environ.get(ENV_VAR)
    return Path(val) if val else None


@dataclass(frozen=True)
class HistogramKey:
    """Identity of a histogram run; all fields must match to reuse counts."""

    source_text: str
    target_text: str
    samples: int
    seed: int
    streams: int

    def digest(self) -> str:
        raw = "|".join(
            (
                self.source_text,
                self.target_text,
                str(self.samples),
                str(self.seed),
                str(self.streams),
            )
        )
        return hashlib.sha256(raw.encode()).hexdigest()[:24]

    def path(self, cache_dir: Path) -> Path:
        return Path(cache_dir) / f"hist_{self.digest()}.txt"


def store(
    cache_dir: Path,
    key: HistogramKey,
    counts: list[int],
    completed: int,
) -> None:
    """Atomically write `counts` merged over the first `completed` streams."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        FORMAT_TAG,
        f"source={key.source_text}",
        f"target={key.target_text}",
        f"samples={key.samples}",
        f"seed={key.seed}",
        f"streams={key.streams}",
        f"completed={completed}",
        "counts=" + ",".join(str(c) for c in counts),
        "",
    ]
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=".hist_tmp_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines))
        os.replace(tmp, key.path(cache_dir))
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def load(cache_dir: Path, key: HistogramKey) -> tuple[tuple[int, ...], int] | None:
    """Counts and completed-stream count for `key`, or None.

    Returns None when the file is missing, malformed, or describes a
    different run.
    """
    path = key.path(Path(cache_dir))
    try:
        text = path.read_text()
    except OSError:
        return None
    lines = text.splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        return None
    fields: dict[str, str] = {}
    for line in lines[1:]:
        if not line:
            continue
        if "=" not in line:
            return None
        k, _, v = line.partition("=")
        fields[k] = v
    expect = {
        "source": key.source_text,
        "target": key.target_text,
        "samples": str(key.samples),
        "seed": str(key.seed),
        "streams": str(key.streams),
    }
    for k, v in expect.items():
        if fields.get(k) != v:
            return None
    try:
        completed = int(fields["completed"])
        counts = tuple(int(c) for c in fields["counts"].split(","))
    except (KeyError, ValueError):
        return None
    if not 0 <= completed <= key.streams:
        return None
    return counts, completed
