"""Stage cache: resume a pipeline run by skipping stages whose effective
configuration has not changed.

One entry per stage: a small JSON meta file (stage, digest, created_at)
next to an opaque payload file. Writers go through a temp file and an
atomic rename, so an interrupted put leaves the previous entry intact.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageCacheEntry:
    stage: str
    digest: str
    payload_path: Path
    created_at: float


class StageCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _meta_path(self, stage: str) -> Path:
        return self.root / f"{stage}.meta.json"

    def _payload_path(self, stage: str) -> Path:
        return self.root / f"{stage}.payload"

    def entry(self, stage: str) -> Optional[StageCacheEntry]:
        meta_path = self._meta_path(stage)
        if not meta_path.exists():
            return None
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("stage cache: unreadable meta for %s (%s)", stage, exc)
            return None
        payload = self._payload_path(stage)
        if not payload.exists():
            return None
        return StageCacheEntry(stage, meta["digest"], payload, meta["created_at"])

    def has(self, stage: str, digest: str) -> bool:
        entry = self.entry(stage)
        return entry is not None and entry.digest == digest

    def get(self, stage: str, digest: str) -> Optional[bytes]:
        """Return the payload iff the stored digest matches, else a miss."""
        entry = self.entry(stage)
        if entry is None or entry.digest != digest:
            return None
        try:
            return entry.payload_path.read_bytes()
        except OSError as exc:
            log.warning("stage cache: corrupt payload for %s (%s)", stage, exc)
            return None

    def put(self, stage: str, digest: str, payload: bytes):
        """Atomically replace the entry for ``stage``.

        Payload lands first, meta last: a crash between the two renames
        leaves a stale meta pointing at a newer payload, which the next
        get() treats as a digest mismatch at worst, never a torn read.
        """
        payload_tmp = self.root / f".{stage}.payload.tmp.{os.getpid()}"
        meta_tmp = self.root / f".{stage}.meta.tmp.{os.getpid()}"
        payload_tmp.write_bytes(payload)
        os.replace(payload_tmp, self._payload_path(stage))
        meta_tmp.write_text(
            json.dumps({"stage": stage, "digest": digest, "created_at": time.time()}),
            encoding="utf-8",
        )
        os.replace(meta_tmp, self._meta_path(stage))

    def get_json(self, stage: str, digest: str):
        raw = self.get(stage, digest)
        if raw is None:
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            log.warning("stage cache: undecodable payload for %s (%s)", stage, exc)
            return None

    def put_json(self, stage: str, digest: str, payload):
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        self.put(stage, digest, blob.encode("utf-8"))

    def clear(self):
        for path in self.root.glob("*.meta.json"):
            path.unlink()
        for path in self.root.glob("*.payload"):
            path.unlink()
