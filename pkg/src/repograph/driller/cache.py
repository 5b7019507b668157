"""Per-commit bundle cache on disk: ``<cache_dir>/<fingerprint>/<sha>``."""
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Optional

from ..model import CommitBundle

log = logging.getLogger(__name__)


def bundle_json(bundle: CommitBundle) -> str:
    return json.dumps(bundle.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class BundleCache:
    """A disabled cache (``cache_dir=None``) turns every call into a no-op."""

    def __init__(self, cache_dir, fingerprint: str):
        self.root = Path(cache_dir) / fingerprint if cache_dir else None
        self.hits = 0
        self.misses = 0

    @property
    def enabled(self) -> bool:
        return self.root is not None

    def get(self, sha: str) -> Optional[CommitBundle]:
        if self.root is None:
            return None
        entry = self.root / sha
        try:
            raw = entry.read_text(encoding="utf-8")
        except FileNotFoundError:
            self.misses += 1
            return None
        try:
            bundle = CommitBundle.from_dict(json.loads(raw))
            if bundle.commit.sha != sha:
                raise ValueError("sha mismatch")
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("evicting corrupt cache entry %s: %s", entry, exc)
            entry.unlink(missing_ok=True)
            self.misses += 1
            return None
        self.hits += 1
        return bundle

    def put(self, sha: str, bundle: CommitBundle) -> None:
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{sha}.")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(bundle_json(bundle))
        os.replace(tmp, self.root / sha)
