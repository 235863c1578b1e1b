"""Persistent instruction -> descriptor cache.

One JSON object per file with sorted keys, written atomically via a
temp-file rename so concurrent readers never observe a torn store.
Writes follow a single-writer contract.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Optional

from tagflow.errors import IoFailure


class InstructionCache:
    def __init__(self, path):
        self.path = os.fspath(path)
        self._store: dict[str, str] = {}
        if os.path.exists(self.path):
            try:
                with open(self.path, "r", encoding="utf-8") as fh:
                    self._store = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise IoFailure(f"cannot read instruction cache {self.path}: {exc}") from exc

    def get(self, key: str) -> Optional[str]:
        return self._store.get(key)

    def put(self, key: str, descriptor: str) -> None:
        self._store[key] = descriptor
        self._flush()

    def _flush(self) -> None:
        directory = os.path.dirname(self.path) or "."
        try:
            fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self._store, fh, sort_keys=True, indent=0)
            os.replace(tmp, self.path)
        except OSError as exc:
            raise IoFailure(f"cannot write instruction cache {self.path}: {exc}") from exc

    def __len__(self) -> int:
        return len(self._store)
