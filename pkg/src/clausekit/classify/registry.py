"""Checkpoint name resolution.

Models are referenced by registry names everywhere; whether a name maps to a
local directory or a remote hub id is a deployment concern kept behind this
one resolver. The environment variable ``CLAUSEKIT_CHECKPOINT_MAP`` may point
at a JSON file of {name: path} aliases loaded into the default registry.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


class CheckpointRegistry:
    def __init__(self, aliases: dict[str, str] | None = None):
        self._aliases = dict(aliases or {})

    def register(self, name: str, path: str | Path) -> None:
        self._aliases[name] = str(path)

    def resolve(self, name: str) -> str:
        """Map a checkpoint name to a local path when registered, otherwise
        pass it through (a hub id or a literal path)."""
        if name in self._aliases:
            return self._aliases[name]
        return name

    def is_local(self, name: str) -> bool:
        return Path(self.resolve(name)).exists()


def _load_default() -> CheckpointRegistry:
    registry = CheckpointRegistry()
    map_path = os.environ.get("CLAUSEKIT_CHECKPOINT_MAP")
    if map_path and Path(map_path).is_file():
        with open(map_path, encoding="utf-8") as fh:
            for name, path in json.load(fh).items():
                registry.register(str(name), str(path))
    return registry


DEFAULT_REGISTRY = _load_default()
