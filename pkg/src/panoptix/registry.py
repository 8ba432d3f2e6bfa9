"""Bundle registry: ``root/<bundle_id>/`` holds one TRA or SRA checkpoint."""
from __future__ import annotations

import os
from pathlib import Path

from .core.checkpoint import CheckpointError
from .sra import META_FILE as SRA_META
from .sra import SraBundle
from .tra import META_FILE as TRA_META
from .tra import TraBundle

ENV_VAR = "PANOPTIX_REGISTRY"


class Registry:
    def __init__(self, root=None, bundles: dict | None = None):
        if root is None and bundles is None:
            root = os.environ.get(ENV_VAR)
        self.root = Path(root) if root is not None else None
        self._cache: dict = dict(bundles or {})

    def _load(self, bundle_id: str):
        if bundle_id in self._cache:
            return self._cache[bundle_id]
        if self.root is None:
            raise KeyError(bundle_id)
        d = self.root / bundle_id
        if (d / TRA_META).is_file():
            bundle = TraBundle.load(d)
        elif (d / SRA_META).is_file():
            bundle = SraBundle.load(d)
        elif d.is_dir():
            raise CheckpointError(f"bundle {bundle_id!r}: {d} has no tra/sra metadata")
        else:
            raise KeyError(bundle_id)
        self._cache[bundle_id] = bundle
        return bundle

    def tra(self, bundle_id: str) -> TraBundle:
        b = self._load(bundle_id)
        if not isinstance(b, TraBundle):
            raise KeyError(f"{bundle_id} is not a TRA bundle")
        return b

    def sra(self, bundle_id: str) -> SraBundle:
        b = self._load(bundle_id)
        if not isinstance(b, SraBundle):
            raise KeyError(f"{bundle_id} is not an SRA bundle")
        return b

    def ids(self) -> list[str]:
        found = set(self._cache)
        if self.root is not None and self.root.is_dir():
            found |= {p.name for p in self.root.iterdir()
                      if (p / TRA_META).is_file() or (p / SRA_META).is_file()}
        return sorted(found)
