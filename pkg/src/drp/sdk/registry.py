"""Registries resolving analyzers and post-processors by id."""

from __future__ import annotations

import re
import threading
from typing import Optional

from ..core.errors import DrpError
from .analyzer import Analyzer, PostProcessor


class UnknownAnalyzer(DrpError):
    def __init__(self, analyzer_id: str):
        super().__init__(f"no analyzer registered under {analyzer_id!r}")
        self.analyzer_id = analyzer_id


class DuplicateId(DrpError):
    pass


class UnknownPostProcessor(DrpError):
    def __init__(self, pp_id: str):
        super().__init__(f"no post-processor registered under {pp_id!r}")
        self.pp_id = pp_id


def _version_key(version: str) -> tuple:
    # dotted numeric segments compare numerically, everything else lexically
    parts = []
    for chunk in re.split(r"[.\-+]", version):
        parts.append((0, int(chunk)) if chunk.isdigit() else (1, chunk))
    return tuple(parts)


class AnalyzerRegistry:
    """id -> version -> analyzer; the highest version is the default."""

    def __init__(self):
        self._lock = threading.RLock()
        self._by_id: dict[str, dict[str, Analyzer]] = {}
        self._order: dict[str, list[str]] = {}

    def register(self, impl: Analyzer) -> Analyzer:
        desc = impl.describe()
        with self._lock:
            versions = self._by_id.setdefault(desc.analyzer_id, {})
            if desc.version in versions:
                raise DuplicateId(
                    f"analyzer {desc.analyzer_id!r} version {desc.version!r} already registered"
                )
            versions[desc.version] = impl
            self._order.setdefault(desc.analyzer_id, []).append(desc.version)
        return impl

    def resolve(self, analyzer_id: str, version: Optional[str] = None) -> Analyzer:
        with self._lock:
            versions = self._by_id.get(analyzer_id)
            if not versions:
                raise UnknownAnalyzer(analyzer_id)
            if version is not None:
                if version not in versions:
                    raise UnknownAnalyzer(f"{analyzer_id}@{version}")
                return versions[version]
            registration_rank = {v: i for i, v in enumerate(self._order[analyzer_id])}
            latest = max(versions, key=lambda v: (_version_key(v), registration_rank[v]))
            return versions[latest]

    def descriptor(self, analyzer_id: str, version: Optional[str] = None):
        return self.resolve(analyzer_id, version).describe()

    def list_descriptors(self):
        with self._lock:
            ids = sorted(self._by_id)
        return [self.resolve(analyzer_id).describe() for analyzer_id in ids]

    def __contains__(self, analyzer_id: str) -> bool:
        with self._lock:
            return analyzer_id in self._by_id


class PostProcessorRegistry:
    def __init__(self):
        self._lock = threading.RLock()
        self._by_id: dict[str, PostProcessor] = {}

    def register(self, impl: PostProcessor) -> PostProcessor:
        if not impl.id:
            raise DrpError("post-processor must declare an id")
        with self._lock:
            if impl.id in self._by_id:
                raise DuplicateId(f"post-processor {impl.id!r} already registered")
            self._by_id[impl.id] = impl
        return impl

    def resolve(self, pp_id: str) -> PostProcessor:
        with self._lock:
            impl = self._by_id.get(pp_id)
        if impl is None:
            raise UnknownPostProcessor(pp_id)
        return impl

    def __contains__(self, pp_id: str) -> bool:
        with self._lock:
            return pp_id in self._by_id
