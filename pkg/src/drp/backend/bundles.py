"""Analyzer group bundles: artifacts, lazy fetch with caching, preload heuristic.

A bundle artifact is a JSON file naming the group's analyzers by import
path; "fetching" copies it from the bundle source directory into the local
cache, which keeps the fetch-latency behaviour of a real package pull
observable without a package manager. Groups covering the most-run
analyzers (top 10% by historical run count) are fetched eagerly at service
start; everything else loads on first use.
"""

from __future__ import annotations

import importlib
import json
import math
import shutil
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from ..core.errors import DrpError
from ..sdk.analyzer import Analyzer

PRELOAD_TOP_FRACTION = 0.10


class UnknownBundle(DrpError):
    def __init__(self, analyzer_id: str):
        super().__init__(f"no bundle manifest covers analyzer {analyzer_id!r}")
        self.analyzer_id = analyzer_id


class FetchError(DrpError):
    """Bundle artifact could not be fetched; counts as an INFRA failure."""


@dataclass(frozen=True)
class BundleManifest:
    group_id: str
    analyzer_ids: tuple[str, ...]
    artifact_path: Optional[Path] = None  # None -> in-process only
    version: str = "1.0.0"
    preload: bool = False

    def __post_init__(self):
        object.__setattr__(self, "analyzer_ids", tuple(self.analyzer_ids))


@dataclass
class BundleHandle:
    group_id: str
    manifest: BundleManifest
    cached_artifact: Optional[Path]
    fetched: bool  # True when this resolution had to pull the artifact


def write_bundle_artifact(
    path: Path, group_id: str, version: str, entries: Mapping[str, str]
) -> Path:
    """entries maps analyzer_id -> "module:ClassName"."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(
            {"group_id": group_id, "version": version, "analyzers": dict(entries)},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return path


def load_bundle_analyzers(artifact_path: Path) -> dict[str, Analyzer]:
    """Import and instantiate every analyzer named by an artifact."""
    try:
        obj = json.loads(Path(artifact_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FetchError(f"cannot read bundle artifact {artifact_path}: {exc}")
    out: dict[str, Analyzer] = {}
    for analyzer_id, entry in obj.get("analyzers", {}).items():
        module_name, _, class_name = entry.partition(":")
        try:
            cls = getattr(importlib.import_module(module_name), class_name)
        except (ImportError, AttributeError) as exc:
            raise FetchError(f"bundle entry {entry!r} not importable: {exc}")
        out[analyzer_id] = cls()
    return out


class BundleResolver:
    def __init__(self, cache_dir: Optional[Path | str] = None):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._lock = threading.Lock()
        self._manifests: dict[str, BundleManifest] = {}
        self._group_of: dict[str, str] = {}
        self._loaded: dict[str, BundleHandle] = {}
        self.fetch_counts: dict[str, int] = {}

    def add_manifest(self, manifest: BundleManifest) -> None:
        with self._lock:
            for analyzer_id in manifest.analyzer_ids:
                owner = self._group_of.get(analyzer_id)
                if owner is not None and owner != manifest.group_id:
                    raise DrpError(
                        f"analyzer {analyzer_id!r} already belongs to group {owner!r}"
                    )
                self._group_of[analyzer_id] = manifest.group_id
            self._manifests[manifest.group_id] = manifest

    def manifests(self) -> list[BundleManifest]:
        with self._lock:
            return list(self._manifests.values())

    def group_of(self, analyzer_id: str) -> Optional[str]:
        with self._lock:
            return self._group_of.get(analyzer_id)

    def resolve(self, analyzer_id: str) -> BundleHandle:
        """Return the loaded bundle for an analyzer, fetching it when cold."""
        with self._lock:
            group_id = self._group_of.get(analyzer_id)
            if group_id is None:
                raise UnknownBundle(analyzer_id)
            handle = self._loaded.get(group_id)
            if handle is not None:
                return BundleHandle(group_id, handle.manifest, handle.cached_artifact, False)
            manifest = self._manifests[group_id]
            cached = self._fetch_locked(manifest)
            handle = BundleHandle(group_id, manifest, cached, cached is not None)
            self._loaded[group_id] = handle
            return handle

    def _fetch_locked(self, manifest: BundleManifest) -> Optional[Path]:
        if manifest.artifact_path is None:
            return None
        self.fetch_counts[manifest.group_id] = self.fetch_counts.get(manifest.group_id, 0) + 1
        source = Path(manifest.artifact_path)
        if self.cache_dir is None:
            if not source.exists():
                raise FetchError(f"bundle artifact missing: {source}")
            return source
        target = self.cache_dir / f"{manifest.group_id}.json"
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(source, target)
        except OSError as exc:
            raise FetchError(f"fetching bundle {manifest.group_id!r}: {exc}")
        return target

    def loaded_groups(self) -> set[str]:
        with self._lock:
            return set(self._loaded)

    def compute_preload_groups(self, run_counts: Mapping[str, int]) -> set[str]:
        """Smallest group set covering the top 10% most-run analyzers."""
        ranked = sorted(run_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if not ranked:
            return set()
        top_n = math.ceil(PRELOAD_TOP_FRACTION * len(ranked))
        groups: set[str] = set()
        with self._lock:
            for analyzer_id, _ in ranked[:top_n]:
                group = self._group_of.get(analyzer_id)
                if group is not None:
                    groups.add(group)
        return groups

    def preload(self, run_counts: Mapping[str, int]) -> set[str]:
        groups = self.compute_preload_groups(run_counts)
        for group_id in sorted(groups):
            with self._lock:
                manifest = self._manifests.get(group_id)
                if manifest is None or group_id in self._loaded:
                    continue
                cached = self._fetch_locked(manifest)
                self._loaded[group_id] = BundleHandle(group_id, manifest, cached, cached is not None)
        return groups
