"""Runtime configuration: defaults, YAML overrides, DRP_HOME resolution."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml


@dataclass(frozen=True)
class AnalysisConfig:
    window_n: int = 30
    k: float = 3.0
    tau_ms: int = 30 * 60 * 1000
    beam_width: int = 10
    high_cut: float = 0.7
    medium_cut: float = 0.4


@dataclass(frozen=True)
class BackendConfig:
    max_attempts: int = 3
    default_timeout_ms: int = 60_000
    queue_max_depth: int = 10_000
    worker_count: int = max(1, os.cpu_count() or 1)
    lease_factor: float = 2.0
    poll_interval_ms: int = 10


@dataclass(frozen=True)
class PostprocessConfig:
    max_retries: int = 3


@dataclass(frozen=True)
class BacktestConfig:
    window_days: int = 30
    canary_sample_fraction: float = 0.05
    canary_error_threshold: float = 0.01
    canary_min_cases: int = 20
    parallelism: int = 4


@dataclass(frozen=True)
class DrpConfig:
    home: Path = field(default_factory=lambda: Path(os.environ.get("DRP_HOME", "./drp-data")))
    analysis: AnalysisConfig = AnalysisConfig()
    backend: BackendConfig = BackendConfig()
    postprocess: PostprocessConfig = PostprocessConfig()
    backtest: BacktestConfig = BacktestConfig()


_SECTIONS = {
    "analysis": AnalysisConfig,
    "backend": BackendConfig,
    "postprocess": PostprocessConfig,
    "backtest": BacktestConfig,
}


def load_config(path: Optional[Path | str] = None, home: Optional[Path | str] = None) -> DrpConfig:
    """Defaults, overridden by the YAML file (if given), then by `home`.

    The file holds one top-level mapping per section, e.g.::

        backend:
          max_attempts: 3
          default_timeout_ms: 60000
        analysis:
          k: 3.0
    """
    config = DrpConfig()
    if path is not None:
        raw: dict[str, Any] = yaml.safe_load(Path(path).read_text()) or {}
        overrides: dict[str, Any] = {}
        for section, cls in _SECTIONS.items():
            if section in raw:
                current = getattr(config, section)
                overrides[section] = replace(current, **raw[section])
        if "home" in raw:
            overrides["home"] = Path(raw["home"])
        config = replace(config, **overrides)
    if home is not None:
        config = replace(config, home=Path(home))
    return config
