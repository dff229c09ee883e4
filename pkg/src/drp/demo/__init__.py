"""Demo analyzers for the shipped incident scenarios, plus the manual replay."""

from .analyzers import (
    DEMO_ANALYZERS,
    ContainerFailuresAnalyzer,
    DependencyHealthAnalyzer,
    MlFeaturesAnalyzer,
    ServiceErrorsAnalyzer,
    UpstreamDataAnalyzer,
    register_demo,
)
from .manual import ManualRun, manual_service_errors

__all__ = [
    "ContainerFailuresAnalyzer",
    "DEMO_ANALYZERS",
    "DependencyHealthAnalyzer",
    "ManualRun",
    "MlFeaturesAnalyzer",
    "ServiceErrorsAnalyzer",
    "UpstreamDataAnalyzer",
    "manual_service_errors",
    "register_demo",
]
