"""Throwaway backend for the frontend integration tests.

Workers start on a short delay so a client polling right after submit
reliably observes QUEUED before RUNNING. Loads the complex demo scenario
so chained analyses (and their drill-down refs) are available.
"""

import sys
import tempfile
import threading

import uvicorn

from drp.backend import DrpService
from drp.backend.api import create_app
from drp.config import BackendConfig, DrpConfig
from drp.demo import register_demo
from drp.telemetry import ScenarioId, ScenarioSpec, generate_scenario
from drp.testing import EchoAnalyzer, SleeperAnalyzer


def main() -> None:
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8893
    home = tempfile.mkdtemp(prefix="drp-ui-test-")
    config = DrpConfig(home=home, backend=BackendConfig(poll_interval_ms=5))
    service = DrpService(config)
    service.register_analyzer(EchoAnalyzer(), "drp.testing:EchoAnalyzer")
    service.register_analyzer(SleeperAnalyzer(), "drp.testing:SleeperAnalyzer")
    register_demo(service)
    service.load_scenario(generate_scenario(ScenarioSpec(ScenarioId.ML_FEATURES, seed=11)))
    threading.Timer(0.8, lambda: service.start(worker_count=2)).start()
    uvicorn.run(create_app(service), host="127.0.0.1", port=port, log_level="error")


if __name__ == "__main__":
    main()
