"""drp: automated incident investigation framework.

Codified investigation playbooks ("analyzers") run on a queue-backed
execution service against pluggable telemetry stores; completed analyses
flow through post-processors into alert annotations, tasks, and insights;
analyzer changes are gated by backtesting and canary checks.
"""

__version__ = "0.1.0"
