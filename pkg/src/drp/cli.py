"""Command-line surface.

Commands talk to a running service over the HTTP API by default; --local
embeds a service in-process (identical code path below the API layer).
Exit codes for `run`/`render`: OK or ISSUE_FOUND -> 0, INCONCLUSIVE -> 2,
ERROR (or a failed run) -> 1.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import httpx

from . import __version__
from .backend.api import create_app, descriptor_to_obj, peek_to_obj
from .backend.service import DrpService
from .backtest import Backtester, canary as run_canary, ci_gate, load_candidate
from .backtest.canary import InsufficientTraffic
from .config import DrpConfig, load_config
from .core import DrpError, FindingStatus, render_text
from .core.codec import findings_from_obj
from .core.types import InputSchema, SchemaParam, ValueTag
from .demo import manual_service_errors, register_demo
from .sdk import bootstrap_template
from .telemetry import (
    FaultSpec,
    Scale,
    ScenarioId,
    ScenarioSpec,
    generate_scenario,
    write_scenario_dir,
)

DEFAULT_API = "http://127.0.0.1:8765"

_EXIT_BY_STATUS = {
    FindingStatus.OK: 0,
    FindingStatus.ISSUE_FOUND: 0,
    FindingStatus.INCONCLUSIVE: 2,
    FindingStatus.ERROR: 1,
}


class Client:
    """Uniform wire-level client: HTTP by default, embedded with --local."""

    def __init__(self, api: str, local: bool, config: DrpConfig):
        self._local = local
        if local:
            self.service = DrpService(config)
            register_demo(self.service)
            self.service.start()
            self._app_client = None
        else:
            self.service = None
            self._http = httpx.Client(base_url=api, timeout=120.0)

    def close(self):
        if self._local:
            self.service.close()
        else:
            self._http.close()

    def _request(self, method: str, path: str, **kwargs) -> dict:
        response = self._http.request(method, path, **kwargs)
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise DrpError(f"{response.status_code}: {detail}")
        return response.json()

    def submit(self, analyzer_id, inputs, postprocessors=()):
        if self._local:
            return self.service.submit_diagnose(analyzer_id, inputs, tuple(postprocessors))
        return self._request(
            "POST", "/v1/diagnose",
            json={"analyzer_id": analyzer_id, "inputs": inputs,
                  "postprocessors": list(postprocessors)},
        )["request_id"]

    def peek(self, request_id) -> dict:
        if self._local:
            return peek_to_obj(self.service.peek_diagnose_status(request_id))
        return self._request("GET", f"/v1/diagnose/{request_id}")

    def analyzers(self) -> list[dict]:
        if self._local:
            return [descriptor_to_obj(d) for d in self.service.registry.list_descriptors()]
        return self._request("GET", "/v1/analyzers")["analyzers"]

    def insights(self, start: int, end: int) -> dict:
        if self._local:
            return self.service.insights(start, end).to_obj()
        return self._request("GET", "/v1/insights", params={"start": start, "end": end})


def _wait_terminal(client: Client, request_id: str, timeout_s: float = 120.0) -> dict:
    deadline = time.time() + timeout_s
    delay = 0.05
    while True:
        peek = client.peek(request_id)
        if peek["status"] in ("SUCCESS", "FAILED"):
            return peek
        if time.time() > deadline:
            raise DrpError(f"request {request_id} still {peek['status']} after {timeout_s}s")
        time.sleep(delay)
        delay = min(delay * 1.5, 1.0)


def _print_outcome(peek: dict, fmt: str, width: int) -> int:
    if peek["status"] == "FAILED":
        error = peek.get("error", {})
        click.echo(
            f"run failed [{error.get('class')}] after {error.get('attempt_count')} attempt(s): "
            f"{error.get('message')}",
            err=True,
        )
        return 1
    findings = findings_from_obj(peek["findings"])
    if fmt == "json":
        click.echo(json.dumps(peek["findings"], indent=2))
    else:
        click.echo(render_text(findings, width))
    return _EXIT_BY_STATUS[findings.status]


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config file")
@click.option("--home", type=click.Path(), default=None, help="data directory (DRP_HOME)")
@click.option("--api", default=DEFAULT_API, show_default=True, help="backend base URL")
@click.option("--local", is_flag=True, help="embed the service in-process")
@click.pass_context
def main(ctx, config_path, home, api, local):
    """Automated investigations: run codified playbooks against telemetry."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = load_config(config_path, home)
    ctx.obj["api"] = api
    ctx.obj["local"] = local


def _client(ctx) -> Client:
    return Client(ctx.obj["api"], ctx.obj["local"], ctx.obj["config"])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--workers", type=int, default=None, help="worker thread count")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve a static UI bundle from this directory")
@click.pass_context
def serve(ctx, host, port, workers, ui_dir):
    """Start the API, workers, and post-processing tiers."""
    import uvicorn

    service = DrpService(ctx.obj["config"])
    register_demo(service)
    service.start(worker_count=workers)
    app = create_app(service, ui_dir=ui_dir)
    click.echo(f"drp service on http://{host}:{port} (home: {service.home})")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.close()


@main.command()
@click.argument("analyzer_id")
@click.option("--input", "inputs", multiple=True, metavar="KEY=VALUE",
              help="analyzer input (repeatable)")
@click.option("--postprocessor", "postprocessors", multiple=True)
@click.option("--async", "async_", is_flag=True, help="print the request id and exit")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--width", default=100, show_default=True)
@click.pass_context
def run(ctx, analyzer_id, inputs, postprocessors, async_, fmt, width):
    """Submit an analyzer run; polls to completion unless --async."""
    parsed = {}
    for item in inputs:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.UsageError(f"--input needs KEY=VALUE, got {item!r}")
        parsed[key] = value
    client = _client(ctx)
    try:
        request_id = client.submit(analyzer_id, parsed, postprocessors)
        if async_:
            click.echo(request_id)
            return
        peek = _wait_terminal(client, request_id)
        sys.exit(_print_outcome(peek, fmt, width))
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        client.close()


@main.command()
@click.argument("request_id")
@click.pass_context
def status(ctx, request_id):
    """Print a request's status."""
    client = _client(ctx)
    try:
        peek = client.peek(request_id)
        click.echo(f"{peek['request_id']} {peek['status']}")
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        client.close()


@main.command("list")
@click.pass_context
def list_analyzers(ctx):
    """List registered analyzers."""
    client = _client(ctx)
    try:
        for desc in client.analyzers():
            params = ", ".join(
                p["name"] + ("*" if p["required"] else "")
                for p in desc["input_schema"]["params"]
            )
            click.echo(
                f"{desc['analyzer_id']}@{desc['version']} group={desc['group_id']} "
                f"params=[{params}]"
            )
    finally:
        client.close()


@main.command()
@click.argument("request_id")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--width", default=100, show_default=True)
@click.pass_context
def render(ctx, request_id, fmt, width):
    """Pretty-print a stored run's findings."""
    client = _client(ctx)
    try:
        peek = client.peek(request_id)
        if peek["status"] not in ("SUCCESS", "FAILED"):
            click.echo(f"request is {peek['status']}; no findings yet", err=True)
            sys.exit(1)
        sys.exit(_print_outcome(peek, fmt, width))
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        client.close()


@main.command()
@click.option("--analyzer", "analyzer_id", required=True)
@click.option("--days", default=30, show_default=True)
@click.option("--candidate", required=True,
              help='candidate analyzer: "module:Class" or path/to/file.py')
@click.option("--json", "json_out", type=click.Path(), default=None,
              help="also write the report as JSON")
@click.pass_context
def backtest(ctx, analyzer_id, days, candidate, json_out):
    """Replay recorded runs against a candidate; exit 1 when the gate blocks."""
    service = DrpService(ctx.obj["config"])
    register_demo(service)
    try:
        impl = load_candidate(candidate)
        backtester = Backtester(
            service.results, service.traces, resolver=service.registry.resolve,
            parallelism=ctx.obj["config"].backtest.parallelism,
        )
        report = backtester.backtest(analyzer_id, impl, window_days=days)
        code, summary = ci_gate(report)
        click.echo(summary)
        if json_out:
            Path(json_out).write_text(json.dumps(report.to_obj(), indent=2) + "\n")
        sys.exit(code)
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        service.close()


@main.command()
@click.option("--analyzer", "analyzer_id", required=True)
@click.option("--candidate", required=True)
@click.option("--fraction", default=0.05, show_default=True)
@click.option("--threshold", default=0.01, show_default=True)
@click.option("--min-cases", default=20, show_default=True)
@click.option("--days", default=30, show_default=True)
@click.pass_context
def canary(ctx, analyzer_id, candidate, fraction, threshold, min_cases, days):
    """Shadow a candidate on sampled recorded traffic; exit 1 on HALT."""
    service = DrpService(ctx.obj["config"])
    register_demo(service)
    try:
        impl = load_candidate(candidate)
        backtester = Backtester(
            service.results, service.traces, resolver=service.registry.resolve
        )
        report = run_canary(
            backtester, analyzer_id, impl,
            sample_fraction=fraction, error_threshold=threshold,
            min_cases=min_cases, window_days=days,
        )
        click.echo(
            f"canary {report.decision.value}: shadowed={report.shadowed} "
            f"logic_errors={report.logic_errors} rate={report.error_rate:.4f} "
            f"threshold={report.error_threshold}"
        )
        sys.exit(0 if report.decision.value == "PROMOTE" else 1)
    except InsufficientTraffic as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        service.close()


@main.group()
def scenario():
    """Generate and demo synthetic incident scenarios."""


@scenario.command("gen")
@click.option("--id", "scenario_id", type=click.Choice([s.value for s in ScenarioId]),
              required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--magnitude", default=3.0, show_default=True)
@click.option("--events", "n_events", default=200, show_default=True)
def scenario_gen(scenario_id, seed, out, magnitude, n_events):
    """Write a scenario directory: stores, alert rules, ground truth."""
    spec = ScenarioSpec(
        ScenarioId(scenario_id), seed=seed,
        scale=Scale(n_events=n_events),
        fault=FaultSpec(magnitude=magnitude),
    )
    bundle = generate_scenario(spec)
    path = write_scenario_dir(bundle, out)
    click.echo(f"scenario {scenario_id} seed={seed} written to {path}")


@scenario.command("demo")
@click.option("--id", "scenario_id", type=click.Choice([s.value for s in ScenarioId]),
              default="SERVICE_ERRORS", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--width", default=100, show_default=True)
@click.pass_context
def scenario_demo(ctx, scenario_id, seed, width):
    """End-to-end closed loop: alert fires, analyzer runs, alert is annotated."""
    import tempfile

    from dataclasses import replace

    started = time.time()
    spec = ScenarioSpec(ScenarioId(scenario_id), seed=seed)
    bundle = generate_scenario(spec)
    truth = bundle.ground_truth

    with tempfile.TemporaryDirectory(prefix="drp-demo-") as tmp:
        config = replace(ctx.obj["config"], home=Path(tmp) / "home")
        service = DrpService(config)
        register_demo(service)
        service.load_scenario(bundle)
        service.start()
        try:
            fired = []
            now = truth.onset_ts
            while not fired and now < truth.onset_ts + 30 * 60_000:
                now += 60_000
                fired = service.alert_engine.evaluate_rules(now)
            if not fired:
                click.echo("alert did not fire", err=True)
                sys.exit(1)
            alert = fired[0]
            click.echo(f"alert fired: {alert.alert_id} on {alert.metric} at {alert.fired_at}")
            request_id = service.alert_engine.submitted.get(alert.alert_id)
            if request_id is None:
                click.echo("no analyzer bound to the firing rule", err=True)
                sys.exit(1)
            if not service.wait_terminal(request_id, 60_000):
                click.echo("analysis did not finish", err=True)
                sys.exit(1)
            deadline = time.time() + 30
            while time.time() < deadline:
                annotations = service.alerts.get(alert.alert_id).annotations
                if annotations:
                    break
                time.sleep(0.02)
            else:
                click.echo("alert never got its findings annotation", err=True)
                sys.exit(1)
            elapsed = time.time() - started
            peek = service.peek_diagnose_status(request_id)
            click.echo(f"analysis {request_id} -> {peek.status.value} in {elapsed:.2f}s")
            click.echo("annotation: " + annotations[0].text)
            click.echo("")
            click.echo(render_text(peek.findings, width))
            if scenario_id == "SERVICE_ERRORS":
                manual = manual_service_errors(bundle)
                ratio = manual.steps / 1
                click.echo(
                    f"manual playbook steps: {manual.steps} "
                    f"(queries, slicing, event correlation by hand)"
                )
                click.echo(f"automated path steps: 1 (single submission) -> {ratio:.0f}x fewer")
        finally:
            service.close()


@main.command()
@click.option("--start", type=int, default=None, help="window start (ms epoch)")
@click.option("--end", type=int, default=None, help="window end (ms epoch)")
@click.option("--days", type=int, default=1, show_default=True,
              help="trailing window when --start/--end are not given")
@click.pass_context
def insights(ctx, start, end, days):
    """Ranked alert-cause categories over a window."""
    if end is None:
        end = int(time.time() * 1000)
    if start is None:
        start = end - days * 24 * 60 * 60 * 1000
    client = _client(ctx)
    try:
        report = client.insights(start, end)
        ranked = report["ranked"]
        if not ranked:
            click.echo("no analyses in window")
            return
        for row in ranked:
            click.echo(f"{row['cause']:<14} count={row['count']:<6} share={row['share']:.2%}")
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    finally:
        client.close()


@main.command()
@click.argument("name")
@click.option("--param", "params", multiple=True, metavar="NAME:TAG[:required]",
              help="schema parameter, e.g. service:STRING:required")
@click.option("--out", default=".", type=click.Path(), show_default=True)
def bootstrap(name, params, out):
    """Scaffold a new analyzer with its test stub."""
    schema_params = []
    for spec in params:
        parts = spec.split(":")
        if len(parts) < 2:
            raise click.UsageError(f"--param needs NAME:TAG[:required], got {spec!r}")
        required = len(parts) > 2 and parts[2] == "required"
        try:
            tag = ValueTag(parts[1].upper())
        except ValueError:
            raise click.UsageError(f"unknown tag {parts[1]!r}")
        schema_params.append(SchemaParam(parts[0], tag, required=required))
    try:
        files = bootstrap_template(name, InputSchema(tuple(schema_params)), out)
    except DrpError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    for path in files:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
