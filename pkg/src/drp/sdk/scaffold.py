"""Boilerplate generator for new analyzers."""

from __future__ import annotations

import keyword
from pathlib import Path

from ..core.errors import DrpError
from ..core.types import InputSchema, ValueTag


class InvalidName(DrpError):
    pass


class ScaffoldExists(DrpError):
    pass


_DUMMIES = {
    ValueTag.STRING: "example",
    ValueTag.INT: "1",
    ValueTag.FLOAT: "1.0",
    ValueTag.BOOL: "true",
    ValueTag.TIMESTAMP: "0",
    ValueTag.STRING_LIST: "a,b",
}


def _camel(name: str) -> str:
    return "".join(part.capitalize() for part in name.split("_"))


def bootstrap_template(name: str, params: InputSchema, out_dir: Path | str) -> list[Path]:
    """Write a runnable analyzer skeleton plus its unit-test stub.

    The generated analyzer registers under the given name, validates the
    given schema, and returns INCONCLUSIVE until the author fills in the
    investigation steps. Existing files are never overwritten.
    """
    if not name.isidentifier() or keyword.iskeyword(name):
        raise InvalidName(f"{name!r} is not a usable analyzer name")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    module_path = out / f"{name}_analyzer.py"
    test_path = out / f"test_{name}_analyzer.py"
    for path in (module_path, test_path):
        if path.exists():
            raise ScaffoldExists(f"refusing to overwrite {path}")

    class_name = f"{_camel(name)}Analyzer"
    param_lines = []
    raw_lines = []
    for p in params.params:
        default = "None"
        if p.default is not None:
            default = f"ContextValue({ValueTag.__name__}.{p.default.tag.name}, {p.default.value!r})"
        param_lines.append(
            f'            SchemaParam("{p.name}", ValueTag.{p.tag.name}, '
            f"required={p.required}, default={default}, description={p.description!r}),"
        )
        if p.required:
            raw_lines.append(f'        "{p.name}": "{_DUMMIES[p.tag]}",')
    params_block = "\n".join(param_lines) if param_lines else ""
    raw_block = "\n".join(raw_lines) if raw_lines else ""

    module_src = f'''"""Analyzer skeleton: fill in the investigation steps in analyze()."""

from drp.core import (
    AnalyzerDescriptor,
    Context,
    ContextValue,
    Findings,
    FindingStatus,
    InputSchema,
    SchemaParam,
    ValueTag,
)
from drp.sdk import Analyzer, Toolkit


class {class_name}(Analyzer):
    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="{name}",
            version="0.1.0",
            group_id="{name}",
            input_schema=InputSchema((
{params_block}
            )),
            allowlisted=True,
            timeout_ms=60_000,
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        # TODO({name}): query telemetry through the toolkit and build real findings
        return (
            toolkit.findings(FindingStatus.INCONCLUSIVE)
            .set_summary("not implemented yet")
            .build()
        )


ANALYZER = {class_name}()
'''

    test_src = f'''from drp.core import FindingStatus, validate_context
from drp.sdk import LiveDataSource, Toolkit
from drp.telemetry import AlertStore, EventStore, TimeseriesStore

from {name}_analyzer import ANALYZER


def test_{name}_stub_runs():
    schema = ANALYZER.describe().input_schema
    ctx = validate_context(schema, {{
{raw_block}
    }})
    source = LiveDataSource(TimeseriesStore(), EventStore(), AlertStore())
    toolkit = Toolkit(ctx, source, resolver=lambda _id: ANALYZER)
    findings = ANALYZER.analyze(ctx, toolkit)
    assert findings.status is FindingStatus.INCONCLUSIVE
'''

    module_path.write_text(module_src)
    test_path.write_text(test_src)
    return [module_path, test_path]
