"""Parse raw string inputs into a typed Context against an InputSchema."""

from __future__ import annotations

from typing import Mapping

from .errors import MissingRequired, TypeMismatch
from .types import Context, ContextValue, InputSchema, ValueTag

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def parse_value(tag: ValueTag, raw: str) -> ContextValue:
    """Parse one raw string into a ContextValue of the given tag.

    Raises ValueError when the string does not parse; callers translate
    that into TypeMismatch with the parameter name attached.
    """
    if tag is ValueTag.STRING:
        return ContextValue.string(raw)
    if tag is ValueTag.INT:
        return ContextValue.of_int(int(raw.strip()))
    if tag is ValueTag.FLOAT:
        return ContextValue.of_float(float(raw.strip()))
    if tag is ValueTag.BOOL:
        lowered = raw.strip().lower()
        if lowered in _TRUE:
            return ContextValue.of_bool(True)
        if lowered in _FALSE:
            return ContextValue.of_bool(False)
        raise ValueError(f"not a boolean: {raw!r}")
    if tag is ValueTag.TIMESTAMP:
        return ContextValue.timestamp(int(raw.strip()))
    if tag is ValueTag.STRING_LIST:
        items = [part.strip() for part in raw.split(",")] if raw else []
        return ContextValue.string_list([p for p in items if p])
    raise ValueError(f"unknown tag {tag!r}")


def validate_context(schema: InputSchema, raw: Mapping[str, str]) -> Context:
    """Build a Context from raw string inputs.

    Required params must be present and parse to their declared tag;
    absent optional params pick up their defaults; keys the schema does
    not know about are preserved as STRING values.
    """
    entries: dict[str, ContextValue] = {}
    for param in schema.params:
        if param.name in raw:
            try:
                entries[param.name] = parse_value(param.tag, raw[param.name])
            except (ValueError, OverflowError):
                raise TypeMismatch(param.name, param.tag.value, raw[param.name])
        elif param.required:
            raise MissingRequired(param.name)
        elif param.default is not None:
            entries[param.name] = param.default
    for key, value in raw.items():
        if key not in entries:
            entries[key] = ContextValue.string(value)
    return Context(entries)
