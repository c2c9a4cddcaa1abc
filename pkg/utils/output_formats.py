#!/usr/bin/env python3
"""
Output Formats
CSV, JSON and plain-text rendering of result records. Floats are written
with 15 significant digits and exact rationals as p/q, so identical inputs
always produce byte-identical output.
"""

import csv
import io
import json
import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

from jinja2 import Template
from pydantic import BaseModel

logger = logging.getLogger(__name__)

FLOAT_DIGITS = 15


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"
    TEXT = "text"


def format_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return f"{float(value):.{FLOAT_DIGITS}g}"


def format_rational(value: Fraction) -> str:
    """p/q, denominator always written"""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def _plain(value: Any) -> Any:
    """JSON-safe view: rationals as p/q strings, floats rounded to 15 digits"""
    if isinstance(value, BaseModel):
        return _plain(value.model_dump())
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(format_float(value))
    return value


def to_csv(rows: Iterable[Any], fields: Sequence[str], footer: Optional[List[str]] = None) -> str:
    """Header line, one line per row (model or dict), then '# '-prefixed footer lines"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        data = row.model_dump() if isinstance(row, BaseModel) else dict(row)
        writer.writerow([format_value(data.get(name)) for name in fields])
    for line in footer or []:
        buffer.write(f"# {line}\n")
    return buffer.getvalue()


def to_json(payload: Any) -> str:
    return json.dumps(_plain(payload), indent=2) + "\n"


def render_text(template: str, **context: Any) -> str:
    """Render a jinja2 template; fmt (float) and rat (rational) are available"""
    text = Template(template, trim_blocks=True, lstrip_blocks=True).render(
        fmt=format_float, rat=format_rational, value=format_value, **context
    )
    return text if text.endswith("\n") else text + "\n"


def key_value_text(title: str, record: Dict[str, Any]) -> str:
    return render_text(KEY_VALUE_TEMPLATE, title=title, record=record)


KEY_VALUE_TEMPLATE = """{{ title }}
{% for key, item in record.items() %}
  {{ "%-22s"|format(key) }} {{ value(item) }}
{% endfor %}"""

TABLE_TEMPLATE = """{{ title }}
{{ fields|join("  ") }}
{% for row in rows %}
{{ row|join("  ") }}
{% endfor %}
{% for line in footer %}
{{ line }}
{% endfor %}"""

SUITE_TEMPLATE = """{% for report in reports %}
[{{ "PASS" if report.passed else "FAIL" }}] suite {{ report.suite }} ({{ report.checks|length }} checks)
{% for check in report.checks %}
  {{ "ok  " if check.passed else "FAIL" }} {{ check.name }}{% if check.detail %}: {{ check.detail }}{% endif %}

{% endfor %}
{% endfor %}
{{ passed_count }}/{{ reports|length }} suites passed"""


def table_text(title: str, rows: Iterable[Any], fields: Sequence[str],
               footer: Optional[List[str]] = None) -> str:
    cells = []
    for row in rows:
        data = row.model_dump() if isinstance(row, BaseModel) else dict(row)
        cells.append([format_value(data.get(name)) for name in fields])
    return render_text(TABLE_TEMPLATE, title=title, fields=list(fields), rows=cells, footer=footer or [])
