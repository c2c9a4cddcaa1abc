#!/usr/bin/env python3
"""
Tests for CSV, JSON and text rendering
"""

import json
import sys
from fractions import Fraction
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent))

from asymptotics import SweepRow
from utils.output_formats import (KEY_VALUE_TEMPLATE, format_float, format_rational, format_value,
                                  key_value_text, render_text, table_text, to_csv, to_json)


class TestScalars:
    """Number formatting"""

    def test_float_digits(self):
        assert format_float(1 / 3) == "0.333333333333333"
        assert format_float(9.869604401089358) == "9.86960440108936"
        assert format_float(None) == ""
        assert format_float(float("inf")) == "inf"

    def test_rational_always_has_denominator(self):
        assert format_rational(Fraction(224, 3)) == "224/3"
        assert format_rational(Fraction(10)) == "10/1"
        assert format_rational(5) == "5/1"

    def test_values(self):
        assert format_value(True) == "true"
        assert format_value(None) == ""
        assert format_value(Fraction(1, 240)) == "1/240"
        assert format_value([1, 2]) == "1 2"
        assert format_value(7) == "7"


class TestCsv:
    """Tabular output"""

    def test_header_rows_footer(self):
        rows = [SweepRow(n=2, d=2, h_nd=0.5), {"n": 3, "d": 2, "h_nd": Fraction(1, 2)}]
        text = to_csv(rows, ["n", "d", "h_nd", "error"], footer=["h_inf=9.87"])
        assert text == "n,d,h_nd,error\n2,2,0.5,\n3,2,1/2,\n# h_inf=9.87\n"

    def test_quotes_commas(self):
        text = to_csv([{"detail": "a, b"}], ["detail"])
        assert text == 'detail\n"a, b"\n'

    def test_deterministic(self):
        rows = [{"x": 0.1 + 0.2}]
        assert to_csv(rows, ["x"]) == to_csv(rows, ["x"])


class TestJson:
    """JSON output"""

    def test_models_and_rationals(self):
        payload = {"row": SweepRow(n=4, d=3, f_est=2 / 3), "h": Fraction(224, 3)}
        data = json.loads(to_json(payload))
        assert data["row"]["n"] == 4
        assert data["row"]["f_est"] == 0.666666666666667
        assert data["h"] == "224/3"


class TestText:
    """jinja2 templates"""

    def test_key_value(self):
        text = key_value_text("Kahn bound (d=3)", {"h_upper": Fraction(224, 3), "ok": True})
        lines = text.splitlines()
        assert lines[0] == "Kahn bound (d=3)"
        assert lines[1].split() == ["h_upper", "224/3"]
        assert lines[2].split() == ["ok", "true"]

    def test_table(self):
        text = table_text("t", [{"a": 1, "b": 0.5}], ["a", "b"], footer=["done"])
        assert text.splitlines() == ["t", "a  b", "1  0.5", "done"]

    def test_render_helpers(self):
        assert render_text("{{ rat(x) }} {{ fmt(y) }}", x=Fraction(1, 2), y=0.25) == "1/2 0.25\n"

    def test_template_renders_empty_record(self):
        assert render_text(KEY_VALUE_TEMPLATE, title="empty", record={}) == "empty\n"
