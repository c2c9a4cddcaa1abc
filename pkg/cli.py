#!/usr/bin/env python3
"""
Command-Line Interface
Batch commands over the unitary-estimation toolkit: optimal fidelity, n-sweeps
with extrapolation, FEM bounds, boundary graphs, Kahn constants, bounds
tables and verification suites. Results go to stdout (or --output), logs to
stderr, so identical flags give byte-identical output.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator
from pythonjsonlogger import jsonlogger

from asymptotics import DEFAULT_WINDOW_MIN, ExtrapolationError, bounds_table, extrapolate, sweep
from dirichlet_graph import build_boundary_graph, laplacian_from_graph
from estimation import fidelity
from fem_simplex import build_triangulation, fem_min_eig
from kahn_bound import h_upper, mc_oracle, ratios_closed_form, ratios_recursive
from services.verification_service import SuiteOptions, VerificationService
from settings import SolverSettings, load_settings, set_settings
from spectral import Extremal, extremal_eig
from utils.output_formats import (SUITE_TEMPLATE, OutputFormat, format_float, format_rational,
                                  key_value_text, render_text, table_text, to_csv, to_json)
from young_lattice import enumerate_lattice

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'

logger = logging.getLogger(__name__)

SWEEP_FIELDS = ["n", "d", "dim", "f_est", "h_nd", "lambda_graph", "sandwich_lower",
                "variational_upper", "graph_upper", "error"]
BOUNDS_FIELDS = ["d", "christandl_lo", "christandl_hi", "yang_hi", "haah_lo", "kahn_hi",
                 "conjecture_lo", "exact"]
FIDELITY_FIELDS = ["n", "d", "dim", "f_est", "h_nd", "residual"]
FEM_FIELDS = ["n", "d", "dim", "pencil_value", "formula_value", "lambda_graph", "continuum",
              "relative_error", "residual"]
GRAPH_FIELDS = ["n", "d", "interior", "boundary", "edges", "lambda_min", "sandwich_lower"]
VERIFY_FIELDS = ["suite", "check", "passed", "detail"]
SUITES = VerificationService.SUITES + ("all",)


class RunConfig(BaseModel):
    """Validated flags for one invocation"""
    command: str
    n: Optional[int] = Field(default=None, ge=1)
    d: Optional[int] = Field(default=None, ge=2)
    d_list: Optional[List[int]] = None
    d_min: Optional[int] = Field(default=None, ge=2)
    d_max: Optional[int] = Field(default=None, ge=2)
    n_min: Optional[int] = Field(default=None, ge=1)
    n_max: Optional[int] = Field(default=None, ge=1)
    step: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, gt=0.0)
    window_min: int = Field(default=DEFAULT_WINDOW_MIN, ge=1)
    samples: int = Field(default=10_000_000, ge=10_000)
    seed: int = Field(default=20240, ge=0)
    verify_mc: bool = False
    suite: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    output: Optional[Path] = None
    threads: Optional[int] = Field(default=None, ge=1)
    export_mesh: Optional[Path] = None
    dump_edges: Optional[Path] = None
    dump_diagrams: Optional[Path] = None

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        if self.command == "sweep" and self.n_min > self.n_max:
            raise ValueError(f"--n-min {self.n_min} is larger than --n-max {self.n_max}")
        if self.command == "bounds":
            if self.d_list is None:
                if self.d_min is None or self.d_max is None:
                    raise ValueError("bounds needs --d D1,D2,... or both --d-min and --d-max")
                if self.d_min > self.d_max:
                    raise ValueError(f"--d-min {self.d_min} is larger than --d-max {self.d_max}")
                self.d_list = list(range(self.d_min, self.d_max + 1))
            if any(d < 2 for d in self.d_list):
                raise ValueError(f"Every d must be at least 2, got {self.d_list}")
        return self


def setup_logging(json_logs: bool = False, verbose: bool = False) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.basicConfig(
        level=logging.DEBUG if os.getenv("DEBUG") or verbose else logging.INFO,
        handlers=[handler],
        force=True,
    )


def _render(config: RunConfig, title: str, rows: List, fields: List[str],
            footer: Optional[List[str]] = None, extra: Optional[Dict] = None) -> str:
    if config.format == OutputFormat.JSON:
        payload = {"rows": rows}
        payload.update(extra or {})
        return to_json(payload if extra or len(rows) != 1 else rows[0])
    if config.format == OutputFormat.TEXT:
        if len(rows) == 1 and not footer:
            data = rows[0].model_dump() if isinstance(rows[0], BaseModel) else rows[0]
            return key_value_text(title, {k: data.get(k) for k in fields})
        return table_text(title, rows, fields, footer)
    return to_csv(rows, fields, footer)


def cmd_fidelity(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    record = fidelity(config.n, config.d, tol=config.tol, settings=settings)
    return _render(config, f"F_est(n={config.n}, d={config.d})", [record], FIDELITY_FIELDS), 0


def cmd_sweep(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    n_list = range(config.n_min, config.n_max + 1, config.step)
    series = sweep(config.d, n_list, tol=config.tol, settings=settings, threads=config.threads)
    extra = {"d": config.d}
    try:
        fit = extrapolate(series, window=(config.window_min, config.n_max))
        footer = [f"h_inf={format_float(fit.limit)},spread={format_float(fit.spread)},"
                  f"n_min={fit.n_min},n_max={fit.n_max},points={fit.points},model={fit.model.value}"]
        extra["extrapolation"] = fit
    except ExtrapolationError as e:
        logger.warning(f"No extrapolation: {e}")
        footer = [f"extrapolation unavailable: {e}"]
        extra["extrapolation"] = None

    status = 0
    if series.failed_rows():
        logger.error(f"{len(series.failed_rows())} sweep rows failed")
        status = 1
    violations = series.sandwich_violations()
    if violations:
        footer.append(f"sandwich violated at n={violations}")
        status = 1
    text = _render(config, f"h_(n,{config.d}) sweep", series.rows, SWEEP_FIELDS, footer, extra)
    return text, status


def cmd_fem(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    record = fem_min_eig(config.n, config.d, tol=config.tol, settings=settings)
    if config.export_mesh:
        mesh = build_triangulation(config.n, config.d, settings=settings)
        with open(config.export_mesh, "w") as f:
            mesh.export_mesh(f)
        logger.info(f"Mesh written to {config.export_mesh}")
    return _render(config, f"FEM bound (n={config.n}, d={config.d})", [record], FEM_FIELDS), 0


def cmd_graph(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    n, d = config.n, config.d
    lattice = enumerate_lattice(n, d, settings=settings)
    graph = build_boundary_graph(n, d, settings=settings)
    laplacian = laplacian_from_graph(graph, lattice)
    lam = extremal_eig(laplacian.matrix.astype(float), Extremal.SMALLEST, tol=config.tol,
                       settings=settings).value
    if config.dump_edges:
        with open(config.dump_edges, "w") as f:
            graph.dump_edges(f)
        logger.info(f"Edge list written to {config.dump_edges}")
    if config.dump_diagrams:
        with open(config.dump_diagrams, "w") as f:
            lattice.dump(f)
        logger.info(f"Diagrams written to {config.dump_diagrams}")
    record = {
        "n": n, "d": d, "interior": graph.interior_count,
        "boundary": int(graph.boundary.shape[0]), "edges": int(graph.edges.shape[0]),
        "lambda_min": lam, "sandwich_lower": n * n * lam / (d * d),
    }
    return _render(config, f"Boundary graph (n={n}, d={d})", [record], GRAPH_FIELDS), 0


def cmd_kahn(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    d = config.d
    closed = ratios_closed_form(d)
    record: Dict[str, Any] = {"d": d}
    exact = [("a_ratio", closed.a_ratio), ("b_ratio", closed.b_ratio), ("c_ratio", closed.c_ratio),
             ("rayleigh", closed.rayleigh()), ("h_upper", h_upper(d))]
    for name, value in exact:
        record[name] = value
        record[f"{name}_decimal"] = float(value)
    record["d_value"] = f"{format_rational(closed.d_over_sqrt5)}*sqrt(5)"
    record["d_value_decimal"] = float(closed.d_over_sqrt5) * math.sqrt(5)
    record["recursion_match"] = None
    status = 0
    if d <= settings.recursion_cap:
        record["recursion_match"] = ratios_recursive(d, settings) == closed
        if not record["recursion_match"]:
            status = 1
    else:
        logger.warning(f"d={d} is above the recursion cap {settings.recursion_cap}; recursion skipped")
    if config.verify_mc:
        estimate = mc_oracle(d, config.samples, config.seed, settings=settings)
        deviations = estimate.deviations(closed)
        record.update({
            "mc_a_ratio": estimate.a_ratio, "mc_a_error": estimate.a_error,
            "mc_b_ratio": estimate.b_ratio, "mc_b_error": estimate.b_error,
            "mc_c_ratio": estimate.c_ratio, "mc_c_error": estimate.c_error,
            "mc_h_estimate": estimate.h_estimate,
            "mc_within_3sigma": max(deviations) <= 3.0,
        })
        if not record["mc_within_3sigma"]:
            status = 1
    return _render(config, f"Kahn bound (d={d})", [record], list(record.keys())), status


def cmd_bounds(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    rows = bounds_table(config.d_list)
    return _render(config, "Bounds on h(d) (leading terms)", rows, BOUNDS_FIELDS), 0


def cmd_verify(config: RunConfig, settings: SolverSettings) -> Tuple[str, int]:
    service = VerificationService(settings)
    options = SuiteOptions(n_max=config.n_max, samples=config.samples, seed=config.seed)
    reports = service.run(config.suite, options)
    status = 0 if all(report.passed for report in reports) else 1
    if config.format == OutputFormat.JSON:
        return to_json([{"suite": r.suite, "passed": r.passed, "checks": r.checks} for r in reports]), status
    if config.format == OutputFormat.TEXT:
        passed = sum(report.passed for report in reports)
        return render_text(SUITE_TEMPLATE, reports=reports, passed_count=passed), status
    rows = [{"suite": r.suite, "check": c.name, "passed": c.passed, "detail": c.detail}
            for r in reports for c in r.checks]
    return to_csv(rows, VERIFY_FIELDS), status


COMMANDS: Dict[str, Callable[[RunConfig, SolverSettings], Tuple[str, int]]] = {
    "fidelity": cmd_fidelity,
    "sweep": cmd_sweep,
    "fem": cmd_fem,
    "graph": cmd_graph,
    "kahn": cmd_kahn,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
}


def _d_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="Optimal unitary-estimation fidelity and its asymptotic constants",
    )
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default="csv")
    parser.add_argument("--output", type=Path, help="Write results here instead of stdout")
    parser.add_argument("--threads", type=int, help="Worker threads (default: UNIEST_THREADS or cpu count)")
    parser.add_argument("--log-json", action="store_true", help="Emit logs as JSON lines on stderr")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="F_est(n, d) and h_{n,d}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("sweep", help="h_{n,d} over a range of n, with extrapolation")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--window-min", type=int, default=DEFAULT_WINDOW_MIN)

    p = sub.add_parser("fem", help="FEM upper bound on the continuum Dirichlet eigenvalue")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--export-mesh", type=Path)

    p = sub.add_parser("graph", help="Boundary graph and its Dirichlet Laplacian")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--dump-edges", type=Path)
    p.add_argument("--dump-diagrams", type=Path)

    p = sub.add_parser("kahn", help="Exact Kahn bound on h(d)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--verify-mc", action="store_true")
    p.add_argument("--samples", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=20240)

    p = sub.add_parser("bounds", help="Bound-comparison table")
    p.add_argument("--d", dest="d_list", type=_d_list)
    p.add_argument("--d-min", type=int)
    p.add_argument("--d-max", type=int)

    p = sub.add_parser("verify", help="Run acceptance suites")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--n-max", type=int)
    p.add_argument("--samples", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=20240)
    return parser


def _emit(text: str, output: Optional[Path]) -> None:
    if output:
        with open(output, "w") as f:
            f.write(text)
        logger.info(f"Results written to {output}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_json, args.verbose)

    values = {k: v for k, v in vars(args).items() if k not in ("log_json", "verbose")}
    try:
        config = RunConfig(**values)
        settings = load_settings(threads=config.threads)
    except ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2
    set_settings(settings)

    try:
        text, status = COMMANDS[config.command](config, settings)
    except Exception as e:
        logger.error(f"{config.command} failed: {type(e).__name__}: {e}")
        return 1
    _emit(text, config.output)
    return status


if __name__ == "__main__":
    sys.exit(main())
