"""Command-line entry point: python -m src.cli <command> [options]."""

import argparse
import csv
import io
import json
import logging
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src import __version__
from src.config import ConfigError, apply_config, config, load_config
from src.algebra_core import (
    AlgebraDescriptor,
    Element,
    JordanError,
    ParameterError,
    element,
    from_matrix,
    make_algebra,
    spin_element,
)
from src.decompositions import rank_signature, spectral
from src.integration import Budget, QuadratureBudgetError, TestFunction
from src.polyrep import BudgetError, ConditioningError, Partition
from src.verify import BatteryError, SuiteSettings, run_suite, spherical_gate, write_reports
from src.zeta import (
    IndeterminateOrderError,
    UnsupportedPointError,
    combination_eval,
    cone_gamma_mc,
    critical_set,
    gamma_omega,
    gamma_omega_cone,
    gamma_poles,
    laurent,
    pole_order_predict,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

_BUDGET_ERRORS = (QuadratureBudgetError, BudgetError, ConditioningError, BatteryError, IndeterminateOrderError)


class InputParseError(ParameterError):
    """Raised when an element literal cannot be read; carries the character position."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Setup logging configuration."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    target = log_file or config.LOG_FILE
    if target:
        handlers.append(logging.FileHandler(target))
    logging.basicConfig(
        level=level.upper() if level else config.LOG_LEVEL,
        format=config.LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------

_SPIN_LITERAL = re.compile(r"^\s*\(\s*([^|]+?)\s*\|\s*(.*?)\s*\)\s*$")


def _parse_number(text: str, offset: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputParseError(f"Cannot read number '{text}'", offset)


def parse_element(algebra: AlgebraDescriptor, text: str) -> Element:
    """
    Read an element from a JSON list of coordinates, a JSON list of matrix
    rows (matrix families) or a Spin literal "(lambda|u1,u2,...)".

    Raises:
        InputParseError: On malformed input, with the character position
        ParameterError: If the value is not an element of the algebra
    """
    match = _SPIN_LITERAL.match(text)
    if match:
        if algebra.is_matrix_model:
            raise InputParseError("Spin literal given for a matrix family", 0)
        lam = _parse_number(match.group(1), match.start(1))
        u_text = match.group(2)
        u = []
        position = match.start(2)
        for part in u_text.split(",") if u_text else []:
            u.append(_parse_number(part.strip(), position))
            position += len(part) + 1
        return spin_element(algebra, lam, u)
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputParseError(f"Malformed element literal: {e.msg}", e.pos)
    if not isinstance(value, list) or not value:
        raise InputParseError("Element must be a non-empty JSON list", 0)
    if all(isinstance(row, list) for row in value):
        if not algebra.is_matrix_model:
            raise InputParseError("Matrix literal given for a Spin factor", 0)
        rows = [[complex(*entry) if isinstance(entry, list) else entry for entry in row] for row in value]
        return from_matrix(algebra, np.array(rows))
    if len(value) != algebra.dim:
        raise InputParseError(f"Expected {algebra.dim} coordinates, got {len(value)}", len(text))
    return element(algebra, [float(v) for v in value])


def _parse_list(text: Optional[str], kind=float) -> List[Any]:
    if not text:
        return []
    return [kind(part) for part in text.replace(" ", "").split(",") if part]


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ParameterError(f"Cannot read complex number '{text}'")


def _parse_point(text: str) -> Any:
    """s values: exact Fractions for rationals like -3/2, complex otherwise."""
    try:
        return Fraction(text)
    except ValueError:
        return _parse_complex(text)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated command-line parameters."""

    algebra: AlgebraDescriptor
    partition: Partition
    seed: int
    samples: int
    circle_points: int
    threads: int
    tol: Optional[float]
    out: Optional[Path]
    fmt: str

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        algebra = make_algebra(args.family, args.rank, args.dim)
        partition = Partition.parse(args.m) if args.m else Partition.zero(algebra.rank)
        if partition.rank != algebra.rank:
            raise ParameterError(f"Partition {partition} needs {algebra.rank} parts")
        return cls(
            algebra=algebra,
            partition=partition,
            seed=config.DEFAULT_SEED if args.seed is None else args.seed,
            samples=config.DEFAULT_SAMPLES if args.samples is None else args.samples,
            circle_points=config.CIRCLE_POINTS if args.circle_points is None else args.circle_points,
            threads=config.DEFAULT_THREADS if args.threads is None else args.threads,
            tol=args.tol,
            out=Path(args.out) if args.out else None,
            fmt=args.format,
        )

    def budget(self) -> Budget:
        return Budget(samples=self.samples, seed=self.seed, threads=self.threads)

    def coefficients(self, text: Optional[str]) -> np.ndarray:
        if not text:
            c = np.zeros(self.algebra.rank + 1, dtype=complex)
            c[0] = 1.0
            return c
        values = [_parse_complex(part) for part in text.split(",") if part.strip()]
        if len(values) != self.algebra.rank + 1:
            raise ParameterError(f"--c needs {self.algebra.rank + 1} entries, got {len(values)}")
        return np.array(values)

    def describe(self) -> dict:
        return {
            "algebra": self.algebra.describe(),
            "partition": str(self.partition),
            "seed": self.seed,
            "samples": self.samples,
            "circle_points": self.circle_points,
        }


def _emit(run: RunConfig, document: Dict[str, Any], rows: Optional[List[Dict[str, Any]]] = None) -> None:
    """Write a JSON document (or its rows as CSV) to --out or stdout."""
    if run.fmt == "csv" and rows is not None:
        buffer = io.StringIO()
        fieldnames = sorted({key for row in rows for key in row})
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        text = buffer.getvalue()
    else:
        text = json.dumps({"schema": config.SCHEMA_VERSION, **document}, sort_keys=True, indent=2) + "\n"
    if run.out is None:
        sys.stdout.write(text)
    else:
        run.out.parent.mkdir(parents=True, exist_ok=True)
        run.out.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {run.out}")


def _complex_list(values: np.ndarray) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex)]


def _value_row(value) -> Dict[str, Any]:
    return {
        "re": float(np.real(value.value)),
        "im": float(np.imag(value.value)),
        "abs_error_estimate": value.abs_error_estimate,
        "method": value.method,
        "samples": value.samples,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_info(run: RunConfig, args: argparse.Namespace) -> int:
    algebra = run.algebra
    info = algebra.describe()
    info["n_over_r"] = algebra.dim / algebra.rank
    _emit(run, {"command": "info", "info": info}, [info])
    return EXIT_OK


def _require_x(run: RunConfig, args: argparse.Namespace) -> Element:
    if not args.x:
        raise ParameterError("--x is required")
    return parse_element(run.algebra, args.x)


def cmd_spectral(run: RunConfig, args: argparse.Namespace) -> int:
    data = spectral(_require_x(run, args), tol=run.tol)
    document = {
        "command": "spectral",
        "eigenvalues": list(data.eigenvalues),
        "frame": [e.coords.tolist() for e in data.frame.idempotents],
        "determinant": data.determinant,
        "residual": data.residual,
    }
    rows = [{"i": i + 1, "eigenvalue": lam} for i, lam in enumerate(data.eigenvalues)]
    _emit(run, document, rows)
    return EXIT_OK


def cmd_orbit(run: RunConfig, args: argparse.Namespace) -> int:
    report = rank_signature(_require_x(run, args), tol=run.tol)
    row = {"rank": report.rank, "p": report.label.p, "q": report.label.q, "orbit": report.label.name}
    document = {"command": "orbit", **row, "eigenvalues": list(report.eigenvalues), "warnings": list(report.warnings)}
    for warning in report.warnings:
        logger.warning(warning)
    _emit(run, document, [row])
    return EXIT_OK


def cmd_gamma(run: RunConfig, args: argparse.Namespace) -> int:
    rows = []
    for text in _parse_list(args.s, str):
        point = _parse_point(text)
        value = gamma_omega(point, run.partition, run.algebra)
        row = {"s": text, "re": value.real, "im": value.imag}
        if args.check:
            t = float(point) + run.partition.parts[-1] + run.algebra.dim / run.algebra.rank
            mc = cone_gamma_mc(t, run.algebra, samples=run.samples, seed=run.seed)
            row.update({"cone_t": t, "cone_exact": gamma_omega_cone(t, run.algebra).real,
                        "cone_mc": mc.value.real, "cone_mc_error": mc.abs_error_estimate})
        rows.append(row)
    _emit(run, {"command": "gamma", "config": run.describe(), "rows": rows}, rows)
    return EXIT_OK


def _window(args: argparse.Namespace) -> tuple:
    bounds = _parse_list(args.window, Fraction) if args.window else [Fraction(-5), Fraction(2)]
    if len(bounds) != 2:
        raise ParameterError(f"--window needs two values, got {args.window}")
    return bounds[0], bounds[1]


def cmd_criticals(run: RunConfig, args: argparse.Namespace) -> int:
    rows = [
        {"s0": str(point), "multiplicity": multiplicity}
        for point, multiplicity in critical_set(run.partition, run.algebra, _window(args))
    ]
    _emit(run, {"command": "criticals", "config": run.describe(), "rows": rows}, rows)
    return EXIT_OK


def cmd_poleatlas(run: RunConfig, args: argparse.Namespace) -> int:
    c = run.coefficients(args.c)
    rows = []
    for point, order in gamma_poles(run.partition, run.algebra, _window(args)):
        try:
            report = pole_order_predict(c, run.partition, point, run.algebra, tol=run.tol)
        except UnsupportedPointError as e:
            rows.append({"s0": str(point), "o_mult": order, "error": str(e)})
            continue
        row = report.to_json()
        row["support_rank_by_h"] = json.dumps(row["support_rank_by_h"], sort_keys=True)
        rows.append(row)
    _emit(run, {"command": "poleatlas", "config": run.describe(), "c": _complex_list(c), "rows": rows}, rows)
    return EXIT_OK


def _test_function(run: RunConfig, args: argparse.Namespace) -> TestFunction:
    center = parse_element(run.algebra, args.x).coords if args.x else None
    return TestFunction.gaussian(run.algebra, center=center, width=args.width)


def cmd_zeta(run: RunConfig, args: argparse.Namespace) -> int:
    c = run.coefficients(args.c)
    if args.j is not None:
        c = np.zeros(run.algebra.rank + 1, dtype=complex)
        c[args.j] = 1.0
    f = _test_function(run, args)
    rows = []
    for text in _parse_list(args.s, str):
        value = combination_eval(c, run.partition, f, _parse_complex(text), run.budget())
        rows.append({"s": text, **_value_row(value)})
    _emit(run, {"command": "zeta", "config": run.describe(), "c": _complex_list(c), "test_function": f.describe(), "rows": rows}, rows)
    return EXIT_OK


def cmd_laurent(run: RunConfig, args: argparse.Namespace) -> int:
    if not args.s:
        raise ParameterError("--s is required")
    c = run.coefficients(args.c)
    f = _test_function(run, args)
    s0 = _parse_point(args.s)
    expansion = laurent(c, run.partition, f, s0, args.radius, run.circle_points, run.budget())
    rows = [
        {"power": p, "re": v.real, "im": v.imag, "error": expansion.errors[p], "noise_floor": expansion.noise_floor[p]}
        for p, v in sorted(expansion.coefficients.items())
    ]
    document = {"command": "laurent", "config": run.describe(), "c": _complex_list(c), "expansion": expansion.to_json()}
    try:
        document["prediction"] = pole_order_predict(c, run.partition, s0, run.algebra, tol=run.tol).to_json()
    except UnsupportedPointError as e:
        document["prediction"] = {"error": str(e)}
    _emit(run, document, rows)
    return EXIT_OK


def cmd_verify(run: RunConfig, args: argparse.Namespace) -> int:
    names = args.suite or ["all"]
    s_values = _parse_list(args.s, float) or [0.7]
    settings = SuiteSettings(
        family=run.algebra.family.value,
        rank=run.algebra.rank,
        dim=run.algebra.dim,
        m=run.partition.parts,
        s=s_values[0],
        seed=run.seed,
        samples=run.samples,
        threads=run.threads,
    )
    reports = run_suite(names, settings)
    out_dir = run.out or Path(config.OUTPUT_DIR)
    write_reports(reports, out_dir, settings)
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {report.name}: deviation {report.max_relative_deviation:.3e} (tolerance {report.tolerance:.3e})")
    failed = [report for report in reports if not report.passed]
    if failed:
        logger.error(f"First failing check: {failed[0].name}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "spectral": cmd_spectral,
    "orbit": cmd_orbit,
    "gamma": cmd_gamma,
    "criticals": cmd_criticals,
    "poleatlas": cmd_poleatlas,
    "zeta": cmd_zeta,
    "laurent": cmd_laurent,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jordan-zeta", description="Zeta integrals on simple Euclidean Jordan algebras")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("suite", nargs="*", help="verify: check names or 'all'")
    parser.add_argument("--family", default="symr")
    parser.add_argument("--rank", type=int, default=2)
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--m", default=None, help="partition, e.g. 2,1,0")
    parser.add_argument("--s", default=None, help="comma-separated points; rationals like -3/2 stay exact")
    parser.add_argument("--j", type=int, default=None)
    parser.add_argument("--c", default=None, help="r + 1 coefficients (complex allowed, e.g. 1,0,1j)")
    parser.add_argument("--x", default=None, help="element: JSON coordinates, matrix rows, or (lambda|u1,...)")
    parser.add_argument("--width", type=float, default=1.0, help="Gaussian test-function width")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--circle-points", type=int, default=None)
    parser.add_argument("--radius", type=float, default=None)
    parser.add_argument("--window", default=None, help="lo,hi")
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--check", action="store_true", help="gamma: add the Monte-Carlo cone integral")
    parser.add_argument("--weight", default=None, help="refuse to run unless this weight is spherical")
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--log-file", default=None)
    parser.add_argument("--config", default=None, help="YAML configuration file")
    parser.add_argument("--env-file", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        0 on success, 1 if a check failed, 2 on usage or parameter errors,
        3 when a numerical budget is exhausted
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        if args.config or args.env_file:
            apply_config(load_config(args.config, args.env_file))
        setup_logging(args.log_level, args.log_file)
        if args.command != "verify" and args.suite:
            raise ParameterError(f"Unexpected arguments {args.suite} for '{args.command}'")
        if args.weight:
            decomposition = spherical_gate(_parse_list(args.weight, int))
            logger.info(f"Weight {args.weight} is spherical: partition {decomposition.partition}")
        run = RunConfig.from_args(args)
        return COMMANDS[args.command](run, args)
    except _BUDGET_ERRORS as e:
        logger.error(f"Numerical budget exhausted: {e}")
        return EXIT_BUDGET
    except (JordanError, ConfigError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
