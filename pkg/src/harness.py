"""
Configuration-driven certification suites.

A suite is a JSON document {"experiments": [...]}. Each experiment builds a
seeded model and datum per repetition and runs its checks; every metric of
every check becomes one ReportRecord. run_suite executes experiments
concurrently and writes report.csv, report.json and the convergence curves.
"""
import asyncio
import csv
import fnmatch
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import jsonschema
import jsonschema.exceptions
import numpy as np

from src.errors import ParseError, UnknownSpectralIndex, ValidationError
from src.operator_model import (
    KERNEL_INDEX,
    CompactNormalModel,
    Conjugation,
    ConjugationKind,
    SpectrumFamily,
    build_model,
    generate_spectrum,
)
from src.solvability import cyclic_vector
from src.spectral_projection import SpectrumSplit
from src.tools import CHECK_NAMES, DEFAULT_PARAMS, DEFAULT_TOLERANCES, CheckContext, CheckOutcome
from src.tools import measure_tools, projection_tools, solvability_tools
from src.utils.formatters import pair_to_complex
from src.utils.validators import as_vector

logger = logging.getLogger(__name__)

CHECKS: Dict[str, Callable[[CheckContext], List[CheckOutcome]]] = {
    "solution": solvability_tools.run_solution,
    "structure": solvability_tools.run_structure,
    "reducibility": solvability_tools.run_reducibility,
    "minimal_norm": solvability_tools.run_minimal_norm,
    "uniqueness": solvability_tools.run_uniqueness,
    "cyclicity": solvability_tools.run_cyclicity,
    "projection_quadrature": projection_tools.run_projection_quadrature,
    "indicator_polynomial": projection_tools.run_indicator_polynomial,
    "measure": measure_tools.run_measure,
    "isometry": measure_tools.run_isometry,
    "converse": measure_tools.run_converse,
}

PROJECTION_CHECKS = ("projection_quadrature", "indicator_polynomial")

CSV_COLUMNS = ("experiment", "repetition", "check", "measured", "threshold", "status", "wall_time_s")

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

EXPERIMENT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "operator", "datum", "checks"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "count"],
            "properties": {
                "family": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": [f.value for f in SpectrumFamily]},
                        "alpha": {"type": "number", "exclusiveMinimum": 0},
                        "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "r_min": {"type": "number", "exclusiveMinimum": 0},
                        "r_max": {"type": "number", "exclusiveMinimum": 0},
                        "cluster_radius": {"type": "number", "exclusiveMinimum": 0},
                        "centers": {"type": "array", "items": _PAIR, "minItems": 2, "maxItems": 2},
                    },
                },
                "count": {"type": "integer", "minimum": 1},
                "kernel_dim": {"type": "integer", "minimum": 0},
                "conjugation": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": [c.value for c in ConjugationKind]},
                        "seed": {"type": "integer"},
                    },
                },
                "seed": {"type": "integer"},
                "multiplicities": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "self_adjoint": {"type": "boolean"},
            },
        },
        "datum": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["random", "cyclic_proof_vector", "eigenvector", "custom"]},
                "seed": {"type": "integer"},
                "in_range": {"type": "boolean"},
                "index": {"type": "integer", "minimum": 0},
                "values": {"type": "array", "items": _PAIR, "minItems": 1},
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": "eigenvector"}}}, "then": {"required": ["index"]}},
                {"if": {"properties": {"kind": {"const": "custom"}}}, "then": {"required": ["values"]}},
            ],
        },
        "checks": {"type": "array", "items": {"enum": list(CHECK_NAMES)}, "minItems": 1, "uniqueItems": True},
        "tolerances": {
            "type": "object",
            "propertyNames": {"enum": sorted(DEFAULT_TOLERANCES)},
            "additionalProperties": {"type": "number", "minimum": 0},
        },
        "repetitions": {"type": "integer", "minimum": 1},
        "split": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["largest", "half_plane", "indices"]},
                "sigma1": {"type": "array", "items": {"type": "integer", "minimum": 0}, "uniqueItems": True},
            },
            "if": {"properties": {"kind": {"const": "indices"}}},
            "then": {"required": ["sigma1"]},
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k_max": {"type": "integer", "minimum": 1},
                "poly_degree": {"type": "integer", "minimum": 0},
                "poly_samples": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "ls_degrees": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "ls_samples": {"type": "integer", "minimum": 1},
            },
        },
    },
}

SUITE_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiments"],
    "properties": {"experiments": {"type": "array", "items": EXPERIMENT_SCHEMA}},
}


@dataclass(frozen=True)
class OperatorSpec:
    family: str
    count: int
    kernel_dim: int = 0
    family_params: Dict[str, Any] = field(default_factory=dict)
    conjugation: str = ConjugationKind.DIAGONAL.value
    conjugation_seed: Optional[int] = None
    seed: int = 0
    multiplicities: Optional[Tuple[int, ...]] = None
    self_adjoint: bool = False


@dataclass(frozen=True)
class DatumSpec:
    kind: str
    seed: Optional[int] = None
    in_range: bool = True
    index: Optional[int] = None
    values: Optional[Tuple[complex, ...]] = None


@dataclass(frozen=True)
class SplitSpec:
    kind: str = "largest"
    sigma1: Tuple[int, ...] = ()


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One validated experiment of a suite.

    Attributes:
        name: Unique name within the suite
        operator: Spectrum family, sizes, conjugation and seed
        datum: How g is produced
        checks: Check names, in the order they run
        tolerances: Per-metric threshold overrides
        repetitions: Number of independently seeded repetitions
        split: Spectrum split for the projection checks
        params: Check parameters
    """

    name: str
    operator: OperatorSpec
    datum: DatumSpec
    checks: Tuple[str, ...]
    tolerances: Dict[str, float] = field(default_factory=dict)
    repetitions: int = 1
    split: Optional[SplitSpec] = None
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        op = data["operator"]
        family = dict(op["family"])
        kind = family.pop("kind")
        if "centers" in family:
            family["centers"] = tuple(pair_to_complex(p) for p in family["centers"])
        conjugation = op.get("conjugation", {"kind": ConjugationKind.DIAGONAL.value})
        datum = data["datum"]
        split = data.get("split")
        return cls(
            name=data["name"],
            operator=OperatorSpec(
                family=kind,
                count=op["count"],
                kernel_dim=op.get("kernel_dim", 0),
                family_params=family,
                conjugation=conjugation["kind"],
                conjugation_seed=conjugation.get("seed"),
                seed=op.get("seed", 0),
                multiplicities=tuple(op["multiplicities"]) if "multiplicities" in op else None,
                self_adjoint=op.get("self_adjoint", False),
            ),
            datum=DatumSpec(
                kind=datum["kind"],
                seed=datum.get("seed"),
                in_range=datum.get("in_range", True),
                index=datum.get("index"),
                values=tuple(pair_to_complex(p) for p in datum["values"]) if "values" in datum else None,
            ),
            checks=tuple(data["checks"]),
            tolerances=dict(data.get("tolerances", {})),
            repetitions=data.get("repetitions", 1),
            split=SplitSpec(split["kind"], tuple(split.get("sigma1", ()))) if split else None,
            params=dict(data.get("params", {})),
        )


@dataclass(frozen=True)
class ReportRecord:
    experiment: str
    repetition: int
    check: str
    measured: float
    threshold: float
    status: str
    wall_time: float = 0.0
    message: str = ""
    warnings: Tuple[str, ...] = ()

    @property
    def sort_key(self) -> Tuple[str, int, str]:
        return (self.experiment, self.repetition, self.check)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form; wall time is left out so reports are reproducible."""
        return {
            "experiment": self.experiment,
            "repetition": self.repetition,
            "check": self.check,
            "measured": self.measured if math.isfinite(self.measured) else None,
            "threshold": self.threshold,
            "status": self.status,
            "message": self.message,
            "warnings": list(self.warnings),
        }

    def to_row(self) -> List[Any]:
        return [
            self.experiment,
            self.repetition,
            self.check,
            repr(self.measured),
            repr(self.threshold),
            self.status,
            f"{self.wall_time:.6f}",
        ]


@dataclass(frozen=True)
class SuiteSummary:
    records: Tuple[ReportRecord, ...] = ()
    out_dir: Optional[Path] = None

    @property
    def counts(self) -> Dict[str, int]:
        counts = {"pass": 0, "fail": 0, "warn": 0}
        for record in self.records:
            counts[record.status] += 1
        return counts

    @property
    def ok(self) -> bool:
        return self.counts["fail"] == 0


@dataclass
class ExperimentResult:
    records: List[ReportRecord] = field(default_factory=list)
    curves: Dict[Tuple[int, str], List[Tuple[float, float]]] = field(default_factory=dict)


def derive_seed(*parts: Any) -> int:
    """Stable 63-bit seed from the given parts (e.g. seed, experiment name, repetition)."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _field_path(error: jsonschema.exceptions.ValidationError) -> str:
    path = ""
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


def parse_suite(data: Any) -> List[ExperimentSpec]:
    """
    Validate a decoded suite document and build its experiments.

    Raises:
        ValidationError: On schema violations or duplicate experiment names
    """
    validator = jsonschema.Draft7Validator(SUITE_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise ValidationError(error.message, _field_path(error))

    specs = []
    seen = set()
    for i, experiment in enumerate(data["experiments"]):
        if experiment["name"] in seen:
            raise ValidationError(f"duplicate experiment name {experiment['name']!r}", f"experiments[{i}].name")
        seen.add(experiment["name"])
        specs.append(ExperimentSpec.from_dict(experiment))
    return specs


def load_suite(path: Union[str, Path]) -> List[ExperimentSpec]:
    """
    Load and validate a suite file.

    Args:
        path: JSON suite file

    Returns:
        Validated experiment specs in file order

    Raises:
        ParseError: The file is not valid JSON (with line and column)
        ValidationError: The document violates the suite schema
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.lineno, e.colno)
    return parse_suite(data)


def filter_specs(specs: Sequence[ExperimentSpec], pattern: Optional[str]) -> List[ExperimentSpec]:
    if not pattern:
        return list(specs)
    return [s for s in specs if fnmatch.fnmatchcase(s.name, pattern)]


def build_experiment_model(spec: ExperimentSpec, repetition: int) -> CompactNormalModel:
    op = spec.operator
    spectrum = generate_spectrum(
        op.family,
        op.count,
        op.kernel_dim,
        seed=derive_seed(op.seed, spec.name, repetition, "spectrum"),
        multiplicities=op.multiplicities,
        self_adjoint=op.self_adjoint,
        **op.family_params,
    )
    if ConjugationKind(op.conjugation) is ConjugationKind.DIAGONAL:
        return build_model(spectrum, Conjugation.diagonal())
    base = op.seed if op.conjugation_seed is None else op.conjugation_seed
    return build_model(spectrum, Conjugation.haar_unitary(derive_seed(base, spec.name, repetition, "conjugation")))


def build_datum(spec: ExperimentSpec, model: CompactNormalModel, repetition: int) -> np.ndarray:
    datum = spec.datum
    if datum.kind == "cyclic_proof_vector":
        return cyclic_vector(model)
    if datum.kind == "eigenvector":
        block = model.block(datum.index)
        if block.start == block.stop:
            raise UnknownSpectralIndex(f"index {datum.index} has no eigenvectors (empty kernel)")
        coordinates = np.zeros(model.dim, dtype=np.complex128)
        coordinates[block.start] = 1.0
        return model.from_eigen(coordinates)
    if datum.kind == "custom":
        return as_vector(datum.values, model.dim, "g")

    base = spec.operator.seed if datum.seed is None else datum.seed
    rng = np.random.default_rng(derive_seed(base, spec.name, repetition, "datum"))
    coordinates = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    if datum.in_range:
        coordinates[model.block_index == KERNEL_INDEX] = 0.0
    g = model.from_eigen(coordinates)
    return g / np.linalg.norm(g)


def build_split(spec: ExperimentSpec, model: CompactNormalModel) -> SpectrumSplit:
    split = spec.split or SplitSpec()
    if split.kind == "largest":
        sigma1 = [1]
    elif split.kind == "half_plane":
        sigma1 = [n for n in model.spectrum.spectral_indices if model.spectrum.eigenvalue(n).real > 0]
    else:
        sigma1 = list(split.sigma1)
    return SpectrumSplit.from_indices(model, sigma1)


def _error_message(error: BaseException) -> str:
    return f"{type(error).__name__}: {error}"


def _status(outcome: CheckOutcome) -> str:
    if not outcome.passed:
        return "fail"
    return "warn" if outcome.warnings else "pass"


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every repetition of one experiment sequentially."""
    result = ExperimentResult()
    for repetition in range(spec.repetitions):
        try:
            model = build_experiment_model(spec, repetition)
            g = build_datum(spec, model, repetition)
            needs_split = spec.split is not None or any(c in PROJECTION_CHECKS for c in spec.checks)
            split = build_split(spec, model) if needs_split else None
        except Exception as e:
            logger.warning("%s #%d: setup failed: %s", spec.name, repetition, _error_message(e))
            for check in spec.checks:
                result.records.append(
                    ReportRecord(spec.name, repetition, check, math.inf, 0.0, "fail", message=_error_message(e))
                )
            continue

        ctx = CheckContext(
            model=model,
            datum=g,
            seed=derive_seed(spec.operator.seed, spec.name, repetition, "checks"),
            split=split,
            params={**DEFAULT_PARAMS, **spec.params},
            tolerances=spec.tolerances,
        )
        for check in spec.checks:
            started = time.perf_counter()
            try:
                outcomes = CHECKS[check](ctx)
            except Exception as e:
                elapsed = time.perf_counter() - started
                logger.warning("%s #%d %s: %s", spec.name, repetition, check, _error_message(e))
                result.records.append(
                    ReportRecord(spec.name, repetition, check, math.inf, 0.0, "fail", elapsed, _error_message(e))
                )
                continue
            elapsed = time.perf_counter() - started
            for outcome in outcomes:
                result.records.append(
                    ReportRecord(
                        spec.name,
                        repetition,
                        f"{check}:{outcome.metric}",
                        outcome.measured,
                        outcome.threshold,
                        _status(outcome),
                        elapsed,
                        outcome.message,
                        outcome.warnings,
                    )
                )
        for name, points in ctx.curves.items():
            result.curves[(repetition, name)] = points
    logger.info("experiment %s finished (%d records)", spec.name, len(result.records))
    return result


async def run_suite_async(specs: Sequence[ExperimentSpec], parallelism: int = 1) -> List[ExperimentResult]:
    """Run experiments concurrently in worker threads; results keep suite order."""
    semaphore = asyncio.Semaphore(parallelism)

    async def run_one(spec: ExperimentSpec) -> ExperimentResult:
        async with semaphore:
            return await asyncio.to_thread(run_experiment, spec)

    return list(await asyncio.gather(*(run_one(spec) for spec in specs)))


def _write_curve(path: Path, points: Sequence[Tuple[float, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in points:
            writer.writerow([repr(float(x)), repr(float(y))])


def write_reports(
    out_dir: Union[str, Path],
    records: Sequence[ReportRecord],
    results: Sequence[Tuple[ExperimentSpec, ExperimentResult]] = (),
) -> Path:
    """Write report.csv, report.json and curves/ under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = SuiteSummary(tuple(records))

    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())

    document = {"summary": summary.counts, "records": [r.to_dict() for r in records]}
    (out_dir / "report.json").write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    curves_dir = out_dir / "curves"
    curves_dir.mkdir(exist_ok=True)
    for spec, result in results:
        for (repetition, name), points in sorted(result.curves.items()):
            _write_curve(curves_dir / f"{spec.name}__r{repetition}__{name}.csv", points)
    logger.info("wrote reports to %s", out_dir)
    return out_dir


def run_suite(
    specs: Sequence[ExperimentSpec],
    parallelism: int = 1,
    out_dir: Union[str, Path] = "krylovlab-out",
) -> SuiteSummary:
    """
    Run a suite and write its reports.

    Args:
        specs: Validated experiments
        parallelism: Maximal number of experiments running at once
        out_dir: Output directory (created if missing)

    Returns:
        SuiteSummary with the sorted records and their pass/fail/warn counts
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    specs = list(specs)
    logger.info("running %d experiment(s) with parallelism %d", len(specs), parallelism)
    results = asyncio.run(run_suite_async(specs, parallelism)) if specs else []
    records = sorted((r for result in results for r in result.records), key=lambda r: r.sort_key)
    path = write_reports(out_dir, records, list(zip(specs, results)))
    summary = SuiteSummary(tuple(records), path)
    logger.info("suite finished: %s", summary.counts)
    return summary
