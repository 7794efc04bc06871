"""
Certification checks run by the harness, one runner per check name.

A runner takes a CheckContext and returns one CheckOutcome per metric. Each
outcome passes iff measured <= threshold; thresholds come from
DEFAULT_TOLERANCES unless the experiment overrides them.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.krylov_engine import KrylovBasis, arnoldi
from src.operator_model import CompactNormalModel
from src.solvability import KrylovSolutionReport, krylov_solution
from src.spectral_projection import SpectrumSplit

DEFAULT_TOLERANCES: Dict[str, float] = {
    "solution:residual": 1e-10,
    "solution:distance_in_krylov": 1e-8,
    "solution:kernel_component": 1e-12,
    "solution:oracle": 1e-8,
    "structure:max_angle": 1e-8,
    "reducibility:residual": 1e-8,
    "reducibility:invariance": 1e-8,
    "minimal_norm:deviation": 1e-10,
    "minimal_norm:kernel_residual": 1e-10,
    "uniqueness:deviation": 1e-8,
    "cyclicity:dimension_deficit": 0.0,
    "projection_quadrature:error": 1e-10,
    "projection_quadrature:convergence_ratio": 0.1,
    "indicator_polynomial:lagrange_error": 1e-9,
    "indicator_polynomial:ls_monotonicity": 1.0 - 1e-9,
    "indicator_polynomial:ls_cross_check": 1e-9,
    "indicator_polynomial:bound_ratio": 1.0,
    "measure:mass": 1e-12,
    "measure:moments": 1e-9,
    "isometry:deviation": 1e-9,
    "isometry:membership": 1e-8,
    "isometry:bijection": 1e-9,
    "converse:deviation": 1e-10,
    "converse:reducibility": 1e-8,
}

CHECK_NAMES: Tuple[str, ...] = (
    "solution",
    "structure",
    "reducibility",
    "minimal_norm",
    "uniqueness",
    "cyclicity",
    "projection_quadrature",
    "indicator_polynomial",
    "measure",
    "isometry",
    "converse",
)

DEFAULT_PARAMS: Dict[str, Any] = {
    "k_max": 6,
    "poly_degree": 4,
    "poly_samples": 50,
    "trials": 100,
    "ls_degrees": [4, 8, 16],
    "ls_samples": 200,
}


@dataclass(frozen=True)
class CheckOutcome:
    metric: str
    measured: float
    threshold: float
    warnings: Tuple[str, ...] = ()
    message: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.threshold)


@dataclass
class CheckContext:
    """
    Everything one repetition of an experiment hands to its checks.

    Attributes:
        model: The operator
        datum: The vector g
        seed: Seed for the randomness of the checks
        split: Spectrum split for the projection checks
        params: Check parameters (see DEFAULT_PARAMS)
        tolerances: Per-metric threshold overrides
        curves: Convergence curves collected by the checks, name -> (x, y) pairs
    """

    model: CompactNormalModel
    datum: np.ndarray
    seed: int
    split: Optional[SpectrumSplit] = None
    params: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    curves: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)

    def threshold(self, check: str, metric: str) -> float:
        key = f"{check}:{metric}"
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def param(self, name: str) -> Any:
        return self.params.get(name, DEFAULT_PARAMS[name])

    def outcome(self, check: str, metric: str, measured: float, **kwargs) -> CheckOutcome:
        return CheckOutcome(metric, float(measured), self.threshold(check, metric), **kwargs)

    @cached_property
    def report(self) -> KrylovSolutionReport:
        return krylov_solution(self.model, self.datum)

    @cached_property
    def basis(self) -> KrylovBasis:
        return arnoldi(self.model, self.datum)
