"""
Checks of the Krylov solution: solvability, subspace structure, reducibility,
minimal norm, uniqueness and cyclicity.
"""
from typing import List

import numpy as np

from src.krylov_engine import distance_curve
from src.solvability import (
    cyclicity_check,
    invariance_residuals,
    krylov_subspace_structure_check,
    minimal_norm_check,
    pseudoinverse_solution,
    reducibility_residual,
    uniqueness_check,
)
from src.tools import CheckContext, CheckOutcome
from src.utils.validators import relative


def run_solution(ctx: CheckContext) -> List[CheckOutcome]:
    """
    Residual, Krylov membership and kernel component of f∘, and its distance
    to the dense pseudoinverse solution.
    """
    report = ctx.report
    model = ctx.model
    scale = report.norm
    oracle = pseudoinverse_solution(model, ctx.datum)
    if report.basis is not None:
        ctx.curves["distance_vs_m"] = [
            (m, relative(d, scale)) for m, d in enumerate(distance_curve(report.basis, report.solution), 1)
        ]
    return [
        ctx.outcome("solution", "residual", relative(report.residual, model.norm * scale), warnings=report.warnings),
        ctx.outcome("solution", "distance_in_krylov", relative(report.distance_in_krylov, scale)),
        ctx.outcome("solution", "kernel_component", relative(report.kernel_component, scale)),
        ctx.outcome("solution", "oracle", relative(float(np.linalg.norm(report.solution - oracle)), scale)),
    ]


def run_structure(ctx: CheckContext) -> List[CheckOutcome]:
    """Largest principal angle between K(A, g) and span{Pₙg}."""
    return [ctx.outcome("structure", "max_angle", krylov_subspace_structure_check(ctx.model, ctx.datum))]


def run_reducibility(ctx: CheckContext) -> List[CheckOutcome]:
    basis = ctx.basis
    into, out_of = invariance_residuals(ctx.model, basis, seed=ctx.seed)
    return [
        ctx.outcome("reducibility", "residual", reducibility_residual(ctx.model, ctx.datum, basis)),
        ctx.outcome("reducibility", "invariance", max(into, out_of)),
    ]


def run_minimal_norm(ctx: CheckContext) -> List[CheckOutcome]:
    result = minimal_norm_check(ctx.model, ctx.report, trials=ctx.param("trials"), seed=ctx.seed)
    message = "A is injective; the check holds vacuously" if result.vacuous else ""
    return [
        ctx.outcome("minimal_norm", "deviation", result.max_deviation, message=message),
        ctx.outcome("minimal_norm", "kernel_residual", result.max_kernel_residual),
    ]


def run_uniqueness(ctx: CheckContext) -> List[CheckOutcome]:
    """
    f∘ must be the only solution inside K(A, g). A rank-deficient restricted
    problem fails outright.
    """
    result = uniqueness_check(ctx.model, ctx.datum, ctx.report)
    measured = result.deviation
    message = ""
    if not result.passed and result.deviation <= ctx.threshold("uniqueness", "deviation"):
        measured = float("inf")
        message = f"A restricted to K(A, g) is singular (σ_min = {result.restricted_sigma_min:.3e})"
    return [ctx.outcome("uniqueness", "deviation", measured, message=message)]


def run_cyclicity(ctx: CheckContext) -> List[CheckOutcome]:
    """N − d for the cyclic proof vector of the model."""
    result = cyclicity_check(ctx.model)
    return [
        ctx.outcome(
            "cyclicity",
            "dimension_deficit",
            result.dim - result.krylov_dimension,
            message=f"Krylov dimension {result.krylov_dimension} of {result.dim}",
        )
    ]
