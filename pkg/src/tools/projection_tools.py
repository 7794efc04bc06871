"""
Checks of the spectral projection routines: contour quadrature against the
exact projection, and indicator polynomials.
"""
from typing import List

import numpy as np

from src.spectral_projection import (
    PolynomialMethod,
    SpectrumSplit,
    adaptive_riesz_projection,
    contour_error_bound,
    dense_projection_error,
    exact_projection_apply,
    indicator_polynomial,
    least_squares_sequence,
    projection_approx_error,
    propose_contours,
    riesz_projection_quadrature,
)
from src.tools import CheckContext, CheckOutcome
from src.utils.validators import relative

# errors below this (relative to ‖v‖) are rounding noise
QUADRATURE_FLOOR = 1e-12


def _split(ctx: CheckContext) -> SpectrumSplit:
    if ctx.split is None:
        raise ValueError("projection checks need a split")
    return ctx.split


def run_projection_quadrature(ctx: CheckContext) -> List[CheckOutcome]:
    """
    Adaptive Riesz quadrature around σ₁ against Σ_{n∈σ₁} Pₙv, and the
    error reduction from K to 2K nodes before rounding takes over.
    """
    model = ctx.model
    split = _split(ctx)
    v = ctx.datum
    v_norm = float(np.linalg.norm(v))
    contour, _ = propose_contours(model, split)
    if contour is None:
        return [
            ctx.outcome("projection_quadrature", "error", 0.0, message="σ₁ is empty"),
            ctx.outcome("projection_quadrature", "convergence_ratio", 0.0, message="σ₁ is empty"),
        ]

    exact = exact_projection_apply(model, split, v)
    result = adaptive_riesz_projection(model, contour, v)
    errors = []
    count = 16
    while count <= result.nodes:
        approx = riesz_projection_quadrature(model, contour, v, count)
        errors.append((count, relative(float(np.linalg.norm(approx - exact)), v_norm)))
        count *= 2
    ctx.curves["quadrature_error_vs_K"] = errors

    ratios = [
        relative(later, earlier)
        for (_, earlier), (_, later) in zip(errors, errors[1:])
        if earlier > QUADRATURE_FLOOR
    ]
    warnings = () if result.converged else (f"quadrature stopped at the {result.nodes}-node cap",)
    return [
        ctx.outcome(
            "projection_quadrature",
            "error",
            relative(float(np.linalg.norm(result.vector - exact)), v_norm),
            warnings=warnings,
            message=f"{result.nodes} nodes per circle on {len(contour.circles)} circle(s)",
        ),
        ctx.outcome("projection_quadrature", "convergence_ratio", min(ratios) if ratios else 0.0),
    ]


def run_indicator_polynomial(ctx: CheckContext) -> List[CheckOutcome]:
    """
    Lagrange interpolation error (dense cross-checked), strict decrease of the
    least-squares sequence, and the contour bound against the achieved error.
    """
    model = ctx.model
    split = _split(ctx)
    lagrange = indicator_polynomial(model, split, PolynomialMethod.LAGRANGE)
    lagrange_error = projection_approx_error(model, lagrange)

    sequence = least_squares_sequence(model, split, ctx.param("ls_degrees"), ctx.param("ls_samples"))
    ctx.curves["ls_sup_error_vs_degree"] = [(p.degree, p.sup_error) for p in sequence]
    ratios = [relative(b.sup_error, a.sup_error) for a, b in zip(sequence, sequence[1:])]
    cross_check = max((abs(dense_projection_error(model, p) - p.sup_error) for p in sequence), default=0.0)

    last = sequence[-1] if sequence else lagrange
    bound = contour_error_bound(model, last, propose_contours(model, split))
    return [
        ctx.outcome("indicator_polynomial", "lagrange_error", lagrange_error, message=f"degree {lagrange.degree}"),
        ctx.outcome("indicator_polynomial", "ls_monotonicity", max(ratios) if ratios else 0.0),
        ctx.outcome("indicator_polynomial", "ls_cross_check", cross_check),
        ctx.outcome("indicator_polynomial", "bound_ratio", relative(last.sup_error, bound)),
    ]
