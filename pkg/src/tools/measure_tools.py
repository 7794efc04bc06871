"""
Checks of the scalar spectral measure and the isomorphism identities.
"""
from typing import List

import numpy as np

from src.measure_iso import (
    bijection_check,
    converse_criterion_check,
    functional_image,
    gram_moment_check,
    isometry_check,
    random_bivariate,
    scalar_measure,
)
from src.tools import CheckContext, CheckOutcome
from src.utils.validators import relative


def run_measure(ctx: CheckContext) -> List[CheckOutcome]:
    """Mass conservation and the Gram/moment identity up to k_max."""
    g = ctx.datum
    g_norm_sq = float(np.vdot(g, g).real)
    measure = scalar_measure(ctx.model, g)
    moments = gram_moment_check(ctx.model, g, ctx.param("k_max"))
    return [
        ctx.outcome("measure", "mass", relative(abs(measure.total_mass - g_norm_sq), g_norm_sq)),
        ctx.outcome("measure", "moments", relative(moments.deviation, moments.scale)),
    ]


def run_isometry(ctx: CheckContext) -> List[CheckOutcome]:
    """
    Isometry and Krylov membership for random bivariate polynomials, and the
    round trip T(T⁻¹v) = v.
    """
    model = ctx.model
    g = ctx.datum
    if not np.any(g):
        return [
            ctx.outcome("isometry", metric, 0.0, message="g = 0")
            for metric in ("deviation", "membership", "bijection")
        ]
    basis = ctx.basis
    deviation, membership = 0.0, 0.0
    for k in range(ctx.param("poly_samples")):
        result = isometry_check(model, g, random_bivariate(ctx.param("poly_degree"), seed=ctx.seed + k), basis)
        deviation = max(deviation, result.deviation)
        membership = max(membership, result.membership)

    rng = np.random.default_rng(ctx.seed)
    atoms = len(scalar_measure(model, g).atoms)
    values = rng.standard_normal(atoms) + 1j * rng.standard_normal(atoms)
    bijection = bijection_check(model, g, functional_image(model, g, values))
    return [
        ctx.outcome("isometry", "deviation", deviation),
        ctx.outcome("isometry", "membership", membership),
        ctx.outcome("isometry", "bijection", max(bijection.round_trip, bijection.isometry)),
    ]


def run_converse(ctx: CheckContext) -> List[CheckOutcome]:
    result = converse_criterion_check(ctx.model, ctx.datum)
    return [
        ctx.outcome("converse", "deviation", result.deviation),
        ctx.outcome("converse", "reducibility", result.reducibility),
    ]
