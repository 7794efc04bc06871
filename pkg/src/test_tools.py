"""
Tests for the check runners, called directly through a CheckContext.
"""
import math

import numpy as np
import pytest

from src.operator_model import Conjugation, SpectrumSpec, build_model, generate_spectrum
from src.spectral_projection import SpectrumSplit
from src.tools import DEFAULT_TOLERANCES, CheckContext, CheckOutcome
from src.tools import measure_tools, projection_tools, solvability_tools


def diag_model(values, kernel_dim=0):
    return build_model(SpectrumSpec.from_eigenvalues(values, kernel_dim=kernel_dim))


def context(model, g, split=None, **kwargs):
    return CheckContext(model=model, datum=np.asarray(g, dtype=np.complex128), seed=11, split=split, **kwargs)


def all_passed(outcomes):
    return all(o.passed for o in outcomes)


@pytest.fixture
def cluster_ctx():
    spectrum = generate_spectrum("two_cluster", 8, seed=3, cluster_radius=0.1)
    model = build_model(spectrum, Conjugation.haar_unitary(4))
    sigma1 = [n for n in spectrum.spectral_indices if spectrum.eigenvalue(n).real > 0]
    rng = np.random.default_rng(0)
    g = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    return context(model, g, SpectrumSplit.from_indices(model, sigma1))


@pytest.fixture
def measure_ctx():
    spectrum = generate_spectrum("random_annulus", 16, kernel_dim=1, seed=5, r_min=0.3)
    model = build_model(spectrum, Conjugation.haar_unitary(6))
    rng = np.random.default_rng(1)
    g = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    return context(model, g / np.linalg.norm(g), params={"poly_samples": 10})


def test_outcome_passes_below_threshold():
    assert CheckOutcome("m", 1e-12, 1e-10).passed
    assert not CheckOutcome("m", 1e-8, 1e-10).passed
    assert not CheckOutcome("m", math.nan, 1e-10).passed
    assert not CheckOutcome("m", math.inf, 1e-10).passed


def test_tolerance_override_and_params():
    ctx = context(diag_model([1.0]), [1], tolerances={"measure:mass": 0.5}, params={"k_max": 2})
    assert ctx.threshold("measure", "mass") == 0.5
    assert ctx.threshold("measure", "moments") == DEFAULT_TOLERANCES["measure:moments"]
    assert ctx.param("k_max") == 2
    assert ctx.param("trials") == 100


def test_solution_runner():
    ctx = context(diag_model([1.0, 0.5]), [1, 1])
    outcomes = solvability_tools.run_solution(ctx)
    assert [o.metric for o in outcomes] == ["residual", "distance_in_krylov", "kernel_component", "oracle"]
    assert all_passed(outcomes)
    assert len(ctx.curves["distance_vs_m"]) == 2


def test_solution_runner_for_zero_datum_has_no_curve():
    ctx = context(diag_model([1.0, 0.5], kernel_dim=1), [0, 0, 0])
    assert all_passed(solvability_tools.run_solution(ctx))
    assert "distance_vs_m" not in ctx.curves


def test_structure_and_reducibility_runners():
    ctx = context(diag_model([1.0, 0.5, 0.25], kernel_dim=1), [1, 1, 0, 1])
    assert all_passed(solvability_tools.run_structure(ctx))
    assert all_passed(solvability_tools.run_reducibility(ctx))


def test_minimal_norm_runner_reports_vacuous_case():
    outcomes = solvability_tools.run_minimal_norm(context(diag_model([1.0, 0.5]), [1, 1]))
    assert all_passed(outcomes)
    assert "vacuously" in outcomes[0].message


def test_uniqueness_runner():
    outcomes = solvability_tools.run_uniqueness(context(diag_model([1.0, 0.5, 0.25]), [1, 2, 3]))
    assert all_passed(outcomes)


def test_cyclicity_runner():
    outcome = solvability_tools.run_cyclicity(context(diag_model([1.0, 0.5, 0.25], kernel_dim=1), [1, 0, 0, 0]))[0]
    assert outcome.measured == 0
    assert outcome.passed
    assert outcome.message == "Krylov dimension 4 of 4"


def test_projection_runner_needs_split():
    with pytest.raises(ValueError):
        projection_tools.run_projection_quadrature(context(diag_model([1.0, 0.5]), [1, 1]))


def test_projection_runner_with_empty_sigma1():
    model = diag_model([1.0, 0.5])
    outcomes = projection_tools.run_projection_quadrature(context(model, [1, 1], SpectrumSplit.from_indices(model, [])))
    assert all_passed(outcomes)
    assert outcomes[0].measured == 0.0


def test_projection_quadrature_runner(cluster_ctx):
    outcomes = projection_tools.run_projection_quadrature(cluster_ctx)
    assert all_passed(outcomes)
    curve = cluster_ctx.curves["quadrature_error_vs_K"]
    assert curve[0][0] == 16
    assert all(b[0] == 2 * a[0] for a, b in zip(curve, curve[1:]))


def test_indicator_polynomial_runner():
    model = diag_model([0.8, 0.85, 0.75 + 0.05j, 0.2, 0.25, 0.15 - 0.05j])
    sigma1 = [n for n in model.spectrum.spectral_indices if model.spectrum.eigenvalue(n).real > 0.5]
    ctx = context(model, np.ones(6), SpectrumSplit.from_indices(model, sigma1), params={"ls_degrees": [4, 8]})
    outcomes = projection_tools.run_indicator_polynomial(ctx)
    assert [o.metric for o in outcomes] == ["lagrange_error", "ls_monotonicity", "ls_cross_check", "bound_ratio"]
    assert all_passed(outcomes)
    assert [d for d, _ in ctx.curves["ls_sup_error_vs_degree"]] == [4, 8]


def test_measure_runner(measure_ctx):
    outcomes = measure_tools.run_measure(measure_ctx)
    assert [o.metric for o in outcomes] == ["mass", "moments"]
    assert all_passed(outcomes)


def test_isometry_runner(measure_ctx):
    outcomes = measure_tools.run_isometry(measure_ctx)
    assert [o.metric for o in outcomes] == ["deviation", "membership", "bijection"]
    assert all_passed(outcomes)


def test_isometry_runner_for_zero_datum():
    outcomes = measure_tools.run_isometry(context(diag_model([1.0, 0.5]), [0, 0]))
    assert all(o.measured == 0.0 and o.message == "g = 0" for o in outcomes)


def test_converse_runner(measure_ctx):
    assert all_passed(measure_tools.run_converse(measure_ctx))
