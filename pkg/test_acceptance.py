"""
Property grids over seeded models: Krylov solvability, subspace structure,
reducibility, indicator polynomials, cyclicity and the isomorphism identities.
"""
import itertools

import numpy as np
import pytest

from src.krylov_engine import arnoldi, krylov_dimension
from src.measure_iso import converse_criterion_check, gram_moment_check, isometry_check, random_bivariate, scalar_measure
from src.operator_model import KERNEL_INDEX, Conjugation, build_model, generate_spectrum
from src.solvability import (
    cyclic_vector,
    invariance_residuals,
    krylov_solution,
    krylov_subspace_structure_check,
    pseudoinverse_solution,
    reducibility_residual,
)
from src.spectral_projection import (
    PolynomialMethod,
    SpectrumSplit,
    adaptive_riesz_projection,
    exact_projection_apply,
    indicator_polynomial,
    least_squares_sequence,
    projection_approx_error,
    propose_contours,
    riesz_projection_quadrature,
)

SOLVABILITY_CASES = [
    (family, count, kernel_dim, conjugated, repetition)
    for family, count in itertools.product(("power_decay", "random_annulus"), (16, 64))
    for kernel_dim in (0, 1, 3)
    for conjugated in (False, True)
    for repetition in range(4)
] + [
    ("exp_decay", 16, kernel_dim, conjugated, 0) for kernel_dim in (0, 1, 3) for conjugated in (False, True)
] + [
    (family, 256, kernel_dim, conjugated, 0)
    for family in ("power_decay", "random_annulus")
    for kernel_dim in (0, 3)
    for conjugated in (False, True)
]


def seeded_model(family, count, kernel_dim, conjugated, seed):
    spectrum = generate_spectrum(family, count, kernel_dim, seed=seed)
    conjugation = Conjugation.haar_unitary(seed + 1000) if conjugated else Conjugation.diagonal()
    return build_model(spectrum, conjugation)


def range_datum(model, seed):
    rng = np.random.default_rng(seed)
    coordinates = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    coordinates[model.block_index == KERNEL_INDEX] = 0.0
    g = model.from_eigen(coordinates)
    return g / np.linalg.norm(g)


def case_id(case):
    family, count, kernel_dim, conjugated, repetition = case
    return f"{family}-N{count}-k{kernel_dim}-{'haar' if conjugated else 'diag'}-r{repetition}"


@pytest.fixture(params=SOLVABILITY_CASES, ids=case_id)
def solvable_case(request):
    family, count, kernel_dim, conjugated, _ = request.param
    index = SOLVABILITY_CASES.index(request.param)
    model = seeded_model(family, count, kernel_dim, conjugated, seed=index)
    return model, range_datum(model, index + 500)


def test_krylov_solution_certificates(solvable_case):
    model, g = solvable_case
    report = krylov_solution(model, g)
    assert report.status == "solved"
    assert report.residual <= 1e-10 * model.norm * report.norm
    assert report.distance_in_krylov <= 1e-8 * report.norm
    assert report.kernel_component <= 1e-12 * report.norm


def test_krylov_solution_matches_dense_oracle(solvable_case):
    model, g = solvable_case
    report = krylov_solution(model, g)
    oracle = pseudoinverse_solution(model, g)
    assert np.linalg.norm(report.solution - oracle) <= 1e-8 * report.norm


def test_krylov_span_matches_spectral_span(solvable_case):
    model, g = solvable_case
    assert krylov_subspace_structure_check(model, g) <= 1e-8


def test_krylov_subspace_reduces_operator(solvable_case):
    model, g = solvable_case
    basis = arnoldi(model, g)
    assert reducibility_residual(model, g, basis) <= 1e-8
    into, out_of = invariance_residuals(model, basis, seed=0)
    assert max(into, out_of) <= 1e-8 * model.norm


@pytest.mark.parametrize("conjugated", [False, True])
def test_exp_decay_krylov_space_stops_at_rounding_level(conjugated):
    model = seeded_model("exp_decay", 256, 3, conjugated, seed=0)
    basis = arnoldi(model, range_datum(model, 1))
    assert basis.breakdown
    # eigenvalues below 1e-12·‖A‖ are unreachable from g
    assert basis.dim < 100


@pytest.fixture(params=range(20))
def cluster_case(request):
    seed = request.param
    spectrum = generate_spectrum("two_cluster", 8, seed=seed, cluster_radius=0.1)
    model = build_model(spectrum, Conjugation.haar_unitary(seed + 2000))
    sigma1 = [n for n in spectrum.spectral_indices if spectrum.eigenvalue(n).real > 0]
    split = SpectrumSplit.from_indices(model, sigma1)
    assert split.gap >= 0.2 * model.norm
    return model, split, seed


def test_lagrange_indicator_reproduces_projection(cluster_case):
    model, split, _ = cluster_case
    p = indicator_polynomial(model, split, PolynomialMethod.LAGRANGE)
    assert projection_approx_error(model, p) <= 1e-9


def test_least_squares_errors_strictly_decrease(cluster_case):
    model, split, _ = cluster_case
    errors = [p.sup_error for p in least_squares_sequence(model, split, (4, 8, 16), 200)]
    assert errors[0] > errors[1] > errors[2]


def test_quadrature_matches_exact_projection(cluster_case):
    model, split, seed = cluster_case
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    contour, _ = propose_contours(model, split)
    exact = exact_projection_apply(model, split, v)
    result = adaptive_riesz_projection(model, contour, v)
    assert result.converged
    assert np.linalg.norm(result.vector - exact) <= 1e-10 * np.linalg.norm(v)

    coarse = np.linalg.norm(riesz_projection_quadrature(model, contour, v, 8) - exact)
    fine = np.linalg.norm(riesz_projection_quadrature(model, contour, v, 16) - exact)
    assert fine <= 0.1 * coarse


@pytest.mark.parametrize(
    "family,count,kernel_dim,seed",
    [
        (family, count, kernel_dim, seed)
        for family in ("power_decay", "random_annulus")
        for count, kernel_dim, seed in [(8, 0, 1), (16, 1, 2), (24, 0, 3), (32, 1, 4), (48, 0, 5)]
    ]
    + [("exp_decay", count, kernel_dim, seed) for count, kernel_dim, seed in [(4, 1, 6), (8, 0, 7), (12, 1, 8)]]
    + [("two_cluster", count, 1, seed) for count, seed in [(6, 9), (10, 10)]],
)
def test_cyclic_proof_vector_generates_everything(family, count, kernel_dim, seed):
    model = seeded_model(family, count, kernel_dim, True, seed)
    assert krylov_dimension(model, cyclic_vector(model)) == model.dim


@pytest.fixture(params=[("random_annulus", 24, 2, 0), ("random_annulus", 32, 0, 1), ("power_decay", 24, 1, 2)])
def measure_case(request):
    family, count, kernel_dim, seed = request.param
    model = seeded_model(family, count, kernel_dim, True, seed)
    rng = np.random.default_rng(seed + 50)
    g = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    return model, g / np.linalg.norm(g)


def test_measure_mass_and_moments(measure_case):
    model, g = measure_case
    assert model.norm <= 1.0
    assert abs(scalar_measure(model, g).total_mass - 1.0) <= 1e-12
    moments = gram_moment_check(model, g, 6)
    assert moments.deviation <= 1e-10


def test_isometry_for_random_polynomials(measure_case):
    model, g = measure_case
    basis = arnoldi(model, g)
    for seed in range(50):
        result = isometry_check(model, g, random_bivariate(4, seed), basis)
        assert result.deviation <= 1e-9
        assert result.membership <= 1e-8


def test_adjoint_and_operator_norms_agree(measure_case):
    model, g = measure_case
    result = converse_criterion_check(model, g)
    assert result.passed
    assert abs(np.sqrt(result.adjoint_norm_sq) - np.sqrt(result.apply_norm_sq)) <= 1e-10 * np.sqrt(result.apply_norm_sq)
