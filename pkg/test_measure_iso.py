"""
Tests for the scalar spectral measure and the isomorphism identities.
"""
import numpy as np
import numpy.testing as npt
import pytest

from src.errors import DegreeTooLarge
from src.operator_model import Conjugation, SpectrumSpec, build_model, generate_spectrum
from src.measure_iso import (
    BivariatePolynomial,
    bijection_check,
    converse_criterion_check,
    functional_image,
    gram_moment_check,
    isometry_check,
    krylov_preimage,
    random_bivariate,
    scalar_measure,
)
from src.solvability import reducibility_residual


def diag_model(values, kernel_dim=0):
    return build_model(SpectrumSpec.from_eigenvalues(values, kernel_dim=kernel_dim))


@pytest.fixture
def dense_model():
    spectrum = generate_spectrum("random_annulus", 30, kernel_dim=2, seed=21, r_min=0.3)
    return build_model(spectrum, Conjugation.haar_unitary(8))


@pytest.fixture
def generic_vector(dense_model):
    rng = np.random.default_rng(3)
    g = rng.standard_normal(dense_model.dim) + 1j * rng.standard_normal(dense_model.dim)
    return g / np.linalg.norm(g)


def test_eigenvector_measure_is_one_atom():
    measure = scalar_measure(diag_model([1.0, 0.5]), [0, 1])
    assert len(measure.atoms) == 1
    assert measure.atoms[0].point == 0.5
    assert measure.atoms[0].weight == pytest.approx(1.0)


def test_two_atom_example():
    measure = scalar_measure(diag_model([1.0, 0.5]), [3 / 5, 4 / 5])
    npt.assert_allclose(measure.points, [1.0, 0.5])
    npt.assert_allclose(measure.weights, [9 / 25, 16 / 25])
    assert measure.total_mass == pytest.approx(1.0)


def test_zero_vector_has_empty_measure():
    measure = scalar_measure(diag_model([1.0, 0.5]), [0, 0])
    assert measure.atoms == ()
    assert measure.total_mass == 0.0


def test_kernel_atom():
    measure = scalar_measure(diag_model([1.0], kernel_dim=2), [1, 1, 1])
    assert [a.index for a in measure.atoms] == [0, 1]
    assert measure.atoms[0].point == 0
    assert measure.atoms[0].weight == pytest.approx(2.0)


def test_measure_json():
    document = scalar_measure(diag_model([1j, 0.5]), [1, 1]).to_dict()
    assert document["total_mass"] == pytest.approx(2.0)
    assert {"re", "im", "weight"} == set(document["atoms"][0])


@pytest.mark.parametrize("seed", range(10))
def test_mass_conservation(seed):
    spectrum = generate_spectrum("random_annulus", 12, kernel_dim=seed % 3, seed=seed)
    model = build_model(spectrum, Conjugation.haar_unitary(seed + 100))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    assert abs(scalar_measure(model, g).total_mass - np.vdot(g, g).real) <= 1e-12 * np.vdot(g, g).real


def test_pushforward_consistency(dense_model, generic_vector):
    diagonal = build_model(dense_model.spectrum)
    dense = scalar_measure(dense_model, generic_vector)
    pushed = scalar_measure(diagonal, dense_model.to_eigen(generic_vector))
    assert [a.index for a in dense.atoms] == [a.index for a in pushed.atoms]
    npt.assert_allclose(dense.weights, pushed.weights, atol=1e-10)


def test_integrate():
    measure = scalar_measure(diag_model([1.0, 0.5]), [3 / 5, 4 / 5])
    assert abs(measure.integrate(lambda z: z) - (9 / 25 + 8 / 25)) <= 1e-15
    assert abs(measure.integrate([1, 1]) - 1.0) <= 1e-15


def test_moment_identity_on_dense_model(dense_model, generic_vector):
    result = gram_moment_check(dense_model, generic_vector, 6)
    assert result.passed
    assert result.deviation <= 1e-10


def test_moment_identity_for_eigenvector():
    model = diag_model([0.6j, 0.3])
    result = gram_moment_check(model, [2, 0], 4)
    assert result.deviation <= 1e-14


def test_moment_overflow_guard():
    with pytest.raises(DegreeTooLarge):
        gram_moment_check(diag_model([1e10, 1.0]), [1, 1], 40)


def test_bivariate_polynomial():
    q = BivariatePolynomial({(1, 1): 1.0, (0, 0): 2.0})
    assert q.degree == 2
    assert abs(q.evaluate(1j) - 3.0) <= 1e-15
    assert random_bivariate(4, seed=1).degree == 4
    assert random_bivariate(3, seed=2) == random_bivariate(3, seed=2)


def test_isometry_with_constant_polynomial(dense_model, generic_vector):
    result = isometry_check(dense_model, generic_vector, BivariatePolynomial({(0, 0): 1.0}))
    assert result.passed
    assert result.image_norm_sq == pytest.approx(1.0)


def test_isometry_with_conjugate_is_reducibility(dense_model, generic_vector):
    result = isometry_check(dense_model, generic_vector, BivariatePolynomial({(0, 1): 1.0}))
    assert result.passed
    assert result.membership == pytest.approx(reducibility_residual(dense_model, generic_vector), abs=1e-12)


def test_isometry_with_modulus_squared(dense_model, generic_vector):
    result = isometry_check(dense_model, generic_vector, BivariatePolynomial({(1, 1): 1.0}))
    image = dense_model.apply(dense_model.apply_adjoint(generic_vector))
    measure = scalar_measure(dense_model, generic_vector)
    expected = np.sum(np.abs(measure.points) ** 4 * measure.weights)
    assert np.vdot(image, image).real == pytest.approx(expected, rel=1e-10)
    assert result.deviation <= 1e-10


def test_isometry_random_polynomials(dense_model, generic_vector):
    for seed in range(50):
        result = isometry_check(dense_model, generic_vector, random_bivariate(4, seed))
        assert result.deviation <= 1e-9
        assert result.membership <= 1e-8


def test_converse_example():
    result = converse_criterion_check(diag_model([1j, 2j]), np.array([1, 1]) / np.sqrt(2))
    assert result.passed
    assert result.adjoint_norm_sq == pytest.approx(5 / 2)


def test_converse_on_kernel_vector():
    result = converse_criterion_check(diag_model([1.0], kernel_dim=1), [0, 1])
    assert result.passed
    assert result.adjoint_norm_sq == 0.0
    assert result.apply_norm_sq == 0.0


def test_converse_on_dense_model(dense_model, generic_vector):
    result = converse_criterion_check(dense_model, generic_vector)
    assert result.passed
    assert abs(np.sqrt(result.adjoint_norm_sq) - np.sqrt(result.apply_norm_sq)) <= 1e-10 * np.sqrt(result.apply_norm_sq)


def test_preimage_of_powers():
    model = diag_model([1.0, 0.5, 0.25])
    g = np.array([1.0, 2.0, 3.0])
    v = model.apply(model.apply(g)) + g
    npt.assert_allclose(krylov_preimage(model, g, v), [2.0, 1.25, 1.0625])


def test_functional_image_and_bijection(dense_model, generic_vector):
    atoms = len(scalar_measure(dense_model, generic_vector).atoms)
    values = np.linspace(-1, 1, atoms) + 0.5j
    v = functional_image(dense_model, generic_vector, values)
    npt.assert_allclose(krylov_preimage(dense_model, generic_vector, v), values, atol=1e-10)
    assert bijection_check(dense_model, generic_vector, v).passed
