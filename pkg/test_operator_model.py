"""
Tests for the compact normal operator model.
"""
import numpy as np
import numpy.testing as npt
import pytest

from src.errors import DegenerateSpectrum, DimensionError, SpectrumHit, UnknownSpectralIndex
from src.operator_model import (
    Conjugation,
    SpectrumSpec,
    _separate_duplicates,
    build_model,
    generate_spectrum,
    model_from_json,
    model_to_json,
    resolvent_apply,
)


def diag_model(values, kernel_dim=0, multiplicities=None):
    return build_model(SpectrumSpec.from_eigenvalues(values, multiplicities, kernel_dim))


def test_power_decay_moduli():
    spectrum = generate_spectrum("power_decay", 3, seed=11)
    moduli = [abs(e.eigenvalue) for e in spectrum.nonzero_entries]
    npt.assert_allclose(moduli, [1.0, 1 / 2, 1 / 3], rtol=1e-12)
    assert spectrum.tail_bound == pytest.approx(1 / 4)


def test_exp_decay_moduli_and_tail():
    spectrum = generate_spectrum("exp_decay", 5, rho=0.5, seed=2)
    moduli = [abs(e.eigenvalue) for e in spectrum.nonzero_entries]
    npt.assert_allclose(moduli, [1.0, 0.5, 0.25, 0.125, 0.0625], rtol=1e-12)
    assert spectrum.tail_bound == pytest.approx(0.5**5)


def test_kernel_index_set():
    spectrum = generate_spectrum("random_annulus", 1, kernel_dim=1, seed=0)
    assert spectrum.indices == (0, 1)
    assert spectrum.dim == 2


def test_random_annulus_bounds_and_distinct():
    spectrum = generate_spectrum("random_annulus", 50, seed=7, r_min=0.1, r_max=1.0)
    values = np.array([e.eigenvalue for e in spectrum.nonzero_entries])
    assert np.all(np.abs(values) >= 0.1) and np.all(np.abs(values) <= 1.0)
    diffs = np.abs(values[:, None] - values[None, :]) + np.eye(50)
    assert diffs.min() > 0


def test_generation_is_seeded():
    a = generate_spectrum("random_annulus", 10, seed=3)
    b = generate_spectrum("random_annulus", 10, seed=3)
    c = generate_spectrum("random_annulus", 10, seed=4)
    assert a == b
    assert a != c


def test_self_adjoint_spectrum_is_real():
    spectrum = generate_spectrum("power_decay", 8, seed=5, self_adjoint=True)
    assert all(e.eigenvalue.imag == 0 for e in spectrum.nonzero_entries)


def test_two_cluster_values_stay_in_their_disks():
    spectrum = generate_spectrum("two_cluster", 10, seed=1, cluster_radius=0.1, centers=(0.75, -0.75))
    for entry in spectrum.nonzero_entries:
        assert min(abs(entry.eigenvalue - 0.75), abs(entry.eigenvalue + 0.75)) <= 0.1 + 1e-9


def test_multiplicities_set_dimension():
    spectrum = generate_spectrum("power_decay", 3, kernel_dim=2, multiplicities=[1, 2, 3], seed=0)
    assert spectrum.dim == 8
    assert [e.multiplicity for e in spectrum.entries] == [2, 1, 2, 3]


def test_duplicate_eigenvalues_rejected():
    with pytest.raises(DegenerateSpectrum):
        SpectrumSpec.from_eigenvalues([0.5, 0.5])


def test_unknown_index_is_index_error():
    spectrum = SpectrumSpec.from_eigenvalues([1.0, 0.5])
    with pytest.raises(UnknownSpectralIndex):
        spectrum.entry(5)
    with pytest.raises(IndexError):
        spectrum.eigenvalue(-1)


def test_diagonal_model_matrix():
    model = diag_model([0.5, 1.0])
    npt.assert_allclose(model.matrix, np.diag([1.0, 0.5]))
    assert model.norm == 1.0


def test_kernel_block_comes_last():
    model = diag_model([1.0, 0.5], kernel_dim=2)
    assert list(model.block_index) == [1, 2, 0, 0]
    assert model.kernel_basis().shape == (4, 2)


def test_haar_model_recovers_eigenvalues():
    model = build_model(SpectrumSpec.from_eigenvalues([1.0, 0.5]), Conjugation.haar_unitary(3))
    npt.assert_allclose(np.sort(np.linalg.eigvals(model.matrix).real), [0.5, 1.0], atol=1e-10)


def test_kernel_dimension_is_rank_deficit():
    spectrum = generate_spectrum("power_decay", 6, kernel_dim=2, seed=1)
    model = build_model(spectrum, Conjugation.haar_unitary(9))
    assert np.linalg.matrix_rank(model.matrix, tol=1e-10) == model.dim - 2


def test_certificate_of_haar_model():
    spectrum = generate_spectrum("random_annulus", 20, kernel_dim=3, multiplicities=[1] * 18 + [2, 2], seed=4)
    cert = build_model(spectrum, Conjugation.haar_unitary(1)).certify()
    assert cert.unitarity < 1e-12
    assert cert.commutator < 1e-10
    assert cert.resolution < 1e-12
    assert cert.orthogonality < 1e-12
    assert cert.reconstruction < 1e-12


def test_apply_and_adjoint():
    model = diag_model([1.0, 0.5])
    npt.assert_allclose(model.apply([1, 0]), [1, 0])
    rotation = diag_model([1j])
    npt.assert_allclose(rotation.apply_adjoint([1]), [-1j])


def test_apply_matches_dense_matrix():
    spectrum = generate_spectrum("random_annulus", 12, kernel_dim=1, seed=8)
    model = build_model(spectrum, Conjugation.haar_unitary(2))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
    npt.assert_allclose(model.apply(v), model.matrix @ v, atol=1e-13)
    npt.assert_allclose(model.apply_adjoint(v), model.matrix.conj().T @ v, atol=1e-13)


def test_apply_rejects_wrong_dimension():
    with pytest.raises(DimensionError):
        diag_model([1.0, 0.5]).apply([1, 2, 3])


def test_eigenprojection_apply():
    model = diag_model([1.0, 0.5])
    npt.assert_allclose(model.eigenprojection_apply(1, [3, 4]), [3, 0])


def test_eigenprojections_resolve_identity():
    spectrum = generate_spectrum("power_decay", 5, kernel_dim=2, multiplicities=[1, 2, 1, 1, 3], seed=3)
    model = build_model(spectrum, Conjugation.haar_unitary(5))
    v = np.arange(model.dim, dtype=float) + 1j
    total = sum(model.eigenprojection_apply(n, v) for n in spectrum.indices)
    npt.assert_allclose(total, v, atol=1e-12)


def test_resolvent_examples():
    npt.assert_allclose(resolvent_apply(diag_model([1.0]), 0, [1]), [1])
    npt.assert_allclose(resolvent_apply(diag_model([1.0, 0.5]), 2, [1, 1]), [-1, -2 / 3])


def test_resolvent_at_eigenvalue_raises():
    with pytest.raises(SpectrumHit):
        diag_model([1.0, 0.5]).resolvent_apply(0.5, [1, 1])


def test_component_norms_and_active_indices():
    model = diag_model([1.0, 0.5], kernel_dim=1)
    norms = model.component_norms([0.6, 0.8, 0.0])
    assert norms[0] == 0
    assert norms[1] == pytest.approx(0.6)
    assert norms[2] == pytest.approx(0.8)
    assert model.active_indices([0.0, 1.0, 1.0]) == (0, 2)


def test_json_round_trip():
    spectrum = generate_spectrum("random_annulus", 6, kernel_dim=1, seed=2)
    model = build_model(spectrum, Conjugation.haar_unitary(17))
    restored = model_from_json(model_to_json(model))
    assert restored.spectrum == model.spectrum
    npt.assert_allclose(restored.matrix, model.matrix, atol=1e-15)


@pytest.fixture
def dense_model():
    spectrum = generate_spectrum("random_annulus", 30, kernel_dim=3, multiplicities=[1] * 28 + [2, 3], seed=12)
    return build_model(spectrum, Conjugation.haar_unitary(21))


def random_vector(dim, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def test_exp_decay_keeps_tiny_distinct_eigenvalues():
    spectrum = generate_spectrum("exp_decay", 256, kernel_dim=3, rho=0.5, seed=1)
    moduli = np.array([abs(e.eigenvalue) for e in spectrum.nonzero_entries])
    npt.assert_allclose(moduli, 0.5 ** np.arange(256), rtol=1e-12)
    assert spectrum.dim == 259
    for conjugation in (Conjugation.diagonal(), Conjugation.haar_unitary(4)):
        assert build_model(spectrum, conjugation).dim == 259


def test_duplicate_detection_is_relative():
    small = np.array([1.0, 1e-13, 2e-13], dtype=complex)
    npt.assert_array_equal(_separate_duplicates(small, False), small)
    nudged = _separate_duplicates(np.array([0.5, 0.5], dtype=complex), False)
    assert nudged[0] != nudged[1]
    assert abs(nudged[1]) == pytest.approx(0.5)


def test_spectrum_json_keeps_tail_bound():
    model = build_model(generate_spectrum("power_decay", 5, kernel_dim=1, seed=3))
    restored = model_from_json(model_to_json(model))
    assert restored.spectrum.tail_bound == pytest.approx(1 / 6)
    assert restored.spectrum == model.spectrum


def test_resolvent_norm_is_inverse_distance(dense_model):
    rng = np.random.default_rng(5)
    eye = np.eye(dense_model.dim)
    sampled = 0
    while sampled < 20:
        z = complex(*rng.uniform(-1.5, 1.5, 2))
        dist = dense_model.distance_to_spectrum(z)
        if dist < 1e-2:
            continue
        resolvent = np.linalg.inv(dense_model.matrix - z * eye)
        assert abs(np.linalg.norm(resolvent, 2) - 1 / dist) <= 1e-9
        sampled += 1


def test_kernel_of_operator_and_adjoint_agree(dense_model):
    rng = np.random.default_rng(6)
    kernel = dense_model.kernel_basis()
    v = kernel @ (rng.standard_normal(kernel.shape[1]) + 1j * rng.standard_normal(kernel.shape[1]))
    assert np.linalg.norm(dense_model.apply(v)) <= 1e-12 * np.linalg.norm(v)
    assert np.linalg.norm(dense_model.apply_adjoint(v)) <= 1e-10


def test_dense_operator_is_normal(dense_model):
    a = dense_model.matrix
    for seed in range(5):
        v = random_vector(dense_model.dim, seed)
        gap = np.linalg.norm(a.conj().T @ (a @ v) - a @ (a.conj().T @ v))
        assert gap <= 1e-10 * np.linalg.norm(v)
        assert np.linalg.norm(a @ v) == pytest.approx(np.linalg.norm(a.conj().T @ v), rel=1e-12)


def test_eigenprojections_are_mutually_orthogonal(dense_model):
    indices = dense_model.spectrum.indices
    for seed in range(3):
        v = random_vector(dense_model.dim, 10 + seed)
        for n in indices:
            pn_v = dense_model.eigenprojection_apply(n, v)
            for m in indices:
                if m != n:
                    assert np.linalg.norm(dense_model.eigenprojection_apply(m, pn_v)) <= 1e-12 * np.linalg.norm(v)


@pytest.mark.parametrize(
    "family,count,kernel_dim,seed",
    [("power_decay", 40, 2, 0), ("random_annulus", 40, 0, 1), ("exp_decay", 16, 1, 2), ("two_cluster", 12, 1, 3)],
)
def test_spectral_reconstruction(family, count, kernel_dim, seed):
    spectrum = generate_spectrum(family, count, kernel_dim, seed=seed)
    model = build_model(spectrum, Conjugation.haar_unitary(seed + 100))
    rebuilt = sum(e.eigenvalue * model.eigenprojection(e.index).matrix() for e in spectrum.nonzero_entries)
    assert np.linalg.norm(model.matrix - rebuilt, 2) <= 1e-11 * model.norm
