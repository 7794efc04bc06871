"""
Krylov solvability of Af = g for compact normal A.

The Krylov solution is f∘ = Σ_{n≥1} λₙ⁻¹ Pₙ g. The checks in this module
certify that it solves the problem, lies in K(A, g), has minimal norm, is the
only solution inside K(A, g), and that K(A, g) is spanned by the Pₙ g and
reduces A.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from src.errors import DatumNotInRange, NotSimpleSpectrum
from src.krylov_engine import (
    KrylovBasis,
    arnoldi,
    distance_to_krylov,
    krylov_dimension,
    principal_angles,
)
from src.operator_model import KERNEL_INDEX, CompactNormalModel
from src.utils.validators import as_vector, relative

logger = logging.getLogger(__name__)

SOLVED = "solved"

RANGE_TOL = 1e-12
CONDITIONING_RATIO = 1e-8
RANK_TOL = 1e-12
MINIMAL_NORM_TOL = 1e-10
KERNEL_RESIDUAL_TOL = 1e-10
UNIQUENESS_TOL = 1e-8
STRUCTURE_TOL = 1e-8
REDUCIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class KrylovSolutionReport:
    """
    The Krylov solution f∘ with its certificates.

    Attributes:
        solution: f∘
        residual: ‖Af∘ − g‖
        norm: ‖f∘‖
        kernel_component: ‖P₀f∘‖
        distance_in_krylov: Distance of f∘ to K_d(A, g) at termination
        active_indices: Indices n with Pₙg ≠ 0
        krylov_dimension: Arnoldi termination index d
        summability: Σ |λₙ|⁻² ‖Pₙg‖², reported as a conditioning diagnostic
        warnings: Conditioning warnings
    """

    solution: np.ndarray
    residual: float
    norm: float
    kernel_component: float
    distance_in_krylov: float
    active_indices: Tuple[int, ...]
    krylov_dimension: int
    summability: float
    status: str = SOLVED
    warnings: Tuple[str, ...] = ()
    basis: Optional[KrylovBasis] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residual": self.residual,
            "norm": self.norm,
            "kernel_component": self.kernel_component,
            "distance_in_krylov": self.distance_in_krylov,
            "active_indices": list(self.active_indices),
            "status": self.status,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class MinimalNormResult:
    passed: bool
    max_deviation: float
    max_kernel_residual: float
    trials: int
    vacuous: bool = False


@dataclass(frozen=True)
class UniquenessResult:
    passed: bool
    deviation: float
    restricted_sigma_min: float
    krylov_dimension: int


@dataclass(frozen=True)
class CyclicityResult:
    passed: bool
    krylov_dimension: int
    dim: int


def krylov_solution(model: CompactNormalModel, g: Any, range_tol: float = RANGE_TOL) -> KrylovSolutionReport:
    """
    Compute f∘ = Σ_{n≥1} λₙ⁻¹ Pₙ g and its certificates.

    Args:
        model: Compact normal model
        g: Datum; must satisfy ‖P₀g‖ <= range_tol·‖g‖
        range_tol: Relative threshold of the range-membership test

    Returns:
        KrylovSolutionReport with status "solved"
    """
    g = as_vector(g, model.dim, "g")
    g_norm = float(np.linalg.norm(g))
    norms = model.component_norms(g)
    if norms[KERNEL_INDEX] > range_tol * g_norm:
        raise DatumNotInRange(
            f"‖P₀g‖ = {norms[KERNEL_INDEX]:.3e} exceeds {range_tol:g}·‖g‖; g is not in ran A"
        )

    eigenvalues = model.eigenvalues
    nonzero = model.block_index != KERNEL_INDEX
    coefficients = np.zeros(model.dim, dtype=np.complex128)
    coefficients[nonzero] = model.to_eigen(g)[nonzero] / eigenvalues[nonzero]
    solution = model.from_eigen(coefficients)

    active = model.active_indices(g)
    warnings = []
    active_moduli = [abs(model.spectrum.eigenvalue(n)) for n in active if n != KERNEL_INDEX]
    if active_moduli and min(active_moduli) < CONDITIONING_RATIO * model.norm:
        message = (
            f"ill-conditioned: smallest active |λ| = {min(active_moduli):.3e} "
            f"is below {CONDITIONING_RATIO:g}·‖A‖"
        )
        logger.warning(message)
        warnings.append(message)

    summability = sum(
        (norms[n] / abs(model.spectrum.eigenvalue(n))) ** 2 for n in active if n != KERNEL_INDEX
    )
    residual = float(np.linalg.norm(model.apply(solution) - g))
    kernel_component = float(np.linalg.norm(model.eigenprojection_apply(KERNEL_INDEX, solution)))

    if g_norm == 0:
        # K(A, 0) = {0} and f∘ = 0 lies in it
        basis, distance, dim = None, 0.0, 0
    else:
        basis = arnoldi(model, g)
        distance = distance_to_krylov(basis, solution)
        dim = basis.dim

    return KrylovSolutionReport(
        solution=solution,
        residual=residual,
        norm=float(np.linalg.norm(solution)),
        kernel_component=kernel_component,
        distance_in_krylov=distance,
        active_indices=active,
        krylov_dimension=dim,
        summability=float(summability),
        warnings=tuple(warnings),
        basis=basis,
    )


def pseudoinverse_solution(model: CompactNormalModel, g: Any, rcond: float = RANGE_TOL) -> np.ndarray:
    """Minimum-norm least-squares solution from the dense matrix, without spectral data."""
    g = as_vector(g, model.dim, "g")
    solution, *_ = scipy.linalg.lstsq(model.matrix, g, cond=rcond)
    return solution


def minimal_norm_check(
    model: CompactNormalModel,
    report: KrylovSolutionReport,
    trials: int = 100,
    seed: int = 0,
) -> MinimalNormResult:
    """
    Perturb f∘ by random kernel vectors ψ and check ‖f∘+ψ‖² = ‖f∘‖² + ‖ψ‖².

    Passes vacuously when A is injective.
    """
    kernel = model.kernel_basis()
    if kernel.shape[1] == 0:
        return MinimalNormResult(True, 0.0, 0.0, 0, vacuous=True)

    rng = np.random.default_rng(seed)
    f = report.solution
    f_norm = report.norm
    scale = f_norm if f_norm > 0 else 1.0
    max_deviation = 0.0
    max_kernel_residual = 0.0
    never_shorter = True
    for _ in range(trials):
        c = rng.standard_normal(kernel.shape[1]) + 1j * rng.standard_normal(kernel.shape[1])
        psi = kernel @ c
        psi *= scale * rng.uniform(0.1, 10.0) / np.linalg.norm(psi)
        psi_norm = float(np.linalg.norm(psi))
        perturbed = float(np.linalg.norm(f + psi))
        deviation = abs(perturbed**2 - f_norm**2 - psi_norm**2) / (f_norm + psi_norm) ** 2
        max_deviation = max(max_deviation, deviation)
        max_kernel_residual = max(max_kernel_residual, float(np.linalg.norm(model.apply(psi))) / psi_norm)
        never_shorter &= perturbed >= f_norm
    passed = never_shorter and max_deviation <= MINIMAL_NORM_TOL and max_kernel_residual <= KERNEL_RESIDUAL_TOL
    return MinimalNormResult(passed, max_deviation, max_kernel_residual, trials)


def uniqueness_check(model: CompactNormalModel, g: Any, report: KrylovSolutionReport) -> UniquenessResult:
    """
    Check that f∘ is the only solution of Af = g inside K(A, g).

    The problem restricted to the Krylov basis, min_y ‖A Q y − g‖, must have
    a trivial-kernel operator A Q and its minimizer Q y must equal f∘.
    """
    g = as_vector(g, model.dim, "g")
    if not np.any(g):
        return UniquenessResult(report.norm == 0, report.norm, math.inf, 0)

    basis = report.basis or arnoldi(model, g)
    q = basis.q
    restricted = np.column_stack([model.apply(column) for column in q.T])
    sigma_min = float(scipy.linalg.svdvals(restricted).min())
    y, *_ = scipy.linalg.lstsq(restricted, g)
    deviation = relative(float(np.linalg.norm(q @ y - report.solution)), report.norm)
    full_rank = sigma_min > RANK_TOL * model.norm
    return UniquenessResult(full_rank and deviation <= UNIQUENESS_TOL, deviation, sigma_min, basis.dim)


def spectral_span(model: CompactNormalModel, g: Any) -> np.ndarray:
    """Orthonormal columns Pₙg/‖Pₙg‖ for the active indices of g."""
    g = as_vector(g, model.dim, "g")
    coordinates = model.to_eigen(g)
    columns = []
    for n in model.active_indices(g):
        component = np.zeros(model.dim, dtype=np.complex128)
        block = model.block(n)
        component[block] = coordinates[block]
        vector = model.from_eigen(component)
        columns.append(vector / np.linalg.norm(vector))
    if not columns:
        return np.zeros((model.dim, 0), dtype=np.complex128)
    return np.column_stack(columns)


def krylov_subspace_structure_check(model: CompactNormalModel, g: Any) -> float:
    """Largest principal angle between the terminated Krylov span and span{Pₙg}."""
    basis = arnoldi(model, g)
    angles = principal_angles(basis.q, spectral_span(model, g))
    return float(angles.max()) if angles.size else 0.0


def reducibility_residual(model: CompactNormalModel, g: Any, basis: Optional[KrylovBasis] = None) -> float:
    """Distance of A*g to K(A, g), relative to ‖A*g‖ (0 when A*g = 0)."""
    basis = basis or arnoldi(model, g)
    adjoint_g = model.apply_adjoint(g)
    adjoint_norm = float(np.linalg.norm(adjoint_g))
    if adjoint_norm == 0:
        return 0.0
    return distance_to_krylov(basis, adjoint_g) / adjoint_norm


def invariance_residuals(
    model: CompactNormalModel,
    basis: KrylovBasis,
    trials: int = 8,
    seed: int = 0,
) -> Tuple[float, float]:
    """
    Worst ‖(I−Π)AΠv‖ and ‖ΠA(I−Π)v‖ over random v, relative to ‖A‖·‖v‖.

    Π is the orthogonal projector onto the Krylov basis; both vanish when
    K(A, g) and its complement are A-invariant.
    """
    if model.norm == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    into, out_of = 0.0, 0.0
    for _ in range(trials):
        v = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
        scale = model.norm * float(np.linalg.norm(v))
        inside = basis.projector_apply(v)
        a_inside = model.apply(inside)
        into = max(into, float(np.linalg.norm(a_inside - basis.projector_apply(a_inside))) / scale)
        a_outside = model.apply(v - inside)
        out_of = max(out_of, float(np.linalg.norm(basis.projector_apply(a_outside))) / scale)
    return into, out_of


def cyclic_vector(model: CompactNormalModel) -> np.ndarray:
    """
    The vector g = φ₀ + Σ_{n≥1} (1/n) φₙ for a model with simple spectrum.

    φₙ is the unit eigenvector of λₙ and φ₀ spans ker A (omitted when A is
    injective).
    """
    spectrum = model.spectrum
    if not spectrum.is_simple:
        raise NotSimpleSpectrum(
            f"cyclicity needs dim(ker A) <= 1 and simple eigenvalues "
            f"(kernel_dim={spectrum.kernel_dim}, multiplicities="
            f"{[e.multiplicity for e in spectrum.nonzero_entries]})"
        )
    coefficients = np.zeros(model.dim, dtype=np.complex128)
    for entry in spectrum.nonzero_entries:
        coefficients[model.block(entry.index)] = 1.0 / entry.index
    coefficients[model.block(KERNEL_INDEX)] = 1.0
    return model.from_eigen(coefficients)


def cyclicity_check(model: CompactNormalModel) -> CyclicityResult:
    g = cyclic_vector(model)
    dim = krylov_dimension(model, g)
    return CyclicityResult(dim == model.dim, dim, model.dim)
