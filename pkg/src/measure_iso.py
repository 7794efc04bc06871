"""
The scalar spectral measure μ_g and the isomorphism L²(σ(A), μ_g) ≅ K(A, g).

For compact normal A the measure is atomic: μ_g = Σₙ ‖Pₙg‖² δ_{λₙ}. The map
T: h ↦ h(A)g sends L²(μ_g) isometrically onto the closure of K(A, g); the
checks here verify that identity on polynomials in z and z̄, the Gram/moment
identity behind it, and the converse criterion ‖A*g‖ = ‖Ag‖.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import DegreeTooLarge
from src.krylov_engine import KrylovBasis, arnoldi, distance_to_krylov
from src.operator_model import CompactNormalModel
from src.solvability import reducibility_residual
from src.utils.validators import as_vector, relative, require_nonneg_int, require_positive_int

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
MOMENT_TOL = 1e-9
ISOMETRY_TOL = 1e-9
MEMBERSHIP_TOL = 1e-8
CONVERSE_TOL = 1e-10
REDUCIBILITY_TOL = 1e-8
BIJECTION_TOL = 1e-9

_LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


@dataclass(frozen=True)
class Atom:
    index: int
    point: complex
    weight: float


@dataclass(frozen=True)
class ScalarMeasure:
    """
    Atomic measure μ_g = Σ wₙ δ_{λₙ} with wₙ = ‖Pₙg‖².

    Attributes:
        atoms: One atom per active spectral index, in enumeration order
    """

    atoms: Tuple[Atom, ...]

    @property
    def points(self) -> np.ndarray:
        return np.array([a.point for a in self.atoms], dtype=np.complex128)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=np.float64)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: Union[Callable[[np.ndarray], Any], Sequence[complex]]) -> complex:
        """∫ f dμ for f given as a callable or as its values on the atoms."""
        if callable(values):
            values = values(self.points)
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (len(self.atoms),):
            raise ValueError(f"expected {len(self.atoms)} values, got shape {values.shape}")
        return complex(np.sum(values * self.weights))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "atoms": [{"re": a.point.real, "im": a.point.imag, "weight": a.weight} for a in self.atoms],
            "total_mass": self.total_mass,
        }


@dataclass(frozen=True)
class BivariatePolynomial:
    """
    q(z, z̄) = Σ c_{ab} z^a z̄^b.

    Attributes:
        coefficients: Map (a, b) -> c_{ab}
    """

    coefficients: Dict[Tuple[int, int], complex]

    @property
    def degree(self) -> int:
        return max((a + b for a, b in self.coefficients), default=0)

    def evaluate(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        result = np.zeros_like(z)
        for (a, b), c in self.coefficients.items():
            result = result + c * z**a * np.conj(z) ** b
        return result


def random_bivariate(degree: int, seed: int = 0) -> BivariatePolynomial:
    """Random complex Gaussian coefficients on every monomial of total degree <= degree."""
    degree = require_nonneg_int(degree, "degree")
    rng = np.random.default_rng(seed)
    coefficients = {}
    for a, b in itertools.product(range(degree + 1), repeat=2):
        if a + b <= degree:
            coefficients[(a, b)] = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    return BivariatePolynomial(coefficients)


@dataclass(frozen=True)
class MomentResult:
    passed: bool
    deviation: float
    threshold: float
    scale: float
    k_max: int


@dataclass(frozen=True)
class IsometryResult:
    passed: bool
    deviation: float
    membership: float
    image_norm_sq: float
    integral: float


@dataclass(frozen=True)
class ConverseResult:
    passed: bool
    deviation: float
    reducibility: float
    adjoint_norm_sq: float
    apply_norm_sq: float
    moment: float


@dataclass(frozen=True)
class BijectionResult:
    passed: bool
    round_trip: float
    isometry: float


def scalar_measure(model: CompactNormalModel, g: Any) -> ScalarMeasure:
    """Atoms (λₙ, ‖Pₙg‖²) for every n with Pₙg ≠ 0, kernel atom at 0."""
    norms = model.component_norms(g)
    atoms = tuple(
        Atom(n, model.spectrum.eigenvalue(n), norms[n] ** 2) for n in model.active_indices(g)
    )
    return ScalarMeasure(atoms)


def _coordinate_values(model: CompactNormalModel, measure: ScalarMeasure, values: Any) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (len(measure.atoms),):
        raise ValueError(f"expected {len(measure.atoms)} values, got shape {values.shape}")
    per_index = np.zeros(len(model.spectrum.entries), dtype=np.complex128)
    for atom, value in zip(measure.atoms, values):
        per_index[atom.index] = value
    return per_index[model.block_index]


def functional_image(model: CompactNormalModel, g: Any, values: Any) -> np.ndarray:
    """
    T h = h(A)g for h given by its values on the atoms of μ_g.

    Args:
        model: Operator
        g: Generating vector
        values: h(λₙ) for each atom of scalar_measure(model, g), in order
    """
    g = as_vector(g, model.dim, "g")
    measure = scalar_measure(model, g)
    return model.functional_apply(_coordinate_values(model, measure, values), g)


def krylov_preimage(model: CompactNormalModel, g: Any, v: Any) -> np.ndarray:
    """
    T⁻¹v on K(A, g): h(λₙ) = ⟨Pₙg, v⟩/‖Pₙg‖² on the atoms of μ_g.
    """
    g = as_vector(g, model.dim, "g")
    v = as_vector(v, model.dim)
    measure = scalar_measure(model, g)
    g_eigen = model.to_eigen(g)
    v_eigen = model.to_eigen(v)
    values = []
    for atom in measure.atoms:
        block = model.block(atom.index)
        values.append(np.vdot(g_eigen[block], v_eigen[block]) / atom.weight)
    return np.array(values, dtype=np.complex128)


def bijection_check(model: CompactNormalModel, g: Any, v: Any) -> BijectionResult:
    """
    Round trip T(T⁻¹v) = v for v in K(A, g), and ‖T h‖² = ∫|h|²dμ for h = T⁻¹v.
    """
    v = as_vector(v, model.dim)
    h = krylov_preimage(model, g, v)
    image = functional_image(model, g, h)
    v_norm = float(np.linalg.norm(v))
    round_trip = relative(float(np.linalg.norm(image - v)), v_norm)
    integral = scalar_measure(model, g).integrate(np.abs(h) ** 2).real
    isometry = relative(abs(float(np.linalg.norm(image)) ** 2 - integral), integral)
    return BijectionResult(round_trip <= BIJECTION_TOL and isometry <= BIJECTION_TOL, round_trip, isometry)


def gram_moment_check(model: CompactNormalModel, g: Any, k_max: int) -> MomentResult:
    """
    Compare the Gram matrix G_{jk} = ⟨A^j g, A^k g⟩ with the moments of μ_g.

    Args:
        model: Operator
        g: Generating vector
        k_max: Largest power (k_max <= 2N recommended)

    Returns:
        MomentResult with the max |G − M| and the pass threshold
        1e-9·‖g‖²·max(1, ‖A‖^(2 k_max))
    """
    k_max = require_positive_int(k_max, "k_max")
    g = as_vector(g, model.dim, "g")
    if model.norm > 1 and 2 * k_max * math.log(model.norm) >= _LOG_FLOAT_MAX:
        raise DegreeTooLarge(f"‖A‖^(2·{k_max}) overflows double precision (‖A‖ = {model.norm:.3e})")

    powers = [g]
    for _ in range(k_max):
        powers.append(model.apply(powers[-1]))
    krylov = np.column_stack(powers)
    gram = krylov.conj().T @ krylov

    measure = scalar_measure(model, g)
    moments = np.zeros_like(gram)
    if measure.atoms:
        monomials = measure.points[None, :] ** np.arange(k_max + 1)[:, None]
        moments = (monomials.conj() * measure.weights) @ monomials.T

    deviation = float(np.abs(gram - moments).max())
    g_norm_sq = float(np.vdot(g, g).real)
    scale = g_norm_sq * max(1.0, model.norm ** (2 * k_max))
    threshold = MOMENT_TOL * scale
    logger.debug("moment check up to k=%d: deviation %.3e (threshold %.3e)", k_max, deviation, threshold)
    return MomentResult(deviation <= threshold, deviation, threshold, scale, k_max)


def isometry_check(
    model: CompactNormalModel,
    g: Any,
    poly_q: BivariatePolynomial,
    basis: Optional[KrylovBasis] = None,
) -> IsometryResult:
    """
    Check ‖q(A, A*)g‖² = ∫ |q(z, z̄)|² dμ_g and q(A, A*)g ∈ K(A, g).
    """
    g = as_vector(g, model.dim, "g")
    if not np.any(g):
        return IsometryResult(True, 0.0, 0.0, 0.0, 0.0)
    image = model.functional_apply(poly_q.evaluate(model.eigenvalues), g)
    image_norm_sq = float(np.vdot(image, image).real)
    integral = scalar_measure(model, g).integrate(lambda z: np.abs(poly_q.evaluate(z)) ** 2).real
    deviation = relative(abs(image_norm_sq - integral), integral)

    basis = basis or arnoldi(model, g)
    membership = relative(distance_to_krylov(basis, image), math.sqrt(image_norm_sq))
    passed = deviation <= ISOMETRY_TOL and membership <= MEMBERSHIP_TOL
    return IsometryResult(passed, deviation, membership, image_norm_sq, integral)


def converse_criterion_check(model: CompactNormalModel, g: Any) -> ConverseResult:
    """
    ‖A*g‖² = Σ |λₙ|² wₙ = ‖Ag‖², hence A*g ∈ K(A, g).
    """
    g = as_vector(g, model.dim, "g")
    adjoint_sq = float(np.linalg.norm(model.apply_adjoint(g)) ** 2)
    apply_sq = float(np.linalg.norm(model.apply(g)) ** 2)
    moment = scalar_measure(model, g).integrate(lambda z: np.abs(z) ** 2).real
    deviation = relative(max(abs(adjoint_sq - moment), abs(apply_sq - moment)), moment)
    reducibility = reducibility_residual(model, g) if np.any(g) else 0.0
    passed = deviation <= CONVERSE_TOL and reducibility <= REDUCIBILITY_TOL
    return ConverseResult(passed, deviation, reducibility, adjoint_sq, apply_sq, moment)
