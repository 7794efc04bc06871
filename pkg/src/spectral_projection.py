"""
Riesz projections and their polynomial approximations.

For a split σ(A) = σ₁ ∪ σ₂ enclosed by disjoint admissible domains U₁, U₂,
the Riesz projection P_{σ₁} = (1/2πi)∮_{∂U₁}(z − A)⁻¹dz is computed by the
trapezoidal rule on circles and approximated by polynomials p(A), either by
interpolating the indicator of σ₁ on the eigenvalues (exact route) or by least
squares on samples of the closed disks (the uniform-approximation route, which
never looks at the eigenvalues themselves).
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from src.errors import (
    ContourTouchesSpectrum,
    CrossCheckMismatch,
    InseparableSpectrum,
    InvalidContour,
    UnknownSpectralIndex,
)
from src.operator_model import CompactNormalModel
from src.utils.formatters import complex_pair
from src.utils.validators import as_vector, require_positive_int

logger = logging.getLogger(__name__)

SEPARATION_TOL = 1e-12
QUADRATURE_TOL = 1e-11
INITIAL_NODES = 16
MAX_NODES = 4096
CROSS_CHECK_TOL = 1e-9

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class PolynomialMethod(str, Enum):
    LAGRANGE = "lagrange"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidContour(f"circle radius must be positive, got {self.radius}")

    def encloses(self, z: complex) -> bool:
        return abs(z - self.center) < self.radius

    def boundary_distance(self, z: complex) -> float:
        return abs(abs(z - self.center) - self.radius)

    def nodes(self, count: int) -> np.ndarray:
        theta = 2.0 * np.pi * np.arange(count) / count
        return self.center + self.radius * np.exp(1j * theta)

    def samples(self, count: int) -> np.ndarray:
        """Sunflower points filling the closed disk, plus as many on its boundary."""
        k = np.arange(count)
        radii = self.radius * np.sqrt((k + 0.5) / count)
        interior = self.center + radii * np.exp(1j * _GOLDEN_ANGLE * k)
        return np.concatenate([interior, self.nodes(count)])

    def disjoint_from(self, other: "Circle") -> bool:
        return abs(self.center - other.center) > self.radius + other.radius


@dataclass(frozen=True)
class AdmissibleContour:
    """
    Positively oriented circles bounding an admissible domain.

    Attributes:
        circles: Pairwise disjoint circles
        nodes_per_circle: Trapezoidal nodes K on each circle
    """

    circles: Tuple[Circle, ...]
    nodes_per_circle: int = 64

    def __post_init__(self):
        object.__setattr__(self, "circles", tuple(self.circles))
        if not self.circles:
            raise InvalidContour("an admissible domain needs at least one circle")
        require_positive_int(self.nodes_per_circle, "nodes_per_circle")
        for i, a in enumerate(self.circles):
            for b in self.circles[i + 1 :]:
                if not a.disjoint_from(b):
                    raise InvalidContour(f"circles {a} and {b} overlap")

    @property
    def length(self) -> float:
        return sum(2.0 * math.pi * c.radius for c in self.circles)

    def with_nodes(self, count: int) -> "AdmissibleContour":
        return replace(self, nodes_per_circle=count)

    def encloses(self, z: complex) -> bool:
        return any(c.encloses(z) for c in self.circles)

    def separation(self, model: CompactNormalModel) -> float:
        """Distance δ between the contour and σ(A)."""
        points = [value for _, value in spectral_points(model)]
        return min(c.boundary_distance(z) for c in self.circles for z in points)

    def enclosed_indices(self, model: CompactNormalModel) -> FrozenSet[int]:
        return frozenset(n for n, value in spectral_points(model) if self.encloses(value))

    def validate(self, model: CompactNormalModel) -> float:
        delta = self.separation(model)
        if delta <= SEPARATION_TOL * max(1.0, model.norm):
            raise ContourTouchesSpectrum(f"contour passes within {delta:.3e} of the spectrum")
        return delta

    def disjoint_from(self, other: "AdmissibleContour") -> bool:
        return all(a.disjoint_from(b) for a in self.circles for b in other.circles)


def spectral_points(model: CompactNormalModel) -> List[Tuple[int, complex]]:
    """(n, λₙ) for every point of σ(A)."""
    return [(n, model.spectrum.eigenvalue(n)) for n in model.spectrum.spectral_indices]


@dataclass(frozen=True)
class SpectrumSplit:
    """
    A partition of σ(A) into σ₁ and σ₂.

    Attributes:
        sigma1: Spectral indices of σ₁
        sigma2: Spectral indices of σ₂
        gap: min |λ − μ| over λ ∈ σ₁, μ ∈ σ₂ (inf when one side is empty)
    """

    sigma1: FrozenSet[int]
    sigma2: FrozenSet[int]
    gap: float

    @classmethod
    def from_indices(
        cls,
        model: CompactNormalModel,
        sigma1: Iterable[int],
        sigma2: Optional[Iterable[int]] = None,
    ) -> "SpectrumSplit":
        present = set(model.spectrum.spectral_indices)
        sigma1 = frozenset(int(n) for n in sigma1)
        sigma2 = frozenset(present - sigma1) if sigma2 is None else frozenset(int(n) for n in sigma2)
        unknown = (sigma1 | sigma2) - present
        if unknown:
            raise UnknownSpectralIndex(f"indices {sorted(unknown)} are not points of σ(A)")
        if sigma1 & sigma2:
            raise InseparableSpectrum(f"indices {sorted(sigma1 & sigma2)} lie on both sides (gap 0)")
        if sigma1 | sigma2 != present:
            raise ValueError(f"split leaves indices {sorted(present - sigma1 - sigma2)} uncovered")
        gap = math.inf
        if sigma1 and sigma2:
            a = np.array([model.spectrum.eigenvalue(n) for n in sorted(sigma1)])
            b = np.array([model.spectrum.eigenvalue(n) for n in sorted(sigma2)])
            gap = float(np.abs(a[:, None] - b[None, :]).min())
        if gap == 0:
            raise InseparableSpectrum("σ₁ and σ₂ share a point")
        return cls(sigma1, sigma2, gap)

    def indicator(self, model: CompactNormalModel) -> np.ndarray:
        """χ_{σ₁} at each coordinate's eigenvalue."""
        return np.isin(model.block_index, sorted(self.sigma1)).astype(np.complex128)


@dataclass(frozen=True)
class IndicatorPolynomial:
    """
    Polynomial approximation of χ_{σ₁} in the monomial basis (low degree first).

    Attributes:
        coefficients: c_0, ..., c_k
        split: The target split
        sup_error: max over σ(A) of |p(λ) − χ_{σ₁}(λ)|
        method: How the coefficients were obtained
    """

    coefficients: np.ndarray
    split: SpectrumSplit
    sup_error: float
    method: PolynomialMethod

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, z: Any) -> np.ndarray:
        return npoly.polyval(np.asarray(z, dtype=np.complex128), self.coefficients)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "degree": self.degree,
            "coeffs": [complex_pair(c) for c in self.coefficients],
            "sup_error": self.sup_error,
        }


@dataclass(frozen=True)
class QuadratureResult:
    vector: np.ndarray
    nodes: int
    converged: bool
    history: Tuple[Tuple[int, float], ...]


def exact_projection_apply(model: CompactNormalModel, split: SpectrumSplit, v: Any) -> np.ndarray:
    """Σ_{n∈σ₁} Pₙ v."""
    return model.functional_apply(split.indicator(model), v)


def riesz_projection_quadrature(
    model: CompactNormalModel,
    contour: AdmissibleContour,
    v: Any,
    nodes: Optional[int] = None,
) -> np.ndarray:
    """
    Trapezoidal approximation of (1/2πi)∮(z − A)⁻¹v dz over the contour.

    Args:
        model: Operator
        contour: Admissible contour (validated against the model)
        v: Vector to project
        nodes: Nodes per circle (default: contour.nodes_per_circle)
    """
    contour.validate(model)
    v = as_vector(v, model.dim)
    count = require_positive_int(nodes or contour.nodes_per_circle, "nodes")
    eigenvalues = model.eigenvalues
    coefficients = np.zeros(model.dim, dtype=np.complex128)
    theta = 2.0 * np.pi * np.arange(count) / count
    for circle in contour.circles:
        z = circle.center + circle.radius * np.exp(1j * theta)
        weights = circle.radius * np.exp(1j * theta) / count
        # (N, K) and C-contiguous: the node sum below is numpy's pairwise summation
        terms = weights[None, :] / (z[None, :] - eigenvalues[:, None])
        coefficients += terms.sum(axis=-1)
    return model.from_eigen(coefficients * model.to_eigen(v))


def adaptive_riesz_projection(
    model: CompactNormalModel,
    contour: AdmissibleContour,
    v: Any,
    tol: float = QUADRATURE_TOL,
    initial_nodes: int = INITIAL_NODES,
    max_nodes: int = MAX_NODES,
) -> QuadratureResult:
    """
    Double the node count until successive results differ by <= tol·‖v‖.
    """
    v = as_vector(v, model.dim)
    scale = float(np.linalg.norm(v)) or 1.0
    count = initial_nodes
    previous = riesz_projection_quadrature(model, contour, v, count)
    history = []
    while count < max_nodes:
        count *= 2
        current = riesz_projection_quadrature(model, contour, v, count)
        change = float(np.linalg.norm(current - previous))
        history.append((count, change))
        logger.debug("quadrature K=%d change=%.3e", count, change)
        previous = current
        if change <= tol * scale:
            return QuadratureResult(current, count, True, tuple(history))
    logger.warning("quadrature did not settle below %g within %d nodes", tol, max_nodes)
    return QuadratureResult(previous, count, False, tuple(history))


def _merge_disks(points: Sequence[complex], radius: float) -> List[Tuple[Circle, Tuple[complex, ...]]]:
    groups = [(Circle(p, radius), (p,)) for p in points]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if groups[i][0].disjoint_from(groups[j][0]):
                    continue
                members = groups[i][1] + groups[j][1]
                center = complex(np.mean(members))
                reach = max(abs(m - center) for m in members) + radius
                groups[i] = (Circle(center, reach), members)
                del groups[j]
                merged = True
                break
            if merged:
                break
    return groups


def _disks_separate(own: List[Tuple[Circle, Tuple[complex, ...]]], others: Sequence[complex], margin: float) -> bool:
    return all(
        abs(z - circle.center) >= circle.radius + margin for circle, _ in own for z in others
    )


def propose_contours(
    model: CompactNormalModel,
    split: SpectrumSplit,
    nodes_per_circle: int = 64,
) -> Tuple[Optional[AdmissibleContour], Optional[AdmissibleContour]]:
    """
    Build admissible contours (∂U₁, ∂U₂) around σ₁ and σ₂.

    Disks of radius gap/3 around each eigenvalue are merged, group by group,
    into enclosing circles while they overlap. If a merged circle comes too
    close to the other group, every eigenvalue gets its own disk of radius
    (minimal pairwise distance)/3 instead. A side with no eigenvalues gets no
    contour.
    """
    points1 = [model.spectrum.eigenvalue(n) for n in sorted(split.sigma1)]
    points2 = [model.spectrum.eigenvalue(n) for n in sorted(split.sigma2)]
    everything = np.array(points1 + points2)
    if len(everything) > 1:
        spacing = float(np.min(np.abs(everything[:, None] - everything[None, :]) + np.diag([np.inf] * len(everything))))
    else:
        spacing = max(model.norm, 1.0)
    radius = (split.gap if math.isfinite(split.gap) else spacing) / 3.0

    groups1 = _merge_disks(points1, radius)
    groups2 = _merge_disks(points2, radius)
    circles_meet = any(not a.disjoint_from(b) for a, _ in groups1 for b, _ in groups2)
    if circles_meet or not (
        _disks_separate(groups1, points2, radius / 2) and _disks_separate(groups2, points1, radius / 2)
    ):
        logger.debug("merged disks collide; falling back to one disk per eigenvalue")
        small = min(spacing, split.gap) / 3.0
        groups1 = [(Circle(p, small), (p,)) for p in points1]
        groups2 = [(Circle(p, small), (p,)) for p in points2]

    def contour(groups):
        if not groups:
            return None
        return AdmissibleContour(tuple(circle for circle, _ in groups), nodes_per_circle)

    return contour(groups1), contour(groups2)


def _distinct_targets(model: CompactNormalModel, split: SpectrumSplit) -> Tuple[np.ndarray, np.ndarray]:
    points = spectral_points(model)
    values = np.array([value for _, value in points], dtype=np.complex128)
    targets = np.array([1.0 if n in split.sigma1 else 0.0 for n, _ in points])
    return values, targets


def _sup_error(coefficients: np.ndarray, model: CompactNormalModel, split: SpectrumSplit) -> float:
    values, targets = _distinct_targets(model, split)
    return float(np.abs(npoly.polyval(values, coefficients) - targets).max())


def _lagrange_coefficients(values: np.ndarray, targets: np.ndarray) -> np.ndarray:
    if np.all(targets == 1.0):
        return np.array([1.0 + 0j])
    if np.all(targets == 0.0):
        return np.array([0.0 + 0j])
    coefficients = np.zeros(len(values), dtype=np.complex128)
    for i in np.flatnonzero(targets):
        others = np.delete(values, i)
        basis = npoly.polyfromroots(others) / np.prod(values[i] - others)
        coefficients[: len(basis)] += basis
    return coefficients


def _least_squares_coefficients(
    model: CompactNormalModel,
    split: SpectrumSplit,
    degree: int,
    sample_count: int,
) -> np.ndarray:
    contour1, contour2 = propose_contours(model, split)
    samples, targets = [], []
    for contour, target in ((contour1, 1.0), (contour2, 0.0)):
        if contour is None:
            continue
        for circle in contour.circles:
            points = circle.samples(sample_count)
            samples.append(points)
            targets.append(np.full(len(points), target))
    z = np.concatenate(samples)
    chi = np.concatenate(targets)
    scale = float(np.abs(z).max()) or 1.0
    # columns (z/scale)^k keep the Vandermonde system balanced
    vander = npoly.polyvander(z / scale, degree)
    scaled, *_ = np.linalg.lstsq(vander, chi.astype(np.complex128), rcond=None)
    return scaled / scale ** np.arange(degree + 1)


def indicator_polynomial(
    model: CompactNormalModel,
    split: SpectrumSplit,
    method: str = PolynomialMethod.LAGRANGE,
    degree: Optional[int] = None,
    sample_count: int = 200,
) -> IndicatorPolynomial:
    """
    Approximate χ_{σ₁} on σ(A) by a polynomial.

    Args:
        model: Operator
        split: Target split (gap > 0)
        method: "lagrange" (interpolation at every distinct eigenvalue, degree
            #distinct − 1) or "least_squares" (fit on samples of the proposed
            disks of both groups)
        degree: Degree of the least-squares fit
        sample_count: Samples per disk (interior and as many on the boundary)
    """
    method = PolynomialMethod(method)
    if split.gap <= 0:
        raise InseparableSpectrum("split has zero gap")
    if method is PolynomialMethod.LAGRANGE:
        values, targets = _distinct_targets(model, split)
        coefficients = _lagrange_coefficients(values, targets)
    else:
        if degree is None:
            raise ValueError("least_squares needs a degree")
        degree = int(degree)
        if degree < 0:
            raise ValueError("degree must be non-negative")
        coefficients = _least_squares_coefficients(model, split, degree, require_positive_int(sample_count, "sample_count"))
    coefficients.setflags(write=False)
    return IndicatorPolynomial(coefficients, split, _sup_error(coefficients, model, split), method)


def least_squares_sequence(
    model: CompactNormalModel,
    split: SpectrumSplit,
    degrees: Sequence[int] = (4, 8, 16),
    sample_count: int = 200,
) -> List[IndicatorPolynomial]:
    return [
        indicator_polynomial(model, split, PolynomialMethod.LEAST_SQUARES, degree, sample_count)
        for degree in degrees
    ]


def apply_polynomial(model: CompactNormalModel, p: IndicatorPolynomial, v: Any) -> np.ndarray:
    """Horner evaluation of p(A)v with repeated applications of A."""
    v = as_vector(v, model.dim)
    result = p.coefficients[-1] * v
    for c in p.coefficients[-2::-1]:
        result = model.apply(result) + c * v
    return result


def dense_projection_error(model: CompactNormalModel, p: IndicatorPolynomial) -> float:
    """‖p(A) − P_{σ₁}‖₂ from dense matrices."""
    a = model.matrix
    eye = np.eye(model.dim, dtype=np.complex128)
    result = p.coefficients[-1] * eye
    for c in p.coefficients[-2::-1]:
        result = a @ result + c * eye
    return float(np.linalg.norm(result - model.projection_matrix(sorted(p.split.sigma1)), 2))


def projection_approx_error(model: CompactNormalModel, p: IndicatorPolynomial, cross_check: bool = True) -> float:
    """
    Operator-norm error ‖p(A) − P_{σ₁}‖₂ = max |p(λ) − χ_{σ₁}(λ)| over σ(A).

    With cross_check the value is compared against dense_projection_error and
    CrossCheckMismatch is raised when they differ by more than 1e-9.
    """
    spectral = float(np.abs(p.evaluate(model.eigenvalues) - p.split.indicator(model)).max())
    if cross_check:
        dense = dense_projection_error(model, p)
        if abs(dense - spectral) > CROSS_CHECK_TOL:
            raise CrossCheckMismatch(f"spectral error {spectral:.3e} vs dense 2-norm {dense:.3e}")
    return spectral


def contour_error_bound(
    model: CompactNormalModel,
    p: IndicatorPolynomial,
    contours: Optional[Tuple[Optional[AdmissibleContour], Optional[AdmissibleContour]]] = None,
    sample_count: int = 200,
) -> float:
    """
    A-priori bound (ℓ/2π)·sup_{Ū₁∪Ū₂}|p − χ|·sup_{∂U}‖(A − z)⁻¹‖.

    The supremum over the closed disks is taken over disk samples together
    with the eigenvalues; for normal A, ‖(A − z)⁻¹‖ = 1/dist(z, σ(A)).
    """
    split = p.split
    contour1, contour2 = contours or propose_contours(model, split)
    length, worst, resolvent = 0.0, 0.0, 0.0
    for contour, target in ((contour1, 1.0), (contour2, 0.0)):
        if contour is None:
            continue
        length += contour.length
        for circle in contour.circles:
            worst = max(worst, float(np.abs(p.evaluate(circle.samples(sample_count)) - target).max()))
            nodes = circle.nodes(contour.nodes_per_circle)
            resolvent = max(resolvent, max(1.0 / model.distance_to_spectrum(z) for z in nodes))
    worst = max(worst, p.sup_error)
    return length / (2.0 * math.pi) * worst * resolvent


def polynomial_to_json(p: IndicatorPolynomial) -> Dict[str, Any]:
    return p.to_dict()
