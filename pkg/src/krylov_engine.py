"""
Orthonormal Krylov bases K_m(A, g) = span{g, Ag, ..., A^(m-1) g}.

Arnoldi with classical Gram-Schmidt and, by default, a second full
orthogonalization pass. Distances to the Krylov subspace are always computed
through the orthonormal basis.
"""
import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
import scipy.linalg

from src.errors import ZeroVector
from src.operator_model import CompactNormalModel
from src.utils.validators import as_vector, require_positive_int

logger = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-12


class Reorthogonalization(str, Enum):
    NEVER = "never"
    ALWAYS = "always"


@dataclass(frozen=True)
class KrylovBasis:
    """
    Arnoldi data for K_d(A, g).

    Attributes:
        vectors: N×d orthonormal columns, plus the next Arnoldi vector as an
            extra column when the recurrence has not broken down
        hessenberg: (d+1)×d upper Hessenberg matrix
        breakdown: True when an invariant subspace was reached
        seed_vector: The generating vector g
    """

    vectors: np.ndarray
    hessenberg: np.ndarray
    breakdown: bool
    seed_vector: np.ndarray

    @property
    def dim(self) -> int:
        return self.hessenberg.shape[1]

    @property
    def q(self) -> np.ndarray:
        """The orthonormal basis Q_d."""
        return self.vectors[:, : self.dim]

    def columns(self, m: int) -> np.ndarray:
        """Orthonormal basis of K_m for m <= d."""
        if not 1 <= m <= self.dim:
            raise ValueError(f"m must lie in 1..{self.dim}, got {m}")
        return self.vectors[:, :m]

    def projector_apply(self, v: Any, m: Optional[int] = None) -> np.ndarray:
        """Orthogonal projection Π v onto K_m (default: K_d)."""
        q = self.columns(m or self.dim)
        v = as_vector(v, q.shape[0])
        return q @ (q.conj().T @ v)

    def orthogonality_loss(self) -> float:
        q = self.q
        return float(np.abs(q.conj().T @ q - np.eye(self.dim)).max())

    def arnoldi_residual(self, model: CompactNormalModel) -> float:
        """‖A Q_d − Q_{d+1} H̃‖₂, or ‖A Q_d − Q_d H_d‖₂ after breakdown."""
        aq = np.column_stack([model.apply(col) for col in self.q.T])
        if self.breakdown:
            res = aq - self.q @ self.hessenberg[: self.dim, :]
        else:
            res = aq - self.vectors @ self.hessenberg
        return float(np.linalg.norm(res, 2))


def arnoldi(
    model: CompactNormalModel,
    g: Any,
    m_max: Optional[int] = None,
    reorth: Union[str, Reorthogonalization] = Reorthogonalization.ALWAYS,
    breakdown_tol: float = BREAKDOWN_TOL,
) -> KrylovBasis:
    """
    Run the Arnoldi recurrence on K(A, g).

    Args:
        model: Operator to iterate
        g: Generating vector (nonzero)
        m_max: Maximal basis dimension (default: N)
        reorth: "always" for a second Gram-Schmidt pass, "never" for one
        breakdown_tol: Relative tolerance; the recurrence stops when the next
            residual norm is <= breakdown_tol·‖A‖ (the recurrence runs on unit
            vectors, so this is the scale-free form of breakdown_tol·‖A‖·‖g‖)

    Returns:
        KrylovBasis of dimension d = min(m_max, termination index)
    """
    n = model.dim
    g = as_vector(g, n, "g")
    g_norm = float(np.linalg.norm(g))
    if g_norm == 0:
        raise ZeroVector("the Krylov subspace of the zero vector is {0}")
    m_max = n if m_max is None else require_positive_int(m_max, "m_max")
    if m_max > n:
        raise ValueError(f"m_max = {m_max} exceeds the dimension {n}")
    reorth = Reorthogonalization(reorth)
    threshold = breakdown_tol * model.norm

    vectors = np.zeros((n, m_max + 1), dtype=np.complex128)
    hessenberg = np.zeros((m_max + 1, m_max), dtype=np.complex128)
    vectors[:, 0] = g / g_norm
    dim = m_max
    breakdown = False

    for j in range(m_max):
        basis = vectors[:, : j + 1]
        w = model.apply(vectors[:, j])
        h = basis.conj().T @ w
        w -= basis @ h
        if reorth is Reorthogonalization.ALWAYS:
            s = basis.conj().T @ w
            w -= basis @ s
            h += s
        beta = float(np.linalg.norm(w))
        hessenberg[: j + 1, j] = h
        hessenberg[j + 1, j] = beta
        # the whole space is trivially invariant
        if beta <= threshold or j + 1 == n:
            dim = j + 1
            breakdown = True
            break
        vectors[:, j + 1] = w / beta

    if breakdown:
        vectors = vectors[:, :dim]
        logger.debug("Arnoldi breakdown at d=%d (N=%d)", dim, n)
    hessenberg = hessenberg[: dim + 1, :dim]
    vectors.setflags(write=False)
    hessenberg.setflags(write=False)
    g.setflags(write=False)
    return KrylovBasis(vectors, hessenberg, breakdown, g)


def distance_to_krylov(basis: KrylovBasis, v: Any, m: Optional[int] = None) -> float:
    """Return ‖v − Q_m Q_m* v‖ (default m = d)."""
    v = as_vector(v, basis.vectors.shape[0])
    return float(np.linalg.norm(v - basis.projector_apply(v, m)))


def distance_curve(basis: KrylovBasis, v: Any) -> List[float]:
    """Distances of v to K_1, ..., K_d."""
    v = as_vector(v, basis.vectors.shape[0])
    coefficients = basis.q.conj().T @ v
    return [float(np.linalg.norm(v - basis.q[:, :m] @ coefficients[:m])) for m in range(1, basis.dim + 1)]


def krylov_dimension(model: CompactNormalModel, g: Any, tol: float = BREAKDOWN_TOL) -> int:
    """Arnoldi termination index of K(A, g)."""
    return arnoldi(model, g, reorth=Reorthogonalization.ALWAYS, breakdown_tol=tol).dim


def principal_angles(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """
    Principal angles (radians, descending) between the column spans of f and g.

    Small angles are resolved through sines rather than cosines. When the
    dimensions differ the surplus directions count as angles of π/2.
    """
    f = np.atleast_2d(f)
    g = np.atleast_2d(g)
    if f.shape[1] == 0 and g.shape[1] == 0:
        return np.zeros(0)
    if f.shape[1] == 0 or g.shape[1] == 0:
        return np.full(max(f.shape[1], g.shape[1]), np.pi / 2)
    angles = scipy.linalg.subspace_angles(f, g)
    surplus = abs(f.shape[1] - g.shape[1])
    if surplus:
        angles = np.concatenate([np.full(surplus, np.pi / 2), angles])
    return angles


def dump_basis_csv(basis: KrylovBasis, path: Union[str, Path]) -> Path:
    """Write Q_d column-major as rows (column, row, re, im)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "row", "re", "im"])
        for k, column in enumerate(basis.q.T):
            for i, value in enumerate(column):
                writer.writerow([k, i, repr(float(value.real)), repr(float(value.imag))])
    return path
