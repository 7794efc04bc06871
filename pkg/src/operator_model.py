"""
Finite truncations of compact normal operators.

A model realizes A = Σ_{n∈S} λₙ Pₙ on ℂ^N as A = U D U*, where D is diagonal
and the eigenspace of each spectral index n occupies a contiguous block of
coordinates. Index 0 is reserved for the kernel (λ₀ = 0); its block may be
empty, in which case P₀ = 0.
"""
import cmath
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.errors import (
    DegenerateSpectrum,
    ModelInvariantError,
    SpectrumHit,
    UnknownSpectralIndex,
)
from src.utils.validators import as_vector, require_nonneg_int, require_positive_int

logger = logging.getLogger(__name__)

KERNEL_INDEX = 0

UNITARITY_TOL = 1e-12
COMMUTATOR_TOL = 1e-10
SPECTRUM_HIT_TOL = 1e-12
DUPLICATE_TOL = 1e-12
ACTIVE_TOL = 1e-12

# Phase nudge applied to colliding eigenvalues during generation
_PHASE_NUDGE = 1e-9


class SpectrumFamily(str, Enum):
    POWER_DECAY = "power_decay"
    EXP_DECAY = "exp_decay"
    RANDOM_ANNULUS = "random_annulus"
    TWO_CLUSTER = "two_cluster"


class ConjugationKind(str, Enum):
    DIAGONAL = "diagonal"
    HAAR_UNITARY = "haar_unitary"


@dataclass(frozen=True)
class SpectrumEntry:
    index: int
    eigenvalue: complex
    multiplicity: int


def _enumeration_key(value: complex) -> Tuple[float, float]:
    # modulus non-increasing, then phase
    return (-abs(value), cmath.phase(value))


@dataclass(frozen=True)
class SpectrumSpec:
    """
    Distinct eigenvalues with multiplicities, enumerated by the index set S.

    Attributes:
        entries: (n, λₙ, mₙ) for n = 0, 1, ..., count; entry 0 is the kernel
        tail_bound: Largest modulus discarded by the truncation, if known
    """

    entries: Tuple[SpectrumEntry, ...]
    tail_bound: Optional[float] = None

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries or entries[0].index != KERNEL_INDEX:
            raise ValueError("spectrum must start with the kernel entry (index 0)")
        kernel = entries[0]
        if kernel.eigenvalue != 0:
            raise ValueError("the kernel entry must carry eigenvalue 0")
        require_nonneg_int(kernel.multiplicity, "kernel multiplicity")

        values = []
        for position, entry in enumerate(entries[1:], start=1):
            if entry.index != position:
                raise ValueError(f"spectral indices must be 0..{len(entries) - 1} in order")
            if entry.eigenvalue == 0:
                raise ValueError(f"eigenvalue of index {entry.index} is zero")
            require_positive_int(entry.multiplicity, f"multiplicity of index {entry.index}")
            values.append(complex(entry.eigenvalue))

        keys = [_enumeration_key(v) for v in values]
        if keys != sorted(keys):
            raise ValueError("nonzero eigenvalues must be sorted by non-increasing modulus")
        if len(values) > 1:
            arr = np.asarray(values)
            diffs = np.abs(arr[:, None] - arr[None, :])
            np.fill_diagonal(diffs, np.inf)
            if diffs.min() == 0:
                raise DegenerateSpectrum("eigenvalues are not pairwise distinct")
        if self.dim < 1:
            raise ValueError("truncation dimension must be at least 1")

    @classmethod
    def from_eigenvalues(
        cls,
        eigenvalues: Sequence[complex],
        multiplicities: Optional[Sequence[int]] = None,
        kernel_dim: int = 0,
        tail_bound: Optional[float] = None,
    ) -> "SpectrumSpec":
        """
        Build a spectrum from explicit nonzero eigenvalues.

        The values are enumerated by modulus (then phase); multiplicities are
        matched to the values as given, before sorting.
        """
        values = [complex(v) for v in eigenvalues]
        if multiplicities is None:
            multiplicities = [1] * len(values)
        if len(multiplicities) != len(values):
            raise ValueError("one multiplicity per eigenvalue is required")
        pairs = sorted(zip(values, multiplicities), key=lambda p: _enumeration_key(p[0]))
        entries = [SpectrumEntry(KERNEL_INDEX, 0j, require_nonneg_int(kernel_dim, "kernel_dim"))]
        entries.extend(SpectrumEntry(n, value, int(mult)) for n, (value, mult) in enumerate(pairs, start=1))
        return cls(tuple(entries), tail_bound)

    @property
    def dim(self) -> int:
        return sum(entry.multiplicity for entry in self.entries)

    @property
    def kernel_dim(self) -> int:
        return self.entries[0].multiplicity

    @property
    def count(self) -> int:
        """Number of distinct nonzero eigenvalues."""
        return len(self.entries) - 1

    @property
    def indices(self) -> Tuple[int, ...]:
        """The index set S, kernel index included."""
        return tuple(entry.index for entry in self.entries)

    @property
    def spectral_indices(self) -> Tuple[int, ...]:
        """Indices whose eigenvalue belongs to σ(A)."""
        return tuple(e.index for e in self.entries if e.index != KERNEL_INDEX or e.multiplicity > 0)

    @property
    def nonzero_entries(self) -> Tuple[SpectrumEntry, ...]:
        return self.entries[1:]

    @property
    def norm(self) -> float:
        """Operator norm max |λₙ|."""
        return max((abs(e.eigenvalue) for e in self.nonzero_entries), default=0.0)

    @property
    def is_simple(self) -> bool:
        return self.kernel_dim <= 1 and all(e.multiplicity == 1 for e in self.nonzero_entries)

    def entry(self, n: int) -> SpectrumEntry:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 0 <= n < len(self.entries):
            raise UnknownSpectralIndex(f"spectral index {n!r} not in S = {{0..{self.count}}}")
        return self.entries[int(n)]

    def eigenvalue(self, n: int) -> complex:
        return self.entry(n).eigenvalue

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "entries": [
                {"n": e.index, "re": float(e.eigenvalue.real), "im": float(e.eigenvalue.imag), "mult": e.multiplicity}
                for e in self.entries
            ],
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectrumSpec":
        entries = tuple(
            SpectrumEntry(int(item["n"]), complex(item["re"], item["im"]), int(item["mult"]))
            for item in sorted(data["entries"], key=lambda item: item["n"])
        )
        spectrum = cls(entries, data.get("tail_bound"))
        if "dim" in data and int(data["dim"]) != spectrum.dim:
            raise ValueError(f"dim {data['dim']} does not match the multiplicities ({spectrum.dim})")
        return spectrum


def _separate_duplicates(values: np.ndarray, self_adjoint: bool) -> np.ndarray:
    """Nudge colliding eigenvalues apart, deterministically."""

    def collisions(arr: np.ndarray) -> List[Tuple[int, int]]:
        diffs = np.abs(arr[:, None] - arr[None, :])
        # relative to the larger modulus of each pair
        scale = np.maximum(np.abs(arr)[:, None], np.abs(arr)[None, :])
        i, j = np.nonzero(np.triu(diffs <= DUPLICATE_TOL * scale, k=1))
        return list(zip(i.tolist(), j.tolist()))

    pairs = collisions(values)
    if not pairs:
        return values
    values = values.copy()
    for _, j in pairs:
        if self_adjoint:
            values[j] *= 1.0 + _PHASE_NUDGE * (j + 1)
        else:
            values[j] *= cmath.exp(1j * _PHASE_NUDGE * (j + 1))
    logger.debug("separated %d colliding eigenvalue pairs", len(pairs))
    if collisions(values):
        raise DegenerateSpectrum("duplicate eigenvalues persist after phase perturbation")
    return values


def generate_spectrum(
    family: str,
    count: int,
    kernel_dim: int = 0,
    seed: int = 0,
    alpha: float = 1.0,
    rho: float = 0.5,
    r_min: float = 0.1,
    r_max: float = 1.0,
    cluster_radius: float = 0.1,
    centers: Sequence[complex] = (0.75, -0.75),
    multiplicities: Optional[Sequence[int]] = None,
    self_adjoint: bool = False,
) -> SpectrumSpec:
    """
    Generate a seeded spectrum from one of the built-in families.

    Args:
        family: power_decay (|λₙ| = n^-alpha), exp_decay (|λₙ| = rho^(n-1)),
            random_annulus (r_min <= |λ| <= r_max) or two_cluster (disks of
            radius cluster_radius around the two centers)
        count: Number of distinct nonzero eigenvalues
        kernel_dim: Dimension of the kernel block
        seed: Seed for phases and positions
        multiplicities: Optional multiplicity per index n = 1..count
        self_adjoint: Restrict eigenvalues to the real line

    Returns:
        A validated SpectrumSpec
    """
    family = SpectrumFamily(family)
    count = require_positive_int(count, "count")
    kernel_dim = require_nonneg_int(kernel_dim, "kernel_dim")
    rng = np.random.default_rng(seed)
    n = np.arange(1, count + 1, dtype=float)
    tail_bound = None

    if family is SpectrumFamily.TWO_CLUSTER:
        if len(centers) != 2:
            raise ValueError("two_cluster needs exactly two centers")
        c = np.asarray(centers, dtype=complex)
        if cluster_radius <= 0 or np.abs(c).min() <= cluster_radius:
            raise ValueError("cluster disks must have positive radius and exclude 0")
        if abs(c[0] - c[1]) <= 2 * cluster_radius:
            raise ValueError("cluster disks must be disjoint")
        if self_adjoint and np.any(c.imag != 0):
            raise ValueError("self-adjoint clusters need real centers")
        which = np.arange(count) % 2
        if self_adjoint:
            values = c[which] + rng.uniform(-cluster_radius, cluster_radius, count)
        else:
            radii = cluster_radius * np.sqrt(rng.uniform(0.0, 1.0, count))
            values = c[which] + radii * np.exp(1j * rng.uniform(-np.pi, np.pi, count))
    else:
        if family is SpectrumFamily.POWER_DECAY:
            if alpha <= 0:
                raise ValueError("power_decay needs alpha > 0")
            moduli = n ** (-alpha)
            tail_bound = float((count + 1) ** (-alpha))
        elif family is SpectrumFamily.EXP_DECAY:
            if not 0 < rho < 1:
                raise ValueError("exp_decay needs 0 < rho < 1")
            moduli = rho ** (n - 1)
            tail_bound = float(rho**count)
        else:
            if not 0 < r_min < r_max:
                raise ValueError("random_annulus needs 0 < r_min < r_max")
            moduli = np.sqrt(rng.uniform(r_min**2, r_max**2, count))
        if self_adjoint:
            phases = np.where(rng.uniform(0.0, 1.0, count) < 0.5, 0.0, np.pi)
        else:
            phases = rng.uniform(-np.pi, np.pi, count)
        values = moduli * np.exp(1j * phases)
        if self_adjoint:
            values = values.real.astype(complex)

    values = _separate_duplicates(values, self_adjoint)

    if multiplicities is None:
        mults = [1] * count
    else:
        if len(multiplicities) != count:
            raise ValueError("one multiplicity per eigenvalue is required")
        mults = [require_positive_int(m, "multiplicity") for m in multiplicities]

    # multiplicities follow the final enumeration, not the draw order
    ordered = sorted((complex(v) for v in values), key=_enumeration_key)
    entries = [SpectrumEntry(KERNEL_INDEX, 0j, kernel_dim)]
    entries.extend(SpectrumEntry(i, v, m) for i, (v, m) in enumerate(zip(ordered, mults), start=1))
    return SpectrumSpec(tuple(entries), tail_bound)


@dataclass(frozen=True)
class Conjugation:
    kind: ConjugationKind = ConjugationKind.DIAGONAL
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ConjugationKind(self.kind))
        if self.kind is ConjugationKind.HAAR_UNITARY and self.seed is None:
            raise ValueError("haar_unitary conjugation needs a seed")

    @classmethod
    def diagonal(cls) -> "Conjugation":
        return cls(ConjugationKind.DIAGONAL)

    @classmethod
    def haar_unitary(cls, seed: int) -> "Conjugation":
        return cls(ConjugationKind.HAAR_UNITARY, int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "seed": self.seed}


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    """
    Draw a Haar-distributed unitary matrix.

    QR of a seeded complex Ginibre matrix, with the phases of R's diagonal
    moved into Q so the factorization (and hence the draw) is unique.
    """
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = scipy.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class EigenProjection:
    """Orthonormal column block spanning ran Pₙ."""

    index: int
    columns: np.ndarray

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.columns @ (self.columns.conj().T @ v)

    def matrix(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T


@dataclass(frozen=True)
class ModelCertificate:
    unitarity: float
    commutator: float
    resolution: float
    orthogonality: float
    reconstruction: float


class CompactNormalModel:
    """
    A finite truncation A = U D U* of a compact normal operator.

    Attributes:
        spectrum: The spectral data
        conjugation: How the eigenbasis U was produced
        dim: Truncation dimension N
    """

    def __init__(self, spectrum: SpectrumSpec, conjugation: Conjugation, unitary: Optional[np.ndarray] = None):
        """
        Initialize a model from its spectrum and eigenbasis.

        Args:
            spectrum: Validated spectral data
            conjugation: Conjugation descriptor (diagonal or Haar unitary)
            unitary: N×N unitary eigenbasis; None for the diagonal model
        """
        self.spectrum = spectrum
        self.conjugation = conjugation
        self.dim = spectrum.dim

        eigenvalues = []
        block_index = []
        self._blocks: Dict[int, slice] = {}
        start = 0
        for entry in list(spectrum.nonzero_entries) + [spectrum.entries[0]]:
            self._blocks[entry.index] = slice(start, start + entry.multiplicity)
            eigenvalues.extend([entry.eigenvalue] * entry.multiplicity)
            block_index.extend([entry.index] * entry.multiplicity)
            start += entry.multiplicity

        self._eigenvalues = np.asarray(eigenvalues, dtype=np.complex128)
        self._eigenvalues.setflags(write=False)
        self._block_index = np.asarray(block_index, dtype=np.int64)
        self._block_index.setflags(write=False)

        if unitary is not None:
            unitary = np.array(unitary, dtype=np.complex128)
            if unitary.shape != (self.dim, self.dim):
                raise ValueError(f"unitary has shape {unitary.shape}, expected ({self.dim}, {self.dim})")
            unitary.setflags(write=False)
        self._unitary = unitary

    def __repr__(self) -> str:
        return (
            f"CompactNormalModel(dim={self.dim}, count={self.spectrum.count}, "
            f"kernel_dim={self.spectrum.kernel_dim}, conjugation={self.conjugation.kind.value})"
        )

    @property
    def is_diagonal(self) -> bool:
        return self._unitary is None

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalue of each coordinate of the eigenbasis."""
        return self._eigenvalues

    @property
    def block_index(self) -> np.ndarray:
        """Spectral index n of each coordinate of the eigenbasis."""
        return self._block_index

    @property
    def norm(self) -> float:
        return self.spectrum.norm

    @cached_property
    def basis(self) -> np.ndarray:
        """The unitary U (identity for the diagonal model)."""
        if self._unitary is None:
            eye = np.eye(self.dim, dtype=np.complex128)
            eye.setflags(write=False)
            return eye
        return self._unitary

    @cached_property
    def matrix(self) -> np.ndarray:
        """The assembled dense operator U D U*."""
        if self._unitary is None:
            dense = np.diag(self._eigenvalues)
        else:
            dense = (self._unitary * self._eigenvalues) @ self._unitary.conj().T
        dense.setflags(write=False)
        return dense

    def block(self, n: int) -> slice:
        self.spectrum.entry(n)
        return self._blocks[int(n)]

    def to_eigen(self, v: np.ndarray) -> np.ndarray:
        """Coordinates U*v of v in the eigenbasis."""
        return v.copy() if self._unitary is None else self._unitary.conj().T @ v

    def from_eigen(self, w: np.ndarray) -> np.ndarray:
        return w.copy() if self._unitary is None else self._unitary @ w

    def functional_apply(self, values: np.ndarray, v: Any) -> np.ndarray:
        """
        Spectral functional calculus f(A)v = U diag(f) U* v.

        Args:
            values: f evaluated at each coordinate's eigenvalue (length N)
            v: Vector to transform
        """
        v = as_vector(v, self.dim)
        return self.from_eigen(np.asarray(values, dtype=np.complex128) * self.to_eigen(v))

    def apply(self, v: Any) -> np.ndarray:
        return self.functional_apply(self._eigenvalues, v)

    def apply_adjoint(self, v: Any) -> np.ndarray:
        return self.functional_apply(self._eigenvalues.conj(), v)

    def eigenprojection(self, n: int) -> EigenProjection:
        return EigenProjection(int(n), self.basis[:, self.block(n)])

    def eigenprojection_apply(self, n: int, v: Any) -> np.ndarray:
        v = as_vector(v, self.dim)
        return self.eigenprojection(n).apply(v)

    def distance_to_spectrum(self, z: complex) -> float:
        return float(np.abs(self._eigenvalues - z).min())

    def resolvent_apply(self, z: complex, v: Any) -> np.ndarray:
        """Return (A - z)^-1 v computed spectrally."""
        if self.distance_to_spectrum(z) <= SPECTRUM_HIT_TOL:
            raise SpectrumHit(f"z = {z} lies within {SPECTRUM_HIT_TOL} of the spectrum")
        return self.functional_apply(1.0 / (self._eigenvalues - z), v)

    def component_norms(self, g: Any) -> Dict[int, float]:
        """Return ‖Pₙg‖ for every index n ∈ S."""
        g = as_vector(g, self.dim, "g")
        weights = np.bincount(self._block_index, weights=np.abs(self.to_eigen(g)) ** 2, minlength=len(self.spectrum.entries))
        return {n: float(math.sqrt(weights[n])) for n in self.spectrum.indices}

    def active_indices(self, g: Any, tol: float = ACTIVE_TOL) -> Tuple[int, ...]:
        """Indices n with ‖Pₙg‖ > tol·‖g‖, in enumeration order."""
        norms = self.component_norms(g)
        g_norm = math.sqrt(sum(value**2 for value in norms.values()))
        if g_norm == 0:
            return ()
        return tuple(n for n, value in norms.items() if value > tol * g_norm)

    def kernel_basis(self) -> np.ndarray:
        return self.basis[:, self.block(KERNEL_INDEX)]

    def projection_matrix(self, indices: Iterable[int]) -> np.ndarray:
        """Dense Σ_{n∈indices} Pₙ."""
        columns = [self.basis[:, self.block(n)] for n in indices]
        if not columns:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        block = np.hstack(columns)
        return block @ block.conj().T

    def certify(self) -> ModelCertificate:
        """Measure the numerical invariants of the model."""
        u = self.basis
        gram = u.conj().T @ u
        unitarity = float(np.abs(gram - np.eye(self.dim)).max())
        same_block = self._block_index[:, None] == self._block_index[None, :]
        orthogonality = float(np.abs(np.where(same_block, 0.0, gram)).max()) if self.dim > 1 else 0.0
        resolution = float(np.abs(u @ u.conj().T - np.eye(self.dim)).max())
        a = self.matrix
        commutator = float(np.linalg.norm(a @ a.conj().T - a.conj().T @ a, 2))
        rebuilt = np.zeros_like(a)
        for entry in self.spectrum.nonzero_entries:
            rebuilt += entry.eigenvalue * self.eigenprojection(entry.index).matrix()
        reconstruction = float(np.linalg.norm(a - rebuilt, 2))
        return ModelCertificate(unitarity, commutator, resolution, orthogonality, reconstruction)


def build_model(spectrum: SpectrumSpec, conjugation: Optional[Conjugation] = None) -> CompactNormalModel:
    """
    Construct a model from a spectrum and a conjugation.

    Args:
        spectrum: Validated spectral data
        conjugation: Conjugation.diagonal() (default) or Conjugation.haar_unitary(seed)

    Returns:
        An immutable CompactNormalModel
    """
    conjugation = conjugation or Conjugation.diagonal()
    if conjugation.kind is ConjugationKind.DIAGONAL:
        return CompactNormalModel(spectrum, conjugation)

    unitary = haar_unitary(spectrum.dim, conjugation.seed)
    model = CompactNormalModel(spectrum, conjugation, unitary)
    unitarity = float(np.abs(unitary.conj().T @ unitary - np.eye(spectrum.dim)).max())
    if unitarity > UNITARITY_TOL:
        raise ModelInvariantError(f"Haar basis deviates from unitarity by {unitarity:.3e}")
    a = model.matrix
    # Frobenius norm bounds the spectral norm from above
    commutator = float(np.linalg.norm(a @ a.conj().T - a.conj().T @ a))
    if commutator > COMMUTATOR_TOL:
        raise ModelInvariantError(f"assembled operator is not normal: commutator {commutator:.3e}")
    logger.debug("built %r (unitarity %.2e, commutator %.2e)", model, unitarity, commutator)
    return model


def apply(model: CompactNormalModel, v: Any) -> np.ndarray:
    return model.apply(v)


def apply_adjoint(model: CompactNormalModel, v: Any) -> np.ndarray:
    return model.apply_adjoint(v)


def eigenprojection_apply(model: CompactNormalModel, n: int, v: Any) -> np.ndarray:
    return model.eigenprojection_apply(n, v)


def resolvent_apply(model: CompactNormalModel, z: complex, v: Any) -> np.ndarray:
    return model.resolvent_apply(z, v)


def model_to_json(model: CompactNormalModel) -> str:
    """Serialize a model as {dim, entries: [{n, re, im, mult}], tail_bound, conjugation: {kind, seed}}."""
    document = model.spectrum.to_dict()
    document["conjugation"] = model.conjugation.to_dict()
    return json.dumps(document, indent=2)


def model_from_json(text: str) -> CompactNormalModel:
    document = json.loads(text)
    spectrum = SpectrumSpec.from_dict(document)
    conj = document.get("conjugation") or {"kind": "diagonal"}
    return build_model(spectrum, Conjugation(conj["kind"], conj.get("seed")))
