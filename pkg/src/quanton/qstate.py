"""Labeled quantum states over a tensor-product mode space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from . import linalg

NORM_TOL = 1e-10
DENSITY_TOL = 1e-12
POSITIVITY_TOL = 1e-10


class StateError(ValueError):
    """A state failed validation."""


@dataclass(frozen=True)
class ModeSpace:
    """Ordered subsystems ``(label, dim)``; subsystem 0 varies slowest."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        if not subs:
            raise StateError("a mode space needs at least one subsystem")
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise StateError(f"duplicate subsystem labels in {labels}")
        for label, dim in subs:
            if dim < 1:
                raise StateError(f"subsystem {label!r} has non-positive dimension {dim}")
        object.__setattr__(self, "subsystems", subs)
        # derived views, cached because states consult them on every operation
        object.__setattr__(self, "_labels", tuple(labels))
        object.__setattr__(self, "_dims", tuple(dim for _, dim in subs))
        object.__setattr__(self, "_dim", math.prod(self._dims))

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "ModeSpace":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self._dims

    @property
    def dim(self) -> int:
        return self._dim

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise StateError(f"unknown subsystem label {label!r}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def basis_index(self, ket: dict[str, int]) -> int:
        """Flat index of the product basis ket ``{label: level}``."""
        if set(ket) != set(self.labels):
            raise StateError(f"basis ket must name every subsystem {self.labels}")
        flat = 0
        for label, dim in self.subsystems:
            level = int(ket[label])
            if not 0 <= level < dim:
                raise StateError(f"level {level} out of range for {label!r} (dim {dim})")
            flat = flat * dim + level
        return flat

    def to_json(self) -> list[dict]:
        return [{"label": label, "dim": dim} for label, dim in self.subsystems]

    @classmethod
    def from_json(cls, data: Iterable[dict]) -> "ModeSpace":
        return cls(tuple((entry["label"], entry["dim"]) for entry in data))


@dataclass(frozen=True, eq=False)
class PureState:
    space: ModeSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = linalg.as_vector(self.amplitudes)
        if amps.size != self.space.dim:
            raise StateError(f"{amps.size} amplitudes for a space of dimension {self.space.dim}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, space: ModeSpace, levels: Optional[dict[str, int]] = None, /,
              **kwargs: int) -> "PureState":
        """Product basis ket, e.g. ``PureState.basis(space, path=0, pol=1)``."""
        amps = np.zeros(space.dim, dtype=np.complex128)
        amps[space.basis_index({**(levels or {}), **kwargs})] = 1.0
        return cls(space, amps)

    @classmethod
    def normalized(cls, space: ModeSpace, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise StateError("cannot normalize a zero or non-finite vector")
        return cls(space, amps / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def marginal(self, label: str) -> np.ndarray:
        """Born-rule distribution over the levels of one subsystem."""
        k = self.space.index(label)
        probs = self.probabilities().reshape(self.space.dims)
        axes = tuple(i for i in range(len(self.space.dims)) if i != k)
        return probs.sum(axis=axes) if axes else probs


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: ModeSpace
    rho: np.ndarray

    def __post_init__(self):
        rho = linalg.as_matrix(self.rho)
        d = self.space.dim
        if rho.shape != (d, d):
            raise StateError(f"density matrix shape {rho.shape} does not match dimension {d}")
        if not linalg.is_hermitian(rho, DENSITY_TOL):
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > DENSITY_TOL:
            raise StateError(f"density matrix trace is {tr!r}, expected 1")
        lowest = linalg.hermitian_eigenvalues(rho)[0]
        if lowest < -POSITIVITY_TOL:
            raise StateError(f"density matrix has negative eigenvalue {lowest!r}")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.space.dim

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.rho))


AnyState = Union[PureState, DensityMatrix]


def density_from_pure(s: PureState) -> DensityMatrix:
    return DensityMatrix(s.space, np.outer(s.amplitudes, s.amplitudes.conj()))


def reduced_state(s: AnyState, keep_label: str) -> DensityMatrix:
    """Partial trace over every subsystem except ``keep_label``."""
    k = s.space.index(keep_label)
    sub = ModeSpace(((keep_label, s.space.dims[k]),))
    if isinstance(s, PureState):
        # Contract the amplitude tensor directly; cheaper than forming the full projector.
        dims = s.space.dims
        t = np.moveaxis(s.amplitudes.reshape(dims), k, 0).reshape(dims[k], -1)
        rho = t @ t.conj().T
    else:
        rho = linalg.partial_trace(s.rho, s.space.dims, k)
    return DensityMatrix(sub, rho)


def purity(rho: DensityMatrix) -> float:
    r = rho.rho
    return float(np.real(np.trace(r @ r)))


def global_phase_equal(a: PureState, b: PureState, tol: float = linalg.TOL) -> bool:
    """True when ``a`` equals ``e^{i theta} b`` for some real theta.

    Implemented as ``|<a|b>| >= 1 - tol``; see :func:`phase_aligned_distance`
    for a componentwise comparison.
    """
    if a.space.dims != b.space.dims:
        raise linalg.DimensionError(f"spaces differ: {a.space.dims} vs {b.space.dims}")
    return bool(abs(np.vdot(a.amplitudes, b.amplitudes)) >= 1 - tol)


def phase_aligned_distance(a: PureState, b: PureState) -> float:
    """Largest componentwise deviation between ``a`` and ``b`` after removing the best global phase."""
    if a.space.dims != b.space.dims:
        raise linalg.DimensionError(f"spaces differ: {a.space.dims} vs {b.space.dims}")
    overlap = np.vdot(b.amplitudes, a.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a.amplitudes - phase * b.amplitudes)))


# JSON schema:
#   {"space": [{"label": ..., "dim": ...}, ...], "kind": "pure", "amplitudes": [[re, im], ...]}
#   {"space": [...], "kind": "density", "rho": [[[re, im], ...], ...]}

def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def state_to_json(s: AnyState) -> dict:
    if isinstance(s, PureState):
        return {"space": s.space.to_json(), "kind": "pure",
                "amplitudes": [_pair(z) for z in s.amplitudes]}
    return {"space": s.space.to_json(), "kind": "density",
            "rho": [[_pair(z) for z in row] for row in s.rho]}


def _complex_entries(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape[-1] != 2:
        raise StateError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_from_json(data: dict, input_tol: float = 1e-8) -> AnyState:
    """Parse the state JSON format.

    Hand-written files rarely carry full double precision, so pure states
    within ``input_tol`` of unit norm are renormalized before validation.
    """
    try:
        space = ModeSpace.from_json(data["space"])
        kind = data["kind"]
        if kind == "pure":
            amps = _complex_entries(data["amplitudes"])
            norm = float(np.linalg.norm(amps))
            if abs(norm - 1.0) > input_tol:
                raise StateError(f"state is not normalized (norm {norm!r})")
            if abs(norm - 1.0) > NORM_TOL:
                amps = amps / norm
            return PureState(space, amps)
        if kind == "density":
            return DensityMatrix(space, _complex_entries(data["rho"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise StateError(f"malformed state JSON: {exc}") from None
    raise StateError(f"unknown state kind {kind!r}")
