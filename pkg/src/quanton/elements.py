"""Interferometric components and their composition into pipelines.

Phase conventions: a reflection at a beam splitter or mirror contributes a
factor ``i``; the phase shifter acts only on level ``|1>``; the polarizing
beam splitter reflects vertical polarization with a factor ``i``.

An element may carry an *arm condition* ``(label, level)``: it then acts on
its target only in the branch where subsystem ``label`` is at ``level``
(a wave plate sitting in one arm of an interferometer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qstate import ModeSpace, PureState, StateError

INV_SQRT2 = math.sqrt(0.5)
UNITARY_TOL = 1e-12

BBS = "bbs"
BS = "bs"
MIRROR = "mirror"
PHASE_SHIFTER = "ps"
HWP = "hwp"
QWP = "qwp"
PBS = "pbs"
BLOCKER = "block"

KINDS = (BBS, BS, MIRROR, PHASE_SHIFTER, HWP, QWP, PBS, BLOCKER)
UNITARY_KINDS = (BBS, BS, MIRROR, PHASE_SHIFTER, HWP, QWP)

# Short names used for default stage labels.
_DISPLAY = {BBS: "BBS", BS: "BS", MIRROR: "M", PHASE_SHIFTER: "PS", HWP: "HWP",
            QWP: "QWP", PBS: "PBS", BLOCKER: "block"}

DETECTOR_LABEL = "detector"


class ElementError(ValueError):
    """An element or pipeline description is invalid."""


class BlockedError(ElementError):
    """A blocker removed all of the remaining amplitude."""

    def __init__(self, message: str, survival: float = 0.0):
        super().__init__(message)
        self.survival = survival


@dataclass(frozen=True)
class Element:
    """One component acting on ``target`` (a tuple of subsystem labels).

    Use the factory functions (:func:`bbs`, :func:`mirror`, ...) rather than
    building instances by hand.
    """

    kind: str
    target: tuple[str, ...]
    t: Optional[float] = None
    r: Optional[float] = None
    phi: Optional[float] = None
    blocked_path: Optional[int] = None
    arm: Optional[tuple[str, int]] = None
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ElementError(f"unknown element kind {self.kind!r}")
        object.__setattr__(self, "target", tuple(self.target))
        expected = 2 if self.kind == PBS else 1
        if len(self.target) != expected:
            raise ElementError(f"{self.kind} takes {expected} target(s), got {self.target}")
        if self.kind in (BBS, BS):
            if self.t is None or self.r is None:
                raise ElementError("beam splitter needs T and R")
            if not (0.0 <= self.t <= 1.0 and 0.0 <= self.r <= 1.0):
                raise ElementError(f"T out of range [0,1]: T={self.t!r}, R={self.r!r}")
            if abs(self.t ** 2 + self.r ** 2 - 1.0) > 1e-12:
                raise ElementError(f"T^2 + R^2 != 1 for T={self.t!r}, R={self.r!r}")
        if self.kind == PHASE_SHIFTER and (self.phi is None or not math.isfinite(self.phi)):
            raise ElementError("phase shifter needs a finite phi")
        if self.kind == BLOCKER and self.blocked_path not in (0, 1):
            raise ElementError(f"blocked path must be 0 or 1, got {self.blocked_path!r}")
        if self.arm is not None:
            if self.kind not in UNITARY_KINDS:
                raise ElementError(f"{self.kind} cannot carry an arm condition")
            arm_label, level = self.arm
            if arm_label in self.target:
                raise ElementError("arm condition must name a different subsystem than the target")
            object.__setattr__(self, "arm", (str(arm_label), int(level)))

    @property
    def display_name(self) -> str:
        return _DISPLAY[self.kind]

    def labelled(self, label: str) -> "Element":
        return Element(self.kind, self.target, self.t, self.r, self.phi,
                       self.blocked_path, self.arm, label)


def _check_t(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or not 0.0 <= t <= 1.0:
        raise ElementError(f"T out of range [0,1]: {t!r}")
    return t


def reflectance(t: float) -> float:
    """R = sqrt(1 - T^2), exact for the balanced splitter."""
    t = _check_t(t)
    if t == INV_SQRT2:
        return INV_SQRT2
    return math.sqrt(max(0.0, 1.0 - t * t))


def bbs(target: str, t: float, *, arm=None, label=None) -> Element:
    t = _check_t(t)
    return Element(BBS, (target,), t=t, r=reflectance(t), arm=arm, label=label)


def bs(target: str, *, arm=None, label=None) -> Element:
    return Element(BS, (target,), t=INV_SQRT2, r=INV_SQRT2, arm=arm, label=label)


def mirror(target: str, *, arm=None, label=None) -> Element:
    return Element(MIRROR, (target,), arm=arm, label=label)


def phase_shifter(target: str, phi: float, *, arm=None, label=None) -> Element:
    return Element(PHASE_SHIFTER, (target,), phi=float(phi), arm=arm, label=label)


def hwp(target: str, *, arm=None, label=None) -> Element:
    return Element(HWP, (target,), arm=arm, label=label)


def qwp(target: str, *, arm=None, label=None) -> Element:
    return Element(QWP, (target,), arm=arm, label=label)


def pbs(path: str, pol: str, *, label=None) -> Element:
    return Element(PBS, (path, pol), label=label)


def blocker(target: str, path: int, *, label=None) -> Element:
    return Element(BLOCKER, (target,), blocked_path=path, label=label)


def element_matrix(e: Element) -> np.ndarray:
    """2x2 unitary of a single-target element; columns are images of |0>, |1>."""
    if e.kind in (BBS, BS):
        t, r = e.t, e.r
        return np.array([[t, 1j * r], [1j * r, t]], dtype=np.complex128)
    if e.kind == MIRROR:
        return np.array([[0, 1j], [1j, 0]], dtype=np.complex128)
    if e.kind == PHASE_SHIFTER:
        return np.array([[1, 0], [0, np.exp(1j * e.phi)]], dtype=np.complex128)
    if e.kind == HWP:
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if e.kind == QWP:
        return INV_SQRT2 * np.array([[1, 1], [1j, -1j]], dtype=np.complex128)
    raise ElementError(f"{e.kind} has no single-subsystem unitary matrix")


def _check_targets(e: Element, space: ModeSpace) -> None:
    for label in e.target:
        space.index(label)
    if e.kind in UNITARY_KINDS or e.kind == BLOCKER:
        if space.dim_of(e.target[0]) != 2:
            raise ElementError(f"{e.kind} needs a two-level target, {e.target[0]!r} has dim "
                               f"{space.dim_of(e.target[0])}")
    if e.arm is not None:
        arm_label, level = e.arm
        if not 0 <= level < space.dim_of(arm_label):
            raise ElementError(f"arm level {level} out of range for {arm_label!r}")


def _apply_unitary(e: Element, s: PureState) -> PureState:
    space = s.space
    dims = space.dims
    k = space.index(e.target[0])
    # view as (before, target, after) so the 2x2 acts on the middle axis
    psi = s.amplitudes.reshape(math.prod(dims[:k]), dims[k], math.prod(dims[k + 1:]))
    out = np.einsum("ij,ajb->aib", element_matrix(e), psi).reshape(dims)
    if e.arm is not None:
        # Only the branch with the arm subsystem at `level` is transformed.
        j = space.index(e.arm[0])
        mask = np.zeros(dims[j], dtype=bool)
        mask[e.arm[1]] = True
        shape = [1] * len(dims)
        shape[j] = dims[j]
        out = np.where(mask.reshape(shape), out, s.amplitudes.reshape(dims))
    return PureState(space, out.reshape(-1))


def _apply_blocker(e: Element, s: PureState) -> tuple[PureState, float]:
    space = s.space
    k = space.index(e.target[0])
    psi = np.array(s.amplitudes.reshape(space.dims))
    index = [slice(None)] * len(space.dims)
    index[k] = e.blocked_path
    psi[tuple(index)] = 0.0
    survival = float(np.sum(np.abs(psi) ** 2))
    if survival <= 1e-15:
        raise BlockedError(f"blocker on path {e.blocked_path} removes the whole state", survival=0.0)
    return PureState(space, psi.reshape(-1) / math.sqrt(survival)), survival


def detector_space(pol_label: str) -> ModeSpace:
    return ModeSpace(((DETECTOR_LABEL, 4), (pol_label, 2)))


def apply_pbs(s: PureState, path: Optional[str] = None, pol: Optional[str] = None) -> PureState:
    """Route a path x polarization state onto four detector ports.

    (path 0, H) -> D0, (path 1, H) -> D1, (path 0, V) -> i D2, (path 1, V) -> i D3;
    the polarization is kept.
    """
    labels = s.space.labels
    path = labels[0] if path is None else path
    pol = labels[-1] if pol is None else pol
    if s.space.subsystems != ((path, 2), (pol, 2)):
        raise ElementError(f"pbs needs a space of exactly ({path}:2, {pol}:2), got {s.space.subsystems}")
    a = s.amplitudes.reshape(2, 2)
    out = np.zeros((4, 2), dtype=np.complex128)
    out[0, 0] = a[0, 0]
    out[1, 0] = a[1, 0]
    out[2, 1] = 1j * a[0, 1]
    out[3, 1] = 1j * a[1, 1]
    return PureState(detector_space(pol), out.reshape(-1))


def apply(e: Element, s: PureState) -> tuple[PureState, float]:
    """Apply one element; returns the new state and its survival probability."""
    _check_targets(e, s.space)
    if e.kind == PBS:
        return apply_pbs(s, *e.target), 1.0
    if e.kind == BLOCKER:
        return _apply_blocker(e, s)
    return _apply_unitary(e, s), 1.0


@dataclass(frozen=True)
class StageRecord:
    label: str
    state: PureState
    survival: float


@dataclass(frozen=True)
class Pipeline:
    space: ModeSpace
    stages: tuple[Element, ...] = ()

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        space = self.space
        for position, e in enumerate(stages):
            try:
                _check_targets(e, space)
            except StateError as exc:
                raise ElementError(str(exc)) from None
            if e.kind == PBS:
                if position != len(stages) - 1:
                    raise ElementError("pbs must be the last stage")
                path, pol = e.target
                if space.subsystems != ((path, 2), (pol, 2)):
                    raise ElementError(f"pbs needs a space of exactly ({path}:2, {pol}:2)")
                space = detector_space(pol)

    @property
    def output_space(self) -> ModeSpace:
        if self.stages and self.stages[-1].kind == PBS:
            return detector_space(self.stages[-1].target[1])
        return self.space

    def stage_labels(self) -> list[str]:
        counts: dict[str, int] = {}
        labels = []
        for e in self.stages:
            counts[e.kind] = counts.get(e.kind, 0) + 1
            labels.append(e.label or f"after_{e.display_name}{counts[e.kind]}")
        return labels


def run_pipeline(p: Pipeline, initial: PureState) -> list[StageRecord]:
    """Run every stage; the first record is the initial state under label ``initial``."""
    if initial.space != p.space:
        raise ElementError(f"initial state lives on {initial.space.subsystems}, "
                           f"pipeline expects {p.space.subsystems}")
    records = [StageRecord("initial", initial, 1.0)]
    state, survival = initial, 1.0
    for label, e in zip(p.stage_labels(), p.stages):
        try:
            state, kept = apply(e, state)
        except BlockedError as exc:
            raise BlockedError(f"{label}: {exc}", survival=0.0) from None
        survival *= kept
        records.append(StageRecord(label, state, survival))
    return records
