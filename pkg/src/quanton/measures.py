"""Wave, particle and entanglement quantifiers and the relations between them.

All quantities are evaluated in the computational basis of the state's
declared space and are deliberately not normalized by ``d - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .qstate import DensityMatrix, PureState, density_from_pure, reduced_state

#: Slack allowed below zero before a residual counts as a real violation.
RESIDUAL_TOL = 1e-10
GY_TOL = 1e-12
DEFAULT_GRID = 256


class VisibilityUndefined(ValueError):
    """The fringe has p_max + p_min = 0, so the visibility has no value."""


class ComplementarityViolation(ArithmeticError):
    """A complementarity budget came out negative beyond numerical noise."""


def _rho(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix) else linalg.as_matrix(rho)


def l1_coherence(rho, basis_label: str = "computational") -> float:
    """Sum of the moduli of the off-diagonal entries.

    ``basis_label`` only names the basis for reports; no basis change is made.
    """
    r = _rho(rho)
    return float(np.sum(np.abs(r)) - np.sum(np.abs(np.diag(r))))


def _offdiag_sqrt_sum(diag: np.ndarray) -> float:
    s = np.sqrt(np.clip(diag, 0.0, None))
    return float(np.sum(s) ** 2 - np.sum(s * s))


def l1_predictability(rho) -> float:
    """``d - 1 - sum_{j != k} sqrt(rho_jj rho_kk)``."""
    r = _rho(rho)
    d = r.shape[0]
    value = d - 1 - _offdiag_sqrt_sum(np.real(np.diag(r)))
    return max(0.0, value) if value > -RESIDUAL_TOL else value


def _entanglement_raw(state: PureState, part_label: str) -> tuple[float, DensityMatrix]:
    rho_a = reduced_state(state, part_label)
    return rho_a.dim - 1 - l1_coherence(rho_a) - l1_predictability(rho_a), rho_a


def l1_entanglement(state: PureState, part_label: str) -> float:
    """Entanglement monotone completing ``C + P <= d - 1`` for a part of a pure state."""
    raw, _ = _entanglement_raw(state, part_label)
    if raw < -RESIDUAL_TOL:
        raise ComplementarityViolation(f"l1 entanglement came out negative: {raw!r}")
    return max(0.0, raw)


def schmidt_coefficients(state: PureState, part_label: str) -> list[float]:
    """Squared singular values of the amplitudes reshaped as (part, rest)."""
    k = state.space.index(part_label)
    dims = state.space.dims
    m = np.moveaxis(state.amplitudes.reshape(dims), k, 0).reshape(dims[k], -1)
    return [s * s for s in linalg.singular_values(m)]


def robustness_pure(state: PureState, part_label: str) -> float:
    """Robustness of entanglement of a pure state, ``(sum_i sqrt(lambda_i))^2 - 1``."""
    lam = schmidt_coefficients(state, part_label)
    return max(0.0, sum(math.sqrt(x) for x in lam) ** 2 - 1.0)


def gy_visibility_analytic_bmzi(t1: float, t2: float, detector: int) -> float:
    """Closed-form fringe visibility at detector 0 or 1 of the biased interferometer."""
    for t in (t1, t2):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"T out of range [0,1]: {t!r}")
    r1 = math.sqrt(max(0.0, 1 - t1 * t1))
    r2 = math.sqrt(max(0.0, 1 - t2 * t2))
    numerator = 2 * t1 * r1 * t2 * r2
    if detector == 0:
        denominator = t1 ** 2 * r2 ** 2 + r1 ** 2 * t2 ** 2
    elif detector == 1:
        denominator = t1 ** 2 * t2 ** 2 + r1 ** 2 * r2 ** 2
    else:
        raise ValueError(f"detector must be 0 or 1, got {detector!r}")
    if denominator == 0:
        raise VisibilityUndefined(f"visibility undefined at detector {detector} for T1={t1}, T2={t2}")
    return numerator / denominator


def phase_grid(grid: int = DEFAULT_GRID) -> np.ndarray:
    return 2 * np.pi * np.arange(grid) / grid


def gy_visibility_sweep(prob_of_phi: Callable[[float], float], grid: int = DEFAULT_GRID) -> float:
    """(p_max - p_min) / (p_max + p_min) over ``phi = 2 pi k / grid``.

    With an even grid the extrema of any ``A + B cos(phi)`` fringe land on
    phi = 0 and pi, so the result is exact for such fringes.
    """
    if grid < 8:
        raise ValueError(f"grid must have at least 8 points, got {grid}")
    values = [float(prob_of_phi(phi)) for phi in phase_grid(grid)]
    for p in values:
        if not -GY_TOL <= p <= 1 + GY_TOL:
            raise ValueError(f"probability {p!r} outside [0,1]")
    return visibility_from_samples(values)


def visibility_from_samples(values) -> float:
    p_max, p_min = max(values), min(values)
    if p_max + p_min <= 0:
        raise VisibilityUndefined("visibility undefined: p_max + p_min = 0")
    return float(max(0.0, (p_max - p_min) / (p_max + p_min)))


def gy_predictability(w) -> float:
    """Greenberger-Yasin predictability ``|w1 - w2|``."""
    w = [float(x) for x in w]
    if len(w) != 2 or min(w) < -GY_TOL or abs(sum(w) - 1.0) > GY_TOL:
        raise ValueError(f"expected a two-outcome probability distribution, got {w}")
    return abs(w[0] - w[1])


def check_gy_relation(visibility: float, predictability: float) -> tuple[float, bool]:
    value = visibility ** 2 + predictability ** 2
    return value, value <= 1 + GY_TOL


@dataclass(frozen=True)
class ComplementarityBudget:
    """Wave/particle/entanglement values for one state, against the bound ``d - 1``.

    ``residual`` is clamped at zero when it is negative only by numerical
    noise; the unclamped value is kept in ``raw_residual``.
    """

    d: int
    coherence: float
    predictability: float
    entanglement: Optional[float] = None
    raw_residual: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.raw_residual < -RESIDUAL_TOL:
            raise ComplementarityViolation(
                f"C + P{' + E' if self.entanglement is not None else ''} exceeds d - 1 "
                f"by {-self.raw_residual!r}")

    @property
    def bound(self) -> int:
        return self.d - 1

    @property
    def residual(self) -> float:
        return max(0.0, self.raw_residual)

    def to_dict(self) -> dict:
        return {"d": self.d, "coherence": self.coherence, "predictability": self.predictability,
                "entanglement": self.entanglement, "bound": self.bound, "residual": self.residual}


def _make_budget(d: int, c: float, p: float, e: Optional[float]) -> ComplementarityBudget:
    raw = (d - 1) - c - p - (e or 0.0)
    return ComplementarityBudget(d, c, p, e, raw_residual=raw)


def budget(rho: DensityMatrix) -> ComplementarityBudget:
    """Budget of a standalone state: ``C + P <= d - 1``, no entanglement term."""
    return _make_budget(rho.dim, l1_coherence(rho), l1_predictability(rho), None)


def budget_pure(state: PureState, part_label: str) -> ComplementarityBudget:
    """Triality budget ``C + P + E = d - 1`` for one part of a global pure state."""
    raw_e, rho_a = _entanglement_raw(state, part_label)
    if raw_e < -RESIDUAL_TOL:
        raise ComplementarityViolation(f"l1 entanglement came out negative: {raw_e!r}")
    return _make_budget(rho_a.dim, l1_coherence(rho_a), l1_predictability(rho_a), max(0.0, raw_e))


@dataclass(frozen=True)
class MeasureReport:
    budget: ComplementarityBudget
    basis_label: str = "computational"
    gy_visibility: Optional[float] = None
    gy_predictability: Optional[float] = None

    @property
    def gy_relation_value(self) -> Optional[float]:
        if self.gy_visibility is None or self.gy_predictability is None:
            return None
        return check_gy_relation(self.gy_visibility, self.gy_predictability)[0]

    @property
    def gy_satisfied(self) -> Optional[bool]:
        if self.gy_visibility is None or self.gy_predictability is None:
            return None
        return check_gy_relation(self.gy_visibility, self.gy_predictability)[1]

    def to_dict(self) -> dict:
        out = self.budget.to_dict()
        out.update({
            "gy_visibility": self.gy_visibility,
            "gy_predictability": self.gy_predictability,
            "gy_relation_value": self.gy_relation_value,
            "gy_satisfied": self.gy_satisfied,
            "basis": self.basis_label,
            "diagnostics": {"raw_residual": self.budget.raw_residual},
        })
        return out


def report_for(state, part_label: Optional[str] = None,
               gy_visibility: Optional[float] = None) -> MeasureReport:
    """Build a report for a pure or mixed state.

    Pure states on several subsystems get the triality budget of
    ``part_label`` (default: the first subsystem). Everything else gets the
    standalone budget. Two-level reduced states also report the
    Greenberger-Yasin predictability.
    """
    if isinstance(state, PureState):
        if len(state.space.labels) > 1 or part_label is not None:
            part = part_label or state.space.labels[0]
            b = budget_pure(state, part)
            rho_part = reduced_state(state, part)
            basis = part
        else:
            rho_part = density_from_pure(state)
            b = budget(rho_part)
            basis = state.space.labels[0]
    else:
        rho_part = reduced_state(state, part_label) if part_label else state
        b = budget(rho_part)
        basis = part_label or "+".join(state.space.labels)
    gy_p = None
    if rho_part.dim == 2:
        w = np.clip(rho_part.diagonal(), 0.0, 1.0)
        gy_p = gy_predictability(w / w.sum())
    return MeasureReport(b, basis, gy_visibility, gy_p)
