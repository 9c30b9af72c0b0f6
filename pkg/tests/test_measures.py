import math

import numpy as np
import pytest

from quanton import measures as m
from quanton.qstate import DensityMatrix, ModeSpace, PureState, density_from_pure
from helpers import ket, l1_parts, reduced_first, random_density, random_pure, random_unitary, random_vector, rng, space

S = 1 / math.sqrt(2)
PQE = ModeSpace.of(("path", 2), ("pol", 2))
PSI1 = ket(PQE, [S, 0, 1j * S, 0])   # after BS1, polarization H
PSI2 = ket(PQE, [S, 0, 0, 1j * S])   # after the HWP in arm 1


def dm(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    return DensityMatrix(space(matrix.shape[0]), matrix)


def bmzi_rho2(t1):
    r1 = math.sqrt(1 - t1 * t1)
    return density_from_pure(ket(ModeSpace.of(("path", 2)), [-r1, 1j * t1]))


# -- examples -------------------------------------------------------------------

def test_coherence_examples():
    assert m.l1_coherence(dm(np.diag([0.3, 0.7]))) == 0
    for t1 in (0.1, 0.5, 0.8):
        assert abs(m.l1_coherence(bmzi_rho2(t1)) - 2 * t1 * math.sqrt(1 - t1 * t1)) < 1e-15
    for d in (2, 3, 5):
        uniform = density_from_pure(ket(space(d), np.full(d, 1 / math.sqrt(d))))
        assert abs(m.l1_coherence(uniform) - (d - 1)) < 1e-14


def test_predictability_examples():
    assert m.l1_predictability(dm([[1, 0], [0, 0]])) == 1
    assert abs(m.l1_predictability(bmzi_rho2(0.8)) - (1 - 2 * 0.8 * 0.6)) < 1e-15
    for d in (2, 3, 4):
        assert abs(m.l1_predictability(dm(np.eye(d) / d))) < 1e-15


def test_entanglement_examples():
    assert m.l1_entanglement(PSI1, "path") == 0
    b1 = m.budget_pure(PSI1, "path")
    assert (b1.coherence, b1.predictability, b1.entanglement) == pytest.approx((1, 0, 0), abs=1e-15)
    assert abs(m.l1_entanglement(PSI2, "path") - 1) < 1e-15
    b2 = m.budget_pure(PSI2, "path")
    assert (b2.coherence, b2.predictability, b2.entanglement) == pytest.approx((0, 0, 1), abs=1e-15)
    assert b2.residual == 0
    with pytest.raises(ValueError):
        m.l1_entanglement(PSI2, "beam")


def test_robustness_examples():
    two = space(2, 2)
    assert abs(m.robustness_pure(ket(two, [S, 0, 0, S]), "a") - 1) < 1e-15
    assert m.robustness_pure(ket(two, [1, 0, 0, 0]), "a") == 0
    assert abs(m.robustness_pure(ket(two, [0.8, 0, 0, 0.6]), "a") - 0.96) < 1e-15


def test_analytic_visibility_examples():
    assert m.gy_visibility_analytic_bmzi(0.8, 0.8, 0) == pytest.approx(1, abs=1e-15)
    assert m.gy_visibility_analytic_bmzi(0.8, 0.8, 1) == pytest.approx(0.4608 / 0.5392, abs=1e-15)
    for t2 in (0.1, 0.3, 0.9):
        r2 = math.sqrt(1 - t2 * t2)
        assert abs(m.gy_visibility_analytic_bmzi(S, t2, 0) - 2 * t2 * r2) < 1e-15
    assert m.gy_visibility_analytic_bmzi(0.6, 1.0, 0) == 0
    assert m.gy_visibility_analytic_bmzi(0.6, 1.0, 1) == 0
    # T1 = 0 with R2 = 0 empties the detector-1 denominator, T1 = T2 = 0 the detector-0 one
    with pytest.raises(m.VisibilityUndefined):
        m.gy_visibility_analytic_bmzi(0.0, 1.0, 1)
    with pytest.raises(m.VisibilityUndefined):
        m.gy_visibility_analytic_bmzi(0.0, 0.0, 0)
    with pytest.raises(ValueError):
        m.gy_visibility_analytic_bmzi(0.5, 0.5, 2)


def test_sweep_visibility_examples():
    assert m.gy_visibility_sweep(lambda p: (1 + math.cos(p)) / 2) == pytest.approx(1, abs=1e-15)
    assert m.gy_visibility_sweep(lambda p: 0.25) == 0
    with pytest.raises(m.VisibilityUndefined):
        m.gy_visibility_sweep(lambda p: 0.0)
    with pytest.raises(ValueError):
        m.gy_visibility_sweep(lambda p: 0.5, grid=4)
    with pytest.raises(ValueError):
        m.gy_visibility_sweep(lambda p: 1.5)


def test_sweep_matches_analytic_at_biased_point():
    t1 = t2 = 0.8
    r1 = r2 = 0.6

    def p0(phi):
        return abs(np.exp(1j * phi) * t1 * r2 + r1 * t2) ** 2

    assert abs(m.gy_visibility_sweep(p0) - m.gy_visibility_analytic_bmzi(t1, t2, 0)) < 1e-12


def test_gy_predictability_and_relation():
    assert m.gy_predictability([0.5, 0.5]) == 0
    assert m.gy_predictability([1, 0]) == 1
    assert abs(m.gy_predictability([0.64, 0.36]) - 0.28) < 1e-15
    with pytest.raises(ValueError):
        m.gy_predictability([0.5, 0.6])
    with pytest.raises(ValueError):
        m.gy_predictability([1.0])
    assert m.check_gy_relation(1, 0) == (1, True)
    value, ok = m.check_gy_relation(1, 0.28)
    assert abs(value - 1.0784) < 1e-15 and not ok
    assert m.check_gy_relation(0.6, 0.8)[1]


def test_budget_examples():
    b = m.budget(dm(np.eye(2) / 2))
    assert (b.d, b.coherence, b.predictability, b.entanglement) == (2, 0, 0, None)
    assert abs(b.residual - 1) < 1e-15 and b.bound == 1
    g = rng(30)
    for d in (2, 3, 4):
        b = m.budget(density_from_pure(ket(space(d), random_vector(g, d))))
        assert abs(b.coherence + b.predictability - (d - 1)) < 1e-10


def test_budget_residual_clamping_and_violation():
    b = m.ComplementarityBudget(2, 0.6, 0.4 + 5e-11, None, raw_residual=-5e-11)
    assert b.residual == 0 and b.raw_residual == -5e-11
    with pytest.raises(m.ComplementarityViolation):
        m.ComplementarityBudget(2, 0.7, 0.4, None, raw_residual=-0.1)


def test_report_for():
    r = m.report_for(PSI2, "path")
    d = r.to_dict()
    assert d["entanglement"] == pytest.approx(1, abs=1e-15)
    assert d["gy_predictability"] == pytest.approx(0, abs=1e-15)
    assert d["gy_visibility"] is None and d["gy_satisfied"] is None
    assert "raw_residual" in d["diagnostics"]
    r = m.report_for(ket(ModeSpace.of(("path", 2)), [0.8, 0.6]), gy_visibility=1.0)
    assert r.budget.entanglement is None
    assert r.gy_relation_value == pytest.approx(1.0784, abs=1e-14) and r.gy_satisfied is False
    mixed = m.report_for(dm(np.eye(2) / 2))
    assert mixed.budget.coherence == 0 and mixed.budget.predictability == 0


# -- properties ----------------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_positivity_bound_and_inequality_on_mixed_states(d):
    g = rng(100 + d)
    for _ in range(1000):
        rho = random_density(g, d)
        diag = np.real(np.diag(rho))
        bound = np.sqrt(np.outer(diag, diag))
        assert np.all(np.abs(rho) ** 2 <= np.outer(diag, diag) + 1e-12)
        off = ~np.eye(d, dtype=bool)
        c = m.l1_coherence(dm(rho))
        assert c <= bound[off].sum() + 1e-12 <= d - 1 + 2e-12
        b = m.budget(dm(rho))
        # full-rank Ginibre samples are strictly inside the bound
        assert b.raw_residual > 1e-6


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_pure_states_saturate(d):
    g = rng(200 + d)
    for _ in range(1000):
        b = m.budget(density_from_pure(ket(space(d), random_vector(g, d))))
        assert abs(b.raw_residual) < 1e-10


@pytest.mark.parametrize("da", [2, 3])
def test_triality_residual_and_nonnegative_entanglement(da):
    g = rng(300 + da)
    for _ in range(1000):
        db = int(g.integers(2, 5))
        s = random_pure(g, da, db)
        b = m.budget_pure(s, "a")
        assert abs(b.raw_residual) <= 1e-10
        c, p = l1_parts(reduced_first(s.amplitudes, da))
        assert abs(c - b.coherence) <= 1e-12 and abs(p - b.predictability) <= 1e-12
        assert abs(c + p + b.entanglement - (da - 1)) <= 1e-10
        assert m.l1_entanglement(s, "a") >= 0


def test_product_states_have_zero_entanglement():
    g = rng(31)
    for _ in range(500):
        da, db = int(g.integers(2, 4)), int(g.integers(2, 4))
        amps = np.kron(random_vector(g, da), random_vector(g, db))
        s = PureState(space(da, db), amps)
        assert abs(m.l1_entanglement(s, "a")) < 1e-10
        assert abs(m.l1_entanglement(s, "b")) < 1e-10


def test_entanglement_invariant_under_unitary_on_traced_part():
    g = rng(32)
    for _ in range(300):
        da, db = int(g.integers(2, 4)), int(g.integers(2, 4))
        s = random_pure(g, da, db)
        u = np.kron(np.eye(da), random_unitary(g, db))
        moved = PureState(s.space, u @ s.amplitudes)
        assert abs(m.l1_entanglement(s, "a") - m.l1_entanglement(moved, "a")) < 1e-10


def test_sweep_on_cosine_fringes():
    g = rng(33)
    for _ in range(200):
        a = g.uniform(0.05, 0.5)
        b = g.uniform(-a, a)
        if abs(b) < 1e-6:
            continue
        v = m.gy_visibility_sweep(lambda phi: a + b * math.cos(phi))
        assert abs(v - abs(b) / a) < 1e-12


def test_robustness_equals_entanglement_when_schmidt_aligned():
    g = rng(34)
    for _ in range(100):
        da = int(g.integers(2, 4))
        db = da + int(g.integers(0, 2))
        c = np.abs(random_vector(g, da)) * np.exp(1j * g.uniform(0, 2 * np.pi, da))
        f = random_unitary(g, db)[:, :da]   # orthonormal partner vectors
        amps = sum(c[i] * np.kron(np.eye(da)[i], f[:, i]) for i in range(da))
        s = PureState(space(da, db), amps)
        assert abs(m.robustness_pure(s, "a") - m.l1_entanglement(s, "a")) < 1e-10


def test_schmidt_coefficients_sum_to_one():
    g = rng(35)
    for _ in range(100):
        s = random_pure(g, 2, 3, 2)
        for label in ("a", "b", "c"):
            assert abs(sum(m.schmidt_coefficients(s, label)) - 1) < 1e-12
