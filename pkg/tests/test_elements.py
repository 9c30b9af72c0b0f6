import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quanton import elements as el
from quanton.qstate import ModeSpace, PureState, global_phase_equal, phase_aligned_distance
from helpers import ket, random_pure, random_vector, rng

S = 1 / math.sqrt(2)
PATH = ModeSpace.of(("path", 2))
PQE = ModeSpace.of(("path", 2), ("pol", 2))
ZERO = PureState.basis(PATH, path=0)

unit = st.floats(0, 1, allow_nan=False)
angle = st.floats(-10, 10, allow_nan=False)


def unitary_elements():
    return [el.bbs("path", 0.3), el.bs("path"), el.mirror("path"), el.phase_shifter("path", 1.1),
            el.hwp("path"), el.qwp("path")]


@pytest.mark.parametrize("e", unitary_elements(), ids=lambda e: e.kind)
def test_element_matrices_are_unitary(e):
    u = el.element_matrix(e)
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12


@given(unit, angle)
def test_bbs_and_phase_shifter_unitary_for_any_parameter(t, phi):
    for e in (el.bbs("path", t), el.phase_shifter("path", phi)):
        u = el.element_matrix(e)
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12


def test_element_matrix_examples():
    assert np.array_equal(el.element_matrix(el.bbs("path", 1.0)), np.eye(2))
    out, _ = el.apply(el.bbs("path", S), ZERO)
    assert phase_aligned_distance(out, ket(PATH, [S, 1j * S])) < 1e-15
    pol0 = PureState.basis(ModeSpace.of(("pol", 2)), pol=0)
    out, _ = el.apply(el.qwp("pol"), pol0)
    assert np.allclose(out.amplitudes, [S, 1j * S], atol=1e-16)
    out, _ = el.apply(el.qwp("pol"), PureState.basis(ModeSpace.of(("pol", 2)), pol=1))
    assert np.allclose(out.amplitudes, [S, -1j * S], atol=1e-16)


def test_element_matrix_rejects_non_unitary_kinds():
    with pytest.raises(el.ElementError):
        el.element_matrix(el.blocker("path", 0))
    with pytest.raises(el.ElementError):
        el.element_matrix(el.pbs("path", "pol"))


def test_element_validation():
    with pytest.raises(el.ElementError, match="T out of range"):
        el.bbs("path", 1.5)
    with pytest.raises(el.ElementError):
        el.Element(el.BBS, ("path",), t=0.5, r=0.5)
    with pytest.raises(el.ElementError):
        el.blocker("path", 2)
    with pytest.raises(el.ElementError):
        el.hwp("pol", arm=("pol", 0))
    h = el.INV_SQRT2
    assert el.reflectance(h) == h
    assert el.bs("path").t == h and el.bs("path").r == h


def test_mirror_then_phase_shifter_reproduces_interior_state():
    t1, r1, phi = 0.8, 0.6, 0.7
    s, _ = el.apply(el.bbs("path", t1), ZERO)
    s, _ = el.apply(el.mirror("path"), s)
    s, _ = el.apply(el.phase_shifter("path", phi), s)
    # i e^{i phi} T1 |1> - R1 |0>
    expected = ket(PATH, [-r1, 1j * np.exp(1j * phi) * t1])
    assert global_phase_equal(s, expected)
    assert phase_aligned_distance(s, expected) < 1e-15


def test_blocker():
    psi1 = ket(PATH, [S, 1j * S])
    out, survival = el.apply(el.blocker("path", 1), psi1)
    assert phase_aligned_distance(out, ZERO) < 1e-15
    assert abs(survival - 0.5) < 1e-15
    with pytest.raises(el.BlockedError) as info:
        el.apply(el.blocker("path", 0), ZERO)
    assert info.value.survival == 0.0


def test_arm_condition_only_touches_one_branch():
    psi1 = ket(PQE, [S, 0, 1j * S, 0])
    out, _ = el.apply(el.hwp("pol", arm=("path", 1)), psi1)
    assert np.allclose(out.amplitudes, [S, 0, 0, 1j * S], atol=1e-16)
    out, _ = el.apply(el.qwp("pol", arm=("path", 0)), out)
    assert np.allclose(out.amplitudes, [0.5, 0.5j, 0, 1j * S], atol=1e-16)


def test_embedding_matches_kron_with_identity():
    g = rng(20)
    s = random_pure(g, 2, 2, 2)
    u = el.element_matrix(el.bbs("b", 0.3))
    out, _ = el.apply(el.bbs("b", 0.3), s)
    full = np.kron(np.kron(np.eye(2), u), np.eye(2))
    assert np.allclose(out.amplitudes, full @ s.amplitudes, atol=1e-14)


def test_apply_pbs_routing_rules():
    out = el.apply_pbs(PureState.basis(PQE, path=0, pol=0))
    assert out.space == el.detector_space("pol")
    assert out.amplitudes[out.space.basis_index({"detector": 0, "pol": 0})] == 1
    out = el.apply_pbs(PureState.basis(PQE, path=1, pol=1))
    assert out.amplitudes[out.space.basis_index({"detector": 3, "pol": 1})] == 1j
    out = el.apply_pbs(PureState.basis(PQE, path=0, pol=1))
    assert out.amplitudes[out.space.basis_index({"detector": 2, "pol": 1})] == 1j
    out = el.apply_pbs(PureState.basis(PQE, path=1, pol=0))
    assert out.amplitudes[out.space.basis_index({"detector": 1, "pol": 0})] == 1
    with pytest.raises(el.ElementError):
        el.apply_pbs(ZERO)


def test_apply_pbs_preserves_norm():
    g = rng(21)
    for _ in range(200):
        s = PureState(PQE, random_vector(g, 4))
        assert abs(np.linalg.norm(el.apply_pbs(s).amplitudes) - 1) < 1e-12


def test_pbs_after_pqe_psi3_is_uniform():
    for phi in np.linspace(0, 2 * np.pi, 9):
        e = np.exp(1j * phi)
        psi3 = ket(PQE, -0.5 * np.array([e, 1, -1j * e, 1j]))
        out = el.apply_pbs(psi3)
        assert np.allclose(out.marginal("detector"), 0.25, atol=1e-15)


def bmzi(t1, t2, phi):
    return el.Pipeline(PATH, (el.bbs("path", t1), el.mirror("path"),
                              el.phase_shifter("path", phi), el.bbs("path", t2)))


def test_run_pipeline_examples():
    records = el.run_pipeline(bmzi(S, S, 0.0), ZERO)
    assert [r.label for r in records][0] == "initial"
    assert global_phase_equal(records[-1].state, ket(PATH, [-1, 0]))
    empty = el.run_pipeline(el.Pipeline(PATH), ZERO)
    assert len(empty) == 1 and empty[0].state is ZERO and empty[0].survival == 1.0
    unruh = el.Pipeline(PATH, (el.bs("path"), el.mirror("path"), el.bs("path")))
    assert phase_aligned_distance(el.run_pipeline(unruh, ZERO)[-1].state, ket(PATH, [-1, 0])) < 1e-15


def test_bmzi_pipeline_matches_closed_form():
    g = rng(22)
    for _ in range(1000):
        t1, t2, phi = g.uniform(0, 1), g.uniform(0, 1), g.uniform(0, 2 * np.pi)
        r1, r2, e = math.sqrt(1 - t1 ** 2), math.sqrt(1 - t2 ** 2), np.exp(1j * phi)
        final = el.run_pipeline(bmzi(t1, t2, phi), ZERO)[-1].state
        expected = ket(PATH, [-(e * t1 * r2 + r1 * t2), 1j * (e * t1 * t2 - r1 * r2)])
        assert phase_aligned_distance(final, expected) < 1e-12
        p = final.probabilities()
        assert abs(p.sum() - 1) < 1e-12


def test_pipeline_norm_and_survival():
    g = rng(23)
    stages = (el.bbs("path", 0.4), el.blocker("path", 0), el.mirror("path"), el.bs("path"),
              el.blocker("path", 1), el.bbs("path", 0.9))
    for _ in range(50):
        s = PureState(PATH, random_vector(g, 2))
        records = el.run_pipeline(el.Pipeline(PATH, stages), s)
        survivals = [r.survival for r in records]
        assert all(b <= a + 1e-15 for a, b in zip(survivals, survivals[1:]))
        for r in records:
            assert abs(np.linalg.norm(r.state.amplitudes) - 1) < 1e-12


def test_pipeline_validation():
    with pytest.raises(el.ElementError):
        el.Pipeline(PQE, (el.pbs("path", "pol"), el.bs("path")))
    with pytest.raises(el.ElementError):
        el.Pipeline(ModeSpace.of(("path", 3)), (el.bs("path"),))
    with pytest.raises(el.ElementError):
        el.Pipeline(PATH, (el.bs("beam"),))
    p = el.Pipeline(PQE, (el.bs("path"), el.pbs("path", "pol")))
    assert p.output_space == el.detector_space("pol")
    with pytest.raises(el.ElementError):
        el.run_pipeline(p, ZERO)
