import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cube_assembly
from tia.contact import (
    ContactPair,
    PairingError,
    assemble_jacobian,
    detect_contacts,
    gap,
    pack_q,
    rotation,
    unpack_q,
)

vec3 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3)


def test_two_cubes_one_pair():
    asm = cube_assembly([(0, 0, 0), (0, 0, 1)])
    pairs = detect_contacts(asm, fixed=set())
    assert len(pairs) == 1
    p = pairs[0]
    assert p.master_body == 0 and p.slave_body == 1
    assert np.allclose(p.normal, [0, 0, 1])
    assert p.area == pytest.approx(1.0)


def test_separated_cubes_no_pair():
    tol = 1e-6
    asm = cube_assembly([(0, 0, 0), (0, 0, 1 + 2 * tol)])
    assert detect_contacts(asm, tol=tol, fixed=set()) == []


def test_ambiguous_partner_raises():
    asm = cube_assembly([(0, 0, 0), (0, 0, 1), (0, 0, 1)])
    with pytest.raises(PairingError, match="several partners"):
        detect_contacts(asm, fixed=set())


def test_frame_frame_pairs_dropped():
    asm = cube_assembly([(0, 0, 0), (0, 0, 1), (0, 0, 2)], frames=(0, 1))
    pairs = detect_contacts(asm)
    assert [(p.master_body, p.slave_body) for p in pairs] == [(1, 2)]


def _pair(normal=(1, 0, 0), point=(1, 0, 0), cm=(0, 0, 0), cs=(2, 0, 0)):
    n = np.asarray(normal, float)
    c = np.asarray(point, float)
    return ContactPair(0, 1, 0, 0, n, 1.0, c, c - np.asarray(cm, float), c - np.asarray(cs, float))


def test_gap_reference_is_zero():
    assert gap(_pair(), {}) == 0.0


@pytest.mark.parametrize("d", [0.0, 0.3, -0.2])
def test_gap_slave_translation(d):
    p = _pair()
    assert gap(p, {1: np.r_[d * p.normal, 0, 0, 0]}) == pytest.approx(d, abs=1e-15)


def test_gap_master_quarter_turn():
    p = _pair()
    q = {0: np.array([0, 0, 0, 0, 0, math.pi / 2])}
    assert gap(p, q) == pytest.approx(1.0, abs=1e-12)


def test_rotation_examples():
    assert np.array_equal(rotation(np.zeros(3)), np.eye(3))
    assert np.allclose(rotation([0, 0, math.pi / 2]) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_rotation_orthonormal_random():
    rng = np.random.default_rng(0)
    for theta in rng.normal(scale=2.0, size=(100, 3)):
        R = rotation(theta)
        assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rotation_small_angle_branch_is_continuous():
    t = np.array([1e-8, -2e-8, 5e-9])
    assert np.allclose(rotation(t), rotation(t * (1 + 1e-6)), atol=1e-14)
    assert np.abs(rotation(t).T @ rotation(t) - np.eye(3)).max() <= 1e-12


def test_jacobian_cube_on_fixed_plane_examples():
    asm = cube_assembly([(-0.5, -0.5, -1), (-0.5, -0.5, 0)], frames=(0,))
    pairs = detect_contacts(asm)
    jac = assemble_jacobian(asm, pairs)
    assert jac.dense().shape == (6, 1)
    assert np.allclose(jac.dense()[:, 0], [0, 0, 1, 0, 0, 0])
    # the same contact moved to the edge of the face
    c = np.array([0.5, 0, 0])
    off = ContactPair(0, 1, 0, 0, np.array([0, 0, 1.0]), 1.0, c,
                      c - asm.bodies[0].centroid, c - asm.bodies[1].centroid)
    col = assemble_jacobian(asm, [off]).dense()[:, 0]
    assert np.allclose(col, [0, 0, 1, 0, -0.5, 0])


def test_jacobian_row_count(tsb1):
    assert tsb1.jac.n_dof == 6 * 48 == 288
    assert tsb1.jac.n_contacts == len(tsb1.pairs)


def test_pair_faces_agree(tsb1):
    for p in tsb1.pairs[::37]:
        bm = tsb1.asm.bodies[p.master_body].mesh
        bs = tsb1.asm.bodies[p.slave_body].mesh
        assert bm.face_areas()[p.master_face] == pytest.approx(
            bs.face_areas()[p.slave_face], rel=1e-9)
        assert np.allclose(bm.face_centroids()[p.master_face],
                           bs.face_centroids()[p.slave_face], atol=1e-6 * 120)


def test_pair_counts_match_between_sine_and_cosine(tsb1, tsb2):
    # same face topology, only the wave phase differs
    assert len(tsb1.pairs) == len(tsb2.pairs)
    faces = [(p.master_body, p.master_face) for p in tsb1.pairs]
    faces += [(p.slave_body, p.slave_face) for p in tsb1.pairs]
    assert len(faces) == len(set(faces))


def _fd_column(pair, jac, h=1e-6):
    """Central differences of gap() along every free coordinate."""
    col = np.zeros(jac.n_dof)
    for body in (pair.master_body, pair.slave_body):
        k = jac.free_index.get(body)
        if k is None:
            continue
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            col[6 * k + j] = (gap(pair, {body: e}) - gap(pair, {body: -e})) / (2 * h)
    return col


def test_columns_match_finite_differences(tsb1):
    G = tsb1.jac.matrix
    rng = np.random.default_rng(1)
    for c in rng.choice(len(tsb1.pairs), 40, replace=False):
        pair = tsb1.pairs[c]
        fd = _fd_column(pair, tsb1.jac)
        col = G[:, c].toarray().ravel()
        assert np.linalg.norm(fd - col) <= 1e-6 * np.linalg.norm(col)


@settings(max_examples=40, deadline=None)
@given(n=vec3, pm=vec3, pc=vec3, pd=vec3, dt=vec3, dth=vec3)
def test_common_rigid_motion_leaves_gap_rate_zero(n, pm, pc, pd, dt, dth):
    n = np.asarray(n)
    if np.linalg.norm(n) < 1e-3:
        n = np.array([0.0, 0.0, 1.0])
    n = n / np.linalg.norm(n)
    c = np.asarray(pc)
    cm, cs = np.asarray(pm), np.asarray(pd)
    pair = ContactPair(0, 1, 0, 0, n, 1.0, c, c - cm, c - cs)
    dt, dth = np.asarray(dt), np.asarray(dth)
    # a common motion about the origin: velocity at x is dt + dth x x
    vm = np.r_[dt + np.cross(dth, cm), dth]
    vs = np.r_[dt + np.cross(dth, cs), dth]
    col_m = -np.r_[n, np.cross(pair.lever_m, n)]
    col_s = np.r_[n, np.cross(pair.lever_s, n)]
    assert abs(col_m @ vm + col_s @ vs) <= 1e-12 * max(1.0, np.abs(np.r_[vm, vs]).max() * 10)


def test_columns_invariant_to_origin_shift():
    a = cube_assembly([(0, 0, 0), (0, 0, 1), (1, 0, 1)], frames=(0,))
    b = cube_assembly([(5, -3, 2), (5, -3, 3), (6, -3, 3)], frames=(0,))
    Ga = assemble_jacobian(a, detect_contacts(a)).dense()
    Gb = assemble_jacobian(b, detect_contacts(b)).dense()
    assert np.allclose(Ga, Gb, atol=1e-12)


def test_slave_translation_gives_normal_component(tsb1):
    jac = tsb1.jac
    body = tsb1.free[5]
    d = np.array([0.3, -0.1, 0.7])
    dq = pack_q(jac, {body: np.r_[d, 0, 0, 0]})
    dg = jac.matrix.T @ dq
    for c, p in enumerate(tsb1.pairs):
        if p.slave_body == body:
            assert dg[c] == pytest.approx(p.normal @ d, abs=1e-12)
        elif p.master_body != body:
            assert dg[c] == 0


def test_pack_unpack_roundtrip(tsb1):
    v = np.arange(tsb1.jac.n_dof, dtype=float)
    assert np.array_equal(pack_q(tsb1.jac, unpack_q(tsb1.jac, v)), v)
