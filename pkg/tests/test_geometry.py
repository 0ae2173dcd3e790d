import numpy as np
import pytest

from dropcoil.errors import DegenerateMetric, DomainError, EmbeddingViolation
from dropcoil.geometry import (build_coil, build_cylinder, build_sphere,
                               build_straight, curvature_expansion_check,
                               curvature_profile_coefficient, evaluate_forms,
                               export_mesh, straight_normal)
from dropcoil.jacobi import JacobiSolver
from dropcoil.profile import solve_profile


def grid(n1=16, n2=17, y3span=(-0.9, 0.9)):
    th = np.linspace(0, 2 * np.pi, n1, endpoint=False)
    y3 = np.linspace(*y3span, n2)
    return np.meshgrid(th, y3, indexing="ij")


def test_unit_sphere_h_equals_2():
    TH, Y3 = grid()
    F = evaluate_forms(build_sphere(1.0), TH, Y3)
    assert np.max(np.abs(F.H - 2.0)) < 1e-12
    # metric positive definite
    assert np.all(np.linalg.det(F.g) > 0)
    assert np.all(F.g[..., 0, 0] > 0)


def test_cylinder_h_equals_2():
    TH, Y3 = grid()
    F = evaluate_forms(build_cylinder(0.5), TH, Y3)
    assert np.max(np.abs(F.H - 2.0)) < 1e-12


@pytest.mark.parametrize("a", [0.1, 0.3, 0.45])
def test_straight_delaunay_cmc(a):
    prof = solve_profile(a)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    y3 = np.linspace(-prof.T / 2, prof.T / 2, 64)
    TH, Y3 = np.meshgrid(th, y3, indexing="ij")
    H = evaluate_forms(build_straight(prof), TH, Y3).H
    assert np.max(np.abs(H - 2.0)) < 1e-6


def test_straight_normal_closed_form(prof03):
    TH, Y3 = grid(12, 13, (-1.2, 1.2))
    F = evaluate_forms(build_straight(prof03), TH, Y3)
    assert np.max(np.abs(F.normal - straight_normal(prof03, TH, Y3))) < 1e-12


def test_axisymmetry_of_straight_h(prof03):
    y3 = np.linspace(-1.0, 1.0, 9)
    H1 = evaluate_forms(build_straight(prof03), np.full_like(y3, 0.3), y3).H
    H2 = evaluate_forms(build_straight(prof03), np.full_like(y3, 2.9), y3).H
    assert np.max(np.abs(H1 - H2)) < 1e-12


def test_coil_needs_three_blocks(prof03):
    with pytest.raises(DomainError):
        build_coil(prof03, 2)


def test_coil_block_constraint(prof03):
    patch = build_coil(prof03, 4)
    assert 2 * np.pi * patch.R == pytest.approx(4 * prof03.T)
    # n = 4, T = pi gives R = 2 on the cylinder profile
    cyl = solve_profile(0.5)
    assert build_coil(cyl, 4).R == pytest.approx(2.0)


def test_coil_symmetries(prof03):
    patch = build_coil(prof03, 12)
    th = np.array([0.3, 1.2, 2.2, 4.0])
    y3 = np.array([0.2, -0.4, 1.1, 0.0])
    P0 = patch.position(th, y3)
    ang = 2 * np.pi / 12
    rot = np.array([[1, 0, 0],
                    [0, np.cos(ang), -np.sin(ang)],
                    [0, np.sin(ang), np.cos(ang)]])
    assert np.max(np.abs(patch.position(th, y3 + prof03.T) - P0 @ rot.T)) < 1e-12
    assert np.max(np.abs(patch.position(np.pi - th, y3) - P0 @ np.diag([-1.0, 1, 1]))) < 1e-12
    assert np.max(np.abs(patch.position(th, -y3) - P0 @ np.diag([1.0, 1, -1]))) < 1e-12


def test_coil_derivatives_match_finite_differences(prof03):
    patch = build_coil(prof03, 8)
    th0, y30 = 0.7, 0.4
    d = patch.derivatives(np.array(th0), np.array(y30))
    errs = []
    for step in (2e-3, 1e-3):
        Pp = patch.position(np.array(th0 + step), np.array(y30 + step))
        Pm = patch.position(np.array(th0 - step), np.array(y30 - step))
        Ppm = patch.position(np.array(th0 + step), np.array(y30 - step))
        Pmp = patch.position(np.array(th0 - step), np.array(y30 + step))
        fd = (Pp - Ppm - Pmp + Pm) / (4 * step * step)
        errs.append(np.max(np.abs(fd - d["P_th3"])))
    assert errs[1] < errs[0] / 2.5  # second-order decay of the FD error
    assert errs[1] < 1e-4


def test_torus_limit_matches_classical_curvature():
    cyl = solve_profile(0.5)
    torus = build_coil(cyl, 10)
    th = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    H = evaluate_forms(torus, th, np.full_like(th, 0.33)).H
    exact = 2.0 + np.sin(th) / (torus.R + 0.5 * np.sin(th))
    assert np.max(np.abs(H - exact)) < 1e-8
    # y2/R-expansion coefficient: Phi/f = 2 for the cylinder profile
    x = 0.5 * np.sin(th) / torus.R
    slope = float(np.dot(x, H - 2.0) / np.dot(x, x))
    assert slope == pytest.approx(2.0, rel=0.05)


def test_curvature_expansion_decay(prof03):
    rep = curvature_expansion_check(prof03, [8, 16, 32, 64])
    assert rep.decay_exponent <= -1.8
    assert rep.max_err == sorted(rep.max_err, reverse=True)
    # coefficient recovery at moderate block count
    assert rep.phi_fit_rel_err[rep.n_list.index(32)] < 0.05


def test_curvature_expansion_needs_n8(prof03):
    with pytest.raises(DomainError):
        curvature_expansion_check(prof03, [4, 8])


def test_phi_coefficient_value(prof03):
    # at y3 = 0: f = 1-a, f' = 0, f'' = 1/(1-a) - 2, so Phi(0) = 4a - 1
    phi0 = curvature_profile_coefficient(prof03, np.array(0.0))
    assert phi0 == pytest.approx(4 * 0.3 - 1.0, rel=1e-9)


def test_perturbed_coil_keeps_symmetries(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=3)
    h.modes[0] = 0.01 * np.cos(np.pi * solver03.t / solver03.tau)
    h.modes[1] = 0.005 * solver03.kernel.nu2
    h.modes[2] = 0.004
    patch = build_coil(prof03, 12, h, chart=chart03)
    th = np.array([0.5, 1.7, 3.3])
    y3 = np.array([0.3, -0.8, 1.0])
    H0 = evaluate_forms(patch, th, y3).H
    assert np.max(np.abs(evaluate_forms(patch, np.pi - th, y3).H - H0)) < 1e-10
    assert np.max(np.abs(evaluate_forms(patch, th, -y3).H - H0)) < 1e-10
    assert np.max(np.abs(evaluate_forms(patch, th, y3 + prof03.T).H - H0)) < 1e-10


def test_perturbed_straight_linearizes_to_jacobi(prof03, chart03, solver03):
    # H(h) - H(0) ~ -J[h]: the direct surface evaluation against the
    # spectral operator, symmetric difference kills the quadratic term
    h = solver03.zero_field(kmax=2)
    h.modes[1] = 0.004 * solver03.kernel.nu2
    h.modes[2] = 0.003 * np.cos(np.pi * solver03.t / solver03.tau)
    t_idx = np.arange(4, solver03.m - 4, 7)
    th = np.linspace(0.2, np.pi / 2, 5)
    TH, TT = np.meshgrid(th, solver03.t[t_idx], indexing="ij")
    Y3 = np.meshgrid(th, solver03.z[t_idx], indexing="ij")[1]
    Hp = evaluate_forms(build_straight(prof03, h, chart03), TH, Y3).H
    Hm = evaluate_forms(build_straight(prof03, -1.0 * h, chart03), TH, Y3).H
    lin = (Hp - Hm) / 2.0
    Jh = solver03.apply(h)
    target = -Jh.evaluate(TH, TT)
    assert np.max(np.abs(lin - target)) < 5e-4 * max(1.0, np.max(np.abs(target)))


def test_embedding_violation_checks(prof03, chart03, solver03):
    big = solver03.zero_field(kmax=0)
    big.modes[0] = 0.5  # exceeds 1/kappa_max at the neck
    patch = build_coil(prof03, 12, big, chart=chart03)
    with pytest.raises(EmbeddingViolation):
        evaluate_forms(patch, np.array([0.1]), np.array([prof03.T / 2]))
    with pytest.raises(EmbeddingViolation):
        huge = solver03.zero_field(kmax=0)
        huge.modes[0] = 10.0
        build_coil(prof03, 3, huge, chart=chart03)


# ---- meshes ---------------------------------------------------------------

def load_obj(path):
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                verts.append([float(x) for x in line.split()[1:4]])
            elif line.startswith("f "):
                faces.append([int(tok.split("/")[0]) - 1 for tok in line.split()[1:4]])
    return np.asarray(verts), np.asarray(faces, dtype=int)


def euler_characteristic(faces):
    edges = set()
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    nv = len({v for f in faces for v in f})
    return nv - len(edges) + len(faces), edges


def boundary_edge_count(faces):
    seen = {}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            seen[key] = seen.get(key, 0) + 1
    return sum(1 for v in seen.values() if v == 1)


def signed_volume(verts, faces):
    v = verts[faces]
    return float(np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])))) / 6.0


def test_sphere_mesh(tmp_path):
    path = tmp_path / "sphere.obj"
    export_mesh(build_sphere(1.0), (16, 16), path)
    verts, faces = load_obj(path)
    assert len(faces) == 512
    chi, _ = euler_characteristic(faces)
    assert chi == 2
    assert boundary_edge_count(faces) == 0
    vol = signed_volume(verts, faces)
    assert vol > 0  # outward, counter-clockwise
    assert vol == pytest.approx(4 * np.pi / 3, rel=0.05)


def test_coil_mesh_closed_torus(prof03, tmp_path):
    path = tmp_path / "coil.obj"
    export_mesh(build_coil(prof03, 12), (32, 32 * 12), path)
    verts, faces = load_obj(path)
    chi, _ = euler_characteristic(faces)
    assert chi == 0
    assert boundary_edge_count(faces) == 0
    assert signed_volume(verts, faces) > 0


def test_straight_mesh_open_tube(prof03, tmp_path):
    path = tmp_path / "tube.obj"
    export_mesh(build_straight(prof03), (24, 16), path)
    _, faces = load_obj(path)
    assert boundary_edge_count(faces) == 2 * 24


def test_mesh_resolution_validation(prof03, tmp_path):
    with pytest.raises(DomainError):
        export_mesh(build_straight(prof03), (4, 16), tmp_path / "x.obj")


def test_mesh_deterministic(prof03, tmp_path):
    p1, p2 = tmp_path / "m1.obj", tmp_path / "m2.obj"
    export_mesh(build_coil(prof03, 6), (16, 48), p1)
    export_mesh(build_coil(prof03, 6), (16, 48), p2)
    assert p1.read_bytes() == p2.read_bytes()
