import numpy as np
import pytest

from dropcoil.coulomb import (BALL_UNIT_COULOMB, AxisymBoundary,
                              BlockQuadrature, CRITICAL_MASS_CLOSED_FORM,
                              NormalGraphBoundary, SelfBlockSettings,
                              ball_coulomb_energy, ball_energy,
                              ball_potential_exact, ball_potential_radial,
                              coil_volume, coulomb_energy, critical_mass,
                              potential_coil, potential_perturbed,
                              toroidal_potential_reference)
from dropcoil.errors import DomainError, QuadratureDivergence
from dropcoil.profile import solve_profile


@pytest.fixture(scope="module")
def quad03(prof03):
    return BlockQuadrature(prof03)


def test_block_quadrature_volume(prof03, quad03):
    _, _, _, w = quad03.nodes3d(0.0, AxisymBoundary(prof03))
    assert np.sum(w) == pytest.approx(prof03.V, rel=1e-10)
    with pytest.raises(DomainError):
        BlockQuadrature(prof03, (1, 2, 2))


def test_breakdown_positive_and_symmetric(prof03):
    res = potential_coil(prof03, 8, (np.pi / 2, 0.0), error_estimate=False)
    assert np.all(res.breakdown > 0)
    # I_k = I_{n-k} at y3 = 0, exactly by the paired nodes
    inner = res.breakdown[1:]
    assert np.max(np.abs(inner - inner[::-1])) < 1e-13
    # monotone decay in min(k, n-k)
    half = inner[: len(inner) // 2 + 1]
    assert np.all(np.diff(half) < 0)


def test_potential_symmetries(prof03):
    v0 = potential_coil(prof03, 8, (0.7, 0.4), error_estimate=False).value
    v1 = potential_coil(prof03, 8, (np.pi - 0.7, 0.4), error_estimate=False).value
    v2 = potential_coil(prof03, 8, (0.7, -0.4), error_estimate=False).value
    assert v1 == pytest.approx(v0, abs=1e-12)
    assert v2 == pytest.approx(v0, abs=1e-12)


def test_small_n_brute_force_oracle(prof03):
    # full-domain R^3 quadrature with no block decomposition
    res = potential_coil(prof03, 4, (np.pi / 2, 0.0))
    ref = toroidal_potential_reference(prof03, 4, (np.pi / 2, 0.0))
    assert abs(res.value - ref) / ref < 1e-2
    # off-symmetry point too
    res2 = potential_coil(prof03, 6, (0.7, 0.4))
    ref2 = toroidal_potential_reference(prof03, 6, (0.7, 0.4), q=6)
    assert abs(res2.value - ref2) / ref2 < 1e-2


def test_n_validation(prof03):
    with pytest.raises(DomainError):
        potential_coil(prof03, 3, (0.0, 0.0))


def test_refinement_within_error_estimate(prof03):
    res = potential_coil(prof03, 8, (1.1, 0.2))  # refined value + estimate
    n_r, n_phi, n_z = BlockQuadrature(prof03).resolution
    dbl = BlockQuadrature(prof03, (n_r, 2 * n_phi, 2 * n_z))
    res_dbl = potential_coil(prof03, 8, (1.1, 0.2), quad=dbl,
                             self_cfg=SelfBlockSettings(panel_q=9, core_q=9, column_q=10),
                             error_estimate=False)
    assert abs(res_dbl.value - res.value) <= max(res.err_est, 1e-9) * 3


def test_quadrature_divergence_guard(prof03):
    with pytest.raises(QuadratureDivergence):
        potential_coil(prof03, 8, (np.pi / 2, 0.0), divergence_rtol=1e-14)


def test_log_slope_matches_volume_over_period(prof03):
    ns = [16, 32, 64, 128]
    vals = [potential_coil(prof03, n, (np.pi / 2, 0.0), error_estimate=False).value
            for n in ns]
    slope = np.polyfit(np.log(ns), vals, 1)[0]
    target = 2.0 * prof03.V / prof03.T
    assert abs(slope / target - 1.0) < 0.05


def test_y2_coefficient_log_law(prof03):
    f0 = prof03.evaluate(0.0, order=0)[0]
    coefs = {}
    for n in (64, 128):
        vp = potential_coil(prof03, n, (np.pi / 2, 0.0), error_estimate=False).value
        vm = potential_coil(prof03, n, (3 * np.pi / 2, 0.0), error_estimate=False).value
        coefs[n] = (vp - vm) / (2 * f0)
        pred = -2 * np.pi * prof03.V / prof03.T**2 * np.log(n) / n
        assert coefs[n] < 0  # negative coefficient
        assert coefs[n] / pred == pytest.approx(1.0, abs=0.3)
    assert abs(coefs[128]) < abs(coefs[64])


def test_perturbed_reduces_to_coil_at_zero(prof03, chart03, solver03):
    h0 = solver03.zero_field()
    y = (0.9, 0.35)
    a = potential_perturbed(prof03, 8, h0, y, chart=chart03, error_estimate=False)
    b = potential_coil(prof03, 8, y, error_estimate=False)
    assert a.value == b.value  # identical code path


def test_perturbed_linearity_orders(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=4)
    h.modes[0] = 0.02 * np.cos(np.pi * solver03.t / solver03.tau)
    h.modes[2] = 0.01 * np.cos(2 * np.pi * solver03.t / solver03.tau) + 0.005
    y = (0.9, 0.35)

    def parts(field):
        p = potential_perturbed(prof03, 8, field, y, chart=chart03,
                                error_estimate=False, with_base=False).value
        m = potential_perturbed(prof03, 8, -1.0 * field, y, chart=chart03,
                                error_estimate=False, with_base=False).value
        return (p - m) / 2, (p + m) / 2

    base = potential_coil(prof03, 8, y, error_estimate=False).value
    lin1, ev1 = parts(h)
    lin2, ev2 = parts(0.25 * h)
    assert lin1 / lin2 == pytest.approx(4.0, rel=0.02)       # odd part linear
    assert (ev1 - base) / (ev2 - base) == pytest.approx(16.0, rel=0.05)


def test_perturbed_response_grows_like_log_n(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=2)
    h.modes[0] = 0.01
    int_h = solver03.integral(h)
    y = (np.pi / 2, 0.0)
    resp = {}
    for n in (16, 64, 256):
        p = potential_perturbed(prof03, n, h, y, chart=chart03,
                                error_estimate=False, with_base=False).value
        m = potential_perturbed(prof03, n, -1.0 * h, y, chart=chart03,
                                error_estimate=False, with_base=False).value
        resp[n] = (p - m) / 2
    pred = (2.0 / prof03.T) * int_h
    s1 = (resp[64] - resp[16]) / np.log(4)
    s2 = (resp[256] - resp[64]) / np.log(4)
    assert s1 / pred == pytest.approx(1.0, abs=0.15)
    assert abs(s2 / pred - 1.0) < abs(s1 / pred - 1.0)  # approaching the law


def test_shell_correction_reported(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=1)
    h.modes[0] = 0.01
    res = potential_perturbed(prof03, 8, h, (0.3, 0.1), chart=chart03,
                              error_estimate=False, with_base=True)
    assert res.base is not None
    assert res.shell_correction == pytest.approx(res.value - res.base)
    assert res.shell_correction > 0  # h > 0 adds matter


def test_normal_graph_boundary_accuracy(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=3)
    h.modes[0] = 0.01
    h.modes[1] = 0.004 * solver03.kernel.nu2
    h.modes[3] = 0.002
    bnd = NormalGraphBoundary(prof03, chart03, h)
    rng = np.random.default_rng(5)
    phi = rng.uniform(0, 2 * np.pi, 200)
    x3 = rng.uniform(-2 * prof03.T, 2 * prof03.T, 200)
    direct = bnd._radius_newton(phi, x3)
    assert np.max(np.abs(bnd.radius(phi, x3) - direct)) < 1e-9
    # T-periodic and reflection symmetric
    assert np.max(np.abs(bnd.radius(phi, x3 + prof03.T) - direct)) < 1e-9
    assert np.max(np.abs(bnd.radius(np.pi - phi, -x3) - direct)) < 1e-9


def test_coil_volume_unperturbed(prof03):
    v = coil_volume(prof03, 8)
    assert v == pytest.approx(8 * prof03.V, rel=1e-8)


def test_coil_volume_perturbed_grows(prof03, chart03, solver03):
    h = solver03.zero_field(kmax=0)
    h.modes[0] = 0.01
    v = coil_volume(prof03, 8, h, chart03)
    assert v > 8 * prof03.V  # positive bump adds volume


# ---- balls and energies ----------------------------------------------------

def test_newton_potential_center():
    assert ball_potential_radial(0.0) == pytest.approx(2 * np.pi, abs=1e-10)


def test_newton_potential_profile():
    s = np.linspace(0.0, 2.0, 21)
    num = ball_potential_radial(s)
    assert np.max(np.abs(num - ball_potential_exact(s))) < 1e-8


def test_unit_ball_coulomb_energy_from_potential():
    # D = 1/2 int u with u the exact interior potential
    from scipy.integrate import simpson
    s = np.linspace(0.0, 1.0, 4001)
    D = 0.5 * simpson(ball_potential_exact(s) * 4 * np.pi * s * s, x=s)
    assert D == pytest.approx(16 * np.pi**2 / 15, abs=1e-8)
    assert ball_coulomb_energy(1.0) == pytest.approx(BALL_UNIT_COULOMB)


def test_energy_scaling_degree_five():
    assert coulomb_energy(("ball", 2.0)) == pytest.approx(32 * coulomb_energy(("ball", 1.0)))


def test_ball_energy_scaling_identity():
    # E(m) = m^{2/3} (Per(E1) + m D(E1)) with |E1| = 1
    r1 = (3.0 / (4 * np.pi)) ** (1.0 / 3.0)
    per1 = 4 * np.pi * r1 * r1
    d1 = ball_coulomb_energy(r1)
    for m in (0.5, 2.0, 7.0):
        assert ball_energy(m) == pytest.approx(m ** (2 / 3) * (per1 + m * d1), rel=1e-12)
    assert per1 == pytest.approx((36 * np.pi) ** (1 / 3), rel=1e-12)


def test_critical_mass():
    numeric, closed = critical_mass()
    assert closed == pytest.approx(3.51, abs=0.01)
    assert abs(numeric - closed) / closed < 1e-3
    # below the threshold a single ball beats the split pair
    m = closed / 2
    assert ball_energy(m) < 2 * ball_energy(m / 2)


def test_coil_energy_consistency(prof03):
    quad = BlockQuadrature(prof03, (6, 8, 10))
    e1 = coulomb_energy(("coil", prof03, 4), quad=quad, pot_resolution=(6, 8, 10))
    quad2 = BlockQuadrature(prof03, (8, 10, 12))
    e2 = coulomb_energy(("coil", prof03, 4), quad=quad2, pot_resolution=(8, 10, 12))
    assert e1 > 0
    assert abs(e1 - e2) / e2 < 0.02
    with pytest.raises(DomainError):
        coulomb_energy(("pyramid", 1.0))
