"""Lyapunov-Schmidt reduction at desk scale.

The equilibrium equation on the coiled surface,

    H(y) + gamma * N(y) = lambda   on  Sigma~^n_h,

is solved by iterating h <- h + T(G(h, gamma)) where G = H + gamma N is
evaluated directly from the geometry and Coulomb modules (no expansion
shortcuts) and T is the projected Jacobi inverse (J[delta] = G - c nu_2 - d).
Since the linearization of G in h is -J to leading order, adding the
preconditioned residual contracts; the d-projection plays the role of the
Lagrange multiplier lambda and the outer secant loop tunes gamma until the
nu_2-projection c vanishes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dfield
import numpy as np

from .coulomb import (BlockQuadrature, SelfBlockSettings, coil_volume,
                      potential_perturbed)
from .errors import BracketFailure, DomainError, NoContraction, RootNotBracketed
from .fields import SymmetricField, cos_coeffs, cos_eval
from .geometry import build_coil, evaluate_forms
from .jacobi import JacobiSolver
from .profile import DelaunayProfile, build_chart


@dataclass
class ReductionSettings:
    """Grid sizes, quadrature resolutions and loop tolerances (desk scale)."""

    kmax: int = 6
    ntheta: int = 16
    m_t: int = 48
    chart_grid: int = 768
    chart_tol: float = 1e-11
    quad_resolution: tuple = (8, 16, 20)
    final_quad_resolution: tuple = (8, 28, 40)
    self_panel_q: int = 5
    self_core_q: int = 5
    self_column_q: int = 6
    final_self_q: int = 7
    coulomb_t_stride: int = 3
    tol_h: float = 1e-7
    max_iter: int = 40
    damping: float = 0.5
    tol_c_rel: float = 1e-6
    max_secant: int = 14
    gamma_window_M: float = 10.0

    def __post_init__(self):
        if self.chart_grid % self.m_t != 0:
            raise DomainError("chart_grid must be a multiple of m_t")
        if self.m_t % self.coulomb_t_stride != 0:
            raise DomainError("m_t must be a multiple of coulomb_t_stride")


@dataclass
class GammaLeading:
    """gamma_n = 2 I_a T_a / (V_a ln n) with the c3, c5 constants exposed."""

    gamma: float
    c3: float  # |Omega_0| / T
    c5: float  # 2 I_a / c3
    n: int

    def __float__(self):
        return self.gamma


def gamma_leading(profile: DelaunayProfile, n: int) -> GammaLeading:
    if n < 8:
        raise DomainError("leading coupling defined for n >= 8")
    c3 = profile.V / profile.T
    c5 = 2.0 * profile.Ia / c3
    return GammaLeading(gamma=c5 / np.log(n), c3=c3, c5=c5, n=int(n))


class ReductionContext:
    """Chart, solver, quadratures and sample grids shared across iterations."""

    def __init__(self, profile: DelaunayProfile, n: int, settings: ReductionSettings):
        self.profile = profile
        self.n = int(n)
        self.settings = settings
        self.chart = build_chart(profile.a, tol=settings.chart_tol,
                                 grid_size=settings.chart_grid)
        self.solver = JacobiSolver(self.chart, kmax=settings.kmax, m=settings.m_t)
        self.quad = BlockQuadrature(profile, settings.quad_resolution)
        self.final_quad = BlockQuadrature(profile, settings.final_quad_resolution)
        self.self_cfg = SelfBlockSettings(panel_q=settings.self_panel_q,
                                          core_q=settings.self_core_q,
                                          column_q=settings.self_column_q)
        q = settings.final_self_q
        self.final_self_cfg = SelfBlockSettings(panel_q=q, core_q=q, column_q=q + 1)
        self.theta = 2.0 * np.pi * np.arange(settings.ntheta) / settings.ntheta
        self.t_nodes = self.solver.t
        self.y3_nodes = self.solver.z
        stride = settings.coulomb_t_stride
        self.sub_idx = np.arange(0, settings.m_t + 1, stride)
        self.y3_sub = self.y3_nodes[self.sub_idx]

    def zero_field(self) -> SymmetricField:
        return self.solver.zero_field()


@dataclass
class EquationEval:
    field: SymmetricField      # G projected on the symmetry class
    c: float
    d: float
    residual: float            # sup |G - d| over the sample grid
    symmetry_residual: float   # angular components outside the class


def _coulomb_samples(ctx: ReductionContext, h: SymmetricField, final: bool) -> np.ndarray:
    """N at (theta_i, t in sub-grid), cosine-upsampled to the full t grid."""
    from .coulomb import NormalGraphBoundary

    quad = ctx.final_quad if final else ctx.quad
    cfg = ctx.final_self_cfg if final else ctx.self_cfg
    boundary = None
    if h is not None and np.any(h.modes):
        boundary = NormalGraphBoundary(ctx.profile, ctx.chart, h)
    sub = np.empty((len(ctx.theta), len(ctx.y3_sub)))
    for i, th in enumerate(ctx.theta):
        for j, y3 in enumerate(ctx.y3_sub):
            sub[i, j] = potential_perturbed(
                ctx.profile, ctx.n, h, (th, y3), chart=ctx.chart, quad=quad,
                self_cfg=cfg, error_estimate=False, with_base=False,
                boundary=boundary).value
    if len(ctx.y3_sub) == len(ctx.t_nodes):
        return sub
    coef = cos_coeffs(sub)
    return cos_eval(coef, ctx.t_nodes, ctx.solver.tau)


def evaluate_equation(profile: DelaunayProfile, n: int, h: SymmetricField,
                      gamma: float, ctx: ReductionContext = None,
                      settings: ReductionSettings = None,
                      final: bool = False) -> EquationEval:
    """G = H + gamma N on the symmetric sample grid, with projections.

    lambda is identified with the d-projection; the returned residual is
    sup |G - d| over the grid (c reported separately).
    """
    ctx = ctx or ReductionContext(profile, n, settings or ReductionSettings())
    perturb = h if (h is not None and np.any(h.modes)) else None
    patch = build_coil(ctx.profile, ctx.n, perturb, chart=ctx.chart)
    TH, Y3 = np.meshgrid(ctx.theta, ctx.y3_nodes, indexing="ij")
    H = evaluate_forms(patch, TH, Y3).H
    if gamma != 0.0:
        N = _coulomb_samples(ctx, h if h is not None else ctx.zero_field(), final)
        G = H + gamma * N
    else:
        G = H
    fld, drop = SymmetricField.from_samples(G, ctx.solver.tau, ctx.settings.kmax)
    c, d = ctx.solver.project_coeffs(fld)
    residual = float(np.max(np.abs(G - d)))
    return EquationEval(field=fld, c=c, d=d, residual=residual, symmetry_residual=drop)


@dataclass
class ReductionState:
    a: float
    n: int
    gamma: float
    h: SymmetricField
    c: float
    d: float
    residual: float
    iterations: int
    converged: bool
    h_norm: float
    symmetry_residual: float
    history: list = dfield(default_factory=list)
    lambda_convention: str = "lambda = d-projection of G against hbar"
    residual_final: float = None  # sup |G - d| at the full-resolution report
    c_final: float = None

    @property
    def lam(self) -> float:
        return self.d


def fixed_point_solve(profile: DelaunayProfile, n: int, gamma: float,
                      settings: ReductionSettings = None,
                      ctx: ReductionContext = None,
                      h0: SymmetricField = None) -> ReductionState:
    """Damped Picard iteration h <- h + T(G(h, gamma)) at fixed gamma."""
    settings = settings or ReductionSettings()
    ctx = ctx or ReductionContext(profile, n, settings)
    lead = gamma_leading(profile, n)
    window = settings.gamma_window_M / np.log(n) ** 2
    if abs(gamma - lead.gamma) > window:
        warnings.warn(f"gamma={gamma:.5f} outside the leading window "
                      f"{lead.gamma:.5f} +- {window:.5f}", stacklevel=2)

    h = h0.copy() if h0 is not None else ctx.zero_field()
    history = []
    nd_prev = None
    grow = 0
    step = 1.0
    converged = False
    ev = None
    for it in range(settings.max_iter):
        ev = evaluate_equation(profile, n, h, gamma, ctx=ctx)
        delta, c, d = ctx.solver.solve_projected(ev.field)
        nd = delta.norm_sup()
        if nd_prev is not None and nd > nd_prev:
            step *= settings.damping
            grow += 1
            if grow >= 3:
                raise NoContraction(
                    f"update norm grew 3 times (last {nd:.3e} > {nd_prev:.3e})")
        else:
            step = 1.0
            grow = 0
        h = h + step * delta
        history.append({"iter": it, "delta_norm": nd, "c": c, "d": d,
                        "residual": ev.residual, "step": step})
        nd_prev = nd
        if nd < settings.tol_h * max(1.0, h.norm_sup()):
            converged = True
            break
    ev = evaluate_equation(profile, n, h, gamma, ctx=ctx)
    return ReductionState(a=profile.a, n=int(n), gamma=float(gamma), h=h,
                          c=ev.c, d=ev.d, residual=ev.residual,
                          iterations=len(history), converged=converged,
                          h_norm=h.norm_sup(),
                          symmetry_residual=ev.symmetry_residual,
                          history=history)


def solve_gamma(profile: DelaunayProfile, n: int,
                settings: ReductionSettings = None,
                ctx: ReductionContext = None) -> ReductionState:
    """Secant iteration on gamma driving the nu_2-projection c to zero."""
    settings = settings or ReductionSettings()
    if n < 16:
        raise DomainError("solve_gamma needs n >= 16")
    ctx = ctx or ReductionContext(profile, n, settings)
    lead = gamma_leading(profile, n)
    window = max(settings.gamma_window_M / np.log(n) ** 2, 0.6 * lead.gamma)
    lo, hi = lead.gamma - window, lead.gamma + window

    g_prev = lead.gamma
    state = fixed_point_solve(profile, n, g_prev, settings, ctx)
    c_prev = state.c
    g_cur = lead.gamma * 1.1
    seen = [(g_prev, c_prev)]
    for _ in range(settings.max_secant):
        state = fixed_point_solve(profile, n, g_cur, settings, ctx, h0=state.h)
        c_cur = state.c
        seen.append((g_cur, c_cur))
        if abs(c_cur) < settings.tol_c_rel * max(abs(state.d), 1e-30):
            # full-resolution residual report (the loop ran at reduced quadrature)
            fin = evaluate_equation(profile, n, state.h, state.gamma,
                                    ctx=ctx, final=True)
            state.residual_final = fin.residual
            state.c_final = fin.c
            return state
        if c_cur == c_prev:
            break
        g_next = g_cur - c_cur * (g_cur - g_prev) / (c_cur - c_prev)
        g_next = min(max(g_next, lo), hi)
        g_prev, c_prev = g_cur, c_cur
        g_cur = g_next
    signs = {np.sign(c) for _, c in seen}
    if len(signs) < 2:
        raise RootNotBracketed(
            f"c(gamma) kept sign {signs} inside the window [{lo:.5f}, {hi:.5f}]")
    raise NoContraction(f"secant did not reach |c| < tol in {settings.max_secant} steps "
                        f"(last c = {seen[-1][1]:.3e})")


@dataclass
class MassMap:
    a: float
    n: int
    gamma: float
    volume: float
    m: float
    volume_ratio: float  # volume / (n V_a)


def mass_map(profile: DelaunayProfile, n: int, settings: ReductionSettings = None,
             state: ReductionState = None, ctx: ReductionContext = None) -> MassMap:
    """m = gamma* |Omega~^n_h| at the solved coupling."""
    settings = settings or ReductionSettings()
    if state is None:
        ctx = ctx or ReductionContext(profile, n, settings)
        state = solve_gamma(profile, n, settings, ctx)
    chart = ctx.chart if ctx is not None else build_chart(
        profile.a, tol=settings.chart_tol, grid_size=settings.chart_grid)
    vol = coil_volume(profile, n, state.h, chart)
    return MassMap(a=profile.a, n=int(n), gamma=state.gamma, volume=vol,
                   m=state.gamma * vol, volume_ratio=vol / (n * profile.V))


def select_block_count(m: float, profile: DelaunayProfile) -> int:
    """Block-count heuristic n ~ [m (log m - log log m) C_a], C_a = 1/(2 I_a T_a)."""
    if m <= np.e:
        raise DomainError("mass too small for the block-count heuristic")
    Ca = 1.0 / (2.0 * profile.Ia * profile.T)
    return max(int(round(m * (np.log(m) - np.log(np.log(m))) * Ca)), 4)


def find_neck_for_mass(m: float, n: int, bracket=(0.1, 0.42),
                       settings: ReductionSettings = None,
                       profile_tol: float = 1e-10, max_bisect: int = 12,
                       rtol: float = 1e-3):
    """Bisection on the neck parameter b so that mass_map(b, n).m = m."""
    from .profile import solve_profile

    settings = settings or ReductionSettings()

    def mass_of(b):
        prof = solve_profile(b, tol=profile_tol)
        ctx = ReductionContext(prof, n, settings)
        st = solve_gamma(prof, n, settings, ctx)
        return mass_map(prof, n, settings, state=st, ctx=ctx).m

    lo, hi = bracket
    m_lo, m_hi = mass_of(lo), mass_of(hi)
    if m_lo >= m_hi:
        raise BracketFailure(f"mass map not increasing on [{lo}, {hi}]: "
                             f"{m_lo:.4f} >= {m_hi:.4f}")
    if not (m_lo < m < m_hi):
        raise BracketFailure(f"target mass {m} outside [{m_lo:.4f}, {m_hi:.4f}]")
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        m_mid = mass_of(mid)
        if abs(m_mid - m) < rtol * m:
            return mid
        if m_mid < m:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
