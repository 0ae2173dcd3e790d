"""Projected solves for the Jacobi operator of the unduloid.

In isothermal coordinates the operator is

    J[h] = x(t)^{-2} ( h_thth + h_tt + p(t) h ),   p = 2 x^2 + 2 a^2(1-a)^2 / x^2,

and the T-periodic kernel is spanned by the normal components
nu_1 = cos th z'/x, nu_2 = sin th z'/x, nu_3 = -x'/x.  Within the symmetry
class only nu_2 survives; the projected problem

    J[h] = E - c nu_2 - d,    int h = int h nu_2 = 0   (over Sigma_0)

is solved mode by mode on the cosine grid, with bordered systems deflating
the k = 1 kernel (coefficient c) and pinning the k = 0 mean (coefficient d).
Surface integrals use the conformal measure dsigma = x(t)^2 dtheta dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, dst, idct
from scipy.linalg import lu_factor, lu_solve

from .errors import GridMismatch, IllConditioned, SingularSystem
from .fields import SymmetricField
from .profile import ConformalChart

DEFAULT_KMAX = 16
DEFAULT_M = 256  # panels on [0, tau]; 512 per full period


def _second_derivative_matrix(m: int, tau: float) -> np.ndarray:
    """Spectral d^2/dt^2 on the cosine grid t_j = j tau / m (DCT-I collocation)."""
    eye = np.eye(m + 1)
    coef = dct(eye, type=1, axis=0)
    lam = -(np.arange(m + 1) * np.pi / tau) ** 2
    return idct(lam[:, None] * coef, type=1, axis=0)


@dataclass
class KernelFields:
    """Radial profiles of the translation Jacobi fields on the solver grid."""

    nu1: np.ndarray  # pairs with cos(theta); odd under theta -> pi - theta
    nu2: np.ndarray  # pairs with sin(theta); the symmetric-class kernel
    nu3: np.ndarray  # theta-independent, odd in t


class JacobiSolver:
    """Chart-bound spectral solver for the projected Jacobi problem."""

    def __init__(self, chart: ConformalChart, kmax: int = DEFAULT_KMAX, m: int = DEFAULT_M,
                 deflation_rtol: float = 1e-10):
        half = chart.half_size
        if half % m != 0:
            raise GridMismatch(f"chart half grid ({half}) not divisible by solver size {m}")
        stride = half // m
        t, x, xp, z, zp, p = chart.half_view()
        self.chart = chart
        self.kmax = kmax
        self.m = m
        self.tau = chart.tau
        self.t = t[::stride]
        self.x = x[::stride]
        self.xp = xp[::stride]
        self.z = z[::stride]
        self.zp = zp[::stride]
        self.p = p[::stride]
        self.x2 = self.x**2

        # full-period trapezoid in t (spectrally accurate for periodic data)
        w = np.full(m + 1, 2.0 * self.tau / m)
        w[0] *= 0.5
        w[-1] *= 0.5
        self.w = w

        self.D2 = _second_derivative_matrix(m, self.tau)
        self.kernel = KernelFields(nu1=self.zp / self.x, nu2=self.zp / self.x,
                                   nu3=-self.xp / self.x)

        self._lu = {}
        for k in range(kmax + 1):
            A = self.D2 + np.diag(self.p - float(k * k))
            if k == 0:
                # invertible on the even subspace for a < 1/2; at the cylinder
                # the marginal cos(t) mode makes it genuinely singular
                sv = np.linalg.svd(A, compute_uv=False)
                if sv[-1] < deflation_rtol * sv[0]:
                    raise SingularSystem(
                        "theta-independent operator numerically singular "
                        "(cylinder-degenerate chart?)")
                B = self._bordered(A, self.x2, self.w * self.x2)
                self._check(B, 0, deflation_rtol)
                self._lu[0] = lu_factor(B)
                self._lu_plain0 = lu_factor(A)  # hbar solve
            elif k == 1:
                g = self.x2 * self.kernel.nu2
                B = self._bordered(A, g, self.w * g)
                self._check(B, 1, deflation_rtol)
                self._lu[1] = lu_factor(B)
            else:
                self._check(A, k, deflation_rtol)
                self._lu[k] = lu_factor(A)

        self.hbar = lu_solve(self._lu_plain0, self.x2)
        self.int_hbar = 2.0 * np.pi * float(np.sum(self.w * self.hbar * self.x2))
        if self.int_hbar <= 0.0:
            raise SingularSystem("int hbar <= 0; k=0 solve is inconsistent")
        self.int_nu2_sq = np.pi * float(np.sum(self.w * self.kernel.nu2**2 * self.x2))

    @staticmethod
    def _bordered(A, col, row):
        n = A.shape[0]
        B = np.zeros((n + 1, n + 1))
        B[:n, :n] = A
        B[:n, n] = col
        B[n, :n] = row
        return B

    @staticmethod
    def _check(A, k, rtol=None):
        sv = np.linalg.svd(A, compute_uv=False)
        if rtol is not None and sv[-1] < rtol * sv[0]:
            # a k >= 2 mode has no periodic Jacobi field; near-singularity is a bug upstream
            raise IllConditioned(f"unexpected near-kernel in mode k={k}", mode=k)
        if sv[-1] == 0.0:
            raise SingularSystem(f"singular system in mode k={k}")

    # ---- field plumbing -------------------------------------------------

    def _require(self, h: SymmetricField):
        if h.m != self.m or abs(h.tau - self.tau) > 1e-12 * max(1.0, self.tau):
            raise GridMismatch("field is not on the solver grid")
        if h.kmax > self.kmax:
            raise GridMismatch(f"field kmax {h.kmax} exceeds solver kmax {self.kmax}")

    def zero_field(self, kmax=None, even_y2=False) -> SymmetricField:
        return SymmetricField.zero(self.kmax if kmax is None else kmax, self.tau,
                                   self.m, even_y2=even_y2)

    def nu2_field(self) -> SymmetricField:
        f = self.zero_field(kmax=max(self.kmax, 1))
        f.modes[1] = self.kernel.nu2
        return f

    # ---- surface integrals (measure x^2 dtheta dt) ----------------------

    def integral(self, h: SymmetricField) -> float:
        """int_{Sigma_0} h dsigma (only the k = 0 mode contributes)."""
        self._require(h)
        return 2.0 * np.pi * float(np.sum(self.w * h.modes[0] * self.x2))

    def integral_nu2(self, h: SymmetricField) -> float:
        """int_{Sigma_0} h nu_2 dsigma (only the k = 1 mode contributes)."""
        self._require(h)
        if h.kmax < 1:
            return 0.0
        return np.pi * float(np.sum(self.w * h.modes[1] * self.kernel.nu2 * self.x2))

    def inner(self, u: SymmetricField, v: SymmetricField) -> float:
        """int_{Sigma_0} u v dsigma by angular orthogonality."""
        self._require(u)
        self._require(v)
        kk = min(u.kmax, v.kmax)
        fac = np.where(np.arange(kk + 1) == 0, 2.0 * np.pi, np.pi)
        return float(np.sum(fac[:, None] * u.modes[: kk + 1] * v.modes[: kk + 1]
                            * self.w * self.x2))

    # ---- operator and solves --------------------------------------------

    def apply(self, h: SymmetricField) -> SymmetricField:
        self._require(h)
        out = np.empty_like(h.modes)
        for k in range(h.kmax + 1):
            out[k] = (self.D2 @ h.modes[k] + (self.p - k * k) * h.modes[k]) / self.x2
        return SymmetricField(h.kmax, self.tau, out, h.even_y2)

    def apply_mode(self, k: int, prof: np.ndarray) -> np.ndarray:
        return (self.D2 @ prof + (self.p - k * k) * prof) / self.x2

    def solve_projected(self, E: SymmetricField):
        """Unique (h, c, d) with J[h] = E - c nu_2 - d, int h = int h nu_2 = 0."""
        self._require(E)
        h = np.zeros_like(E.modes)
        rhs0 = np.empty(self.m + 2)
        rhs0[: self.m + 1] = self.x2 * E.modes[0]
        rhs0[-1] = 0.0
        sol0 = lu_solve(self._lu[0], rhs0)
        h[0] = sol0[:-1]
        d = float(sol0[-1])

        c = 0.0
        if E.kmax >= 1:
            rhs1 = np.empty(self.m + 2)
            rhs1[: self.m + 1] = self.x2 * E.modes[1]
            rhs1[-1] = 0.0
            sol1 = lu_solve(self._lu[1], rhs1)
            h[1] = sol1[:-1]
            c = float(sol1[-1])

        for k in range(2, E.kmax + 1):
            h[k] = lu_solve(self._lu[k], self.x2 * E.modes[k])
        return SymmetricField(E.kmax, self.tau, h, E.even_y2), c, d

    def project_coeffs(self, E: SymmetricField):
        """(c, d) = (int E nu_2 / int nu_2^2, int E hbar / int hbar)."""
        self._require(E)
        c = self.integral_nu2(E) / self.int_nu2_sq
        d = 2.0 * np.pi * float(np.sum(self.w * E.modes[0] * self.hbar * self.x2)) / self.int_hbar
        return c, d

    # ---- diagnostics ----------------------------------------------------

    def kernel_residuals(self) -> dict:
        """sup |J[nu_j]| relative to sup |nu_j| for the three Jacobi fields."""
        out = {}
        r2 = self.apply_mode(1, self.kernel.nu2)
        out["nu2"] = float(np.max(np.abs(r2)) / np.max(np.abs(self.kernel.nu2)))
        out["nu1"] = out["nu2"]  # same radial profile, cos(theta) factor
        # nu3 is odd in t: differentiate in the sine basis
        interior = self.kernel.nu3[1:-1]
        coef = dst(interior, type=1) / self.m
        lam = -((np.arange(1, self.m) * np.pi / self.tau) ** 2)
        d2 = dst(lam * coef, type=1) / 2.0
        r3 = (d2 + self.p[1:-1] * interior) / self.x2[1:-1]
        out["nu3"] = float(np.max(np.abs(r3)) / np.max(np.abs(self.kernel.nu3)))
        return out

    def hbar_variation_of_parameters(self, t_max_frac: float = 0.9):
        """The zero-initial-condition solution via variation of parameters:

            h(t) = nu3(t) int_0^t nu3(s)^{-2} int_0^s x^2 nu3  ds.

        This is the object carrying the pointwise properties h(0) = 0,
        h > 0 on (0, tau); it differs from the even *periodic* solution
        returned by ``hbar_solve`` by an even homogeneous solution (the
        periodic one is what the projection duality needs).  Returns
        (t, values) on t <= t_max_frac * tau, away from the nu3 zero at tau.
        """
        from scipy.integrate import cumulative_simpson
        from scipy.interpolate import CubicSpline

        n_fine = 16 * self.m
        tf = np.linspace(0.0, t_max_frac * self.tau, n_fine + 1)
        x = CubicSpline(self.chart.tgrid, self.chart.x)(tf)
        xp = CubicSpline(self.chart.tgrid, self.chart.xp)(tf)
        nu3 = -xp / x
        inner = cumulative_simpson(x * x * nu3, x=tf, initial=0.0)
        integrand = np.zeros_like(tf)
        nz = nu3 != 0.0
        integrand[nz] = inner[nz] / nu3[nz] ** 2
        # removable limit at t = 0: x^2 nu3 = -(x^2/2)' gives inner ~ -x0 x0'' t^2/2
        x0 = x[0]
        q = self.chart.a * (1.0 - self.chart.a)
        xpp0 = (1.0 - 2.0 * q) * x0 - 2.0 * x0**3
        integrand[0] = -x0**3 / (2.0 * xpp0)
        outer = cumulative_simpson(integrand, x=tf, initial=0.0)
        return tf, nu3 * outer


def dump_profiles_csv(solver: JacobiSolver, path) -> None:
    """CSV dump of the hbar and nu_j radial profiles on the solver grid."""
    from .serialize import write_csv

    rows = zip(solver.t, solver.hbar, solver.kernel.nu1, solver.kernel.nu2,
               solver.kernel.nu3, solver.p, solver.x)
    write_csv(path, ["t", "hbar", "nu1", "nu2", "nu3", "p", "x"], rows,
              extra_meta={"a": solver.chart.a, "tau": solver.tau,
                          "int_hbar": solver.int_hbar})


# ---- module-level convenience wrappers ------------------------------------

def apply_jacobi(chart: ConformalChart, h: SymmetricField, solver: JacobiSolver = None) -> SymmetricField:
    """J[h] on the chart grid, mode by mode."""
    solver = solver or JacobiSolver(chart, kmax=max(h.kmax, 1), m=h.m)
    return solver.apply(h)


def hbar_solve(chart: ConformalChart, solver: JacobiSolver = None):
    """Solve h'' + p h = x^2 (even, periodic); returns (profile, int_{Sigma_0} hbar)."""
    solver = solver or JacobiSolver(chart, kmax=1)
    return solver.hbar, solver.int_hbar


def project_coeffs(chart: ConformalChart, E: SymmetricField, solver: JacobiSolver = None):
    solver = solver or JacobiSolver(chart, kmax=max(E.kmax, 1), m=E.m)
    return solver.project_coeffs(E)


def solve_projected(chart: ConformalChart, E: SymmetricField, solver: JacobiSolver = None):
    solver = solver or JacobiSolver(chart, kmax=max(E.kmax, 1), m=E.m)
    return solver.solve_projected(E)
