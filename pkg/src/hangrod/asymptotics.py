"""Boundary-layer series machinery for the rod eigenproblem.

Bulk correction profiles w, v, r solve (y q')' + lambda0 q = g with q(0) = 0
by variation of parameters,

    q = c1(y) Jt + c2(y) Yt,   c1 = -int_0^y Yt g,   c2 = int_0^y Jt g,

with the c1 integrand log-singular at 0.  The profiles are built once per
mode as Chebyshev interpolants (the solutions are analytic even though Yt
is not), with endpoint values and derivatives read off the interpolant.

The free-end layer function Psi solves U''' - X U' = -1 with
Psi(0) = Psi''(0) = 0 and Psi ~ log X at infinity; its additive constant
Psi_infty feeds the order-one matching constant c_infty.  The eigenvalue
series and the uniformly valid composite eigenfunctions are assembled from
these pieces.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from . import specfun
from .specfun import SpectralBasis, basis as make_basis
from .quadrature import integrate, integrate_log_singular
from .odesolve import BvpProblem, solve_bvp


# ---------------------------------------------------------------------------
# Chebyshev profiles on [0, 1]


class ChebProfile:
    """Chebyshev interpolant of an analytic function on [0, 1]."""

    def __init__(self, coef):
        self.coef = coef
        self._dcoef = {}

    @classmethod
    def from_values(cls, values):
        # values sampled at first-kind points x_k = cos(pi (k + 1/2) / m),
        # k = 0..m-1, mapped to y = (x + 1)/2 and ordered accordingly.
        m = len(values)
        k = np.arange(m)
        theta = np.pi * (k + 0.5) / m
        proj = np.cos(np.outer(np.arange(m), theta))
        coef = (2.0 / m) * proj @ np.asarray(values)
        coef[0] *= 0.5
        return cls(coef)

    @staticmethod
    def nodes(m):
        """First-kind Chebyshev points mapped to [0, 1], in the fit ordering."""
        k = np.arange(m)
        x = np.cos(np.pi * (k + 0.5) / m)
        return 0.5 * (x + 1.0)

    def __call__(self, y, deriv=0):
        if deriv not in self._dcoef:
            c = self.coef
            for _ in range(deriv):
                c = _cheb.chebder(c) * 2.0   # d/dy = 2 d/dx on [0,1] -> [-1,1]
            self._dcoef[deriv] = c
        return _cheb.chebval(2.0 * np.asarray(y) - 1.0, self._dcoef[deriv])


def _solve_inhomogeneous(b, g, npts, piece_tol):
    """Unique continuous solution of (y q')' + lambda0 q = g with q(0) = 0."""
    ys = np.sort(ChebProfile.nodes(npts))

    def yt_g(x):
        return np.asarray(specfun.tilde_y(b, x, 0)) * np.asarray(g(x))

    def jt_g(x):
        return np.asarray(specfun.tilde_j(b, x, 0)) * np.asarray(g(x))

    c1 = np.empty(npts)
    c2 = np.empty(npts)
    c1[0] = -integrate_log_singular(yt_g, ys[0], piece_tol).value
    c2[0] = integrate(jt_g, 0.0, ys[0], piece_tol).value
    for i in range(1, npts):
        c1[i] = c1[i - 1] - integrate(yt_g, ys[i - 1], ys[i], piece_tol).value
        c2[i] = c2[i - 1] + integrate(jt_g, ys[i - 1], ys[i], piece_tol).value
    vals = c1 * np.asarray(specfun.tilde_j(b, ys, 0)) + c2 * np.asarray(specfun.tilde_y(b, ys, 0))
    # restore the fit ordering (descending nodes)
    return ChebProfile.from_values(vals[::-1])


def _profile_points(b):
    return 96 + 32 * (b.mode_n - 1)


def solve_w(b, tol=1e-12, npts=None):
    """Bulk response to the mode shape itself: (y w')' + lambda0 w = Jt, w(0)=0."""
    npts = npts or _profile_points(b)
    return _solve_inhomogeneous(b, lambda x: specfun.tilde_j(b, x, 0), npts, tol)


def solve_v(b, tol=1e-12, npts=None):
    """Bulk response to the fourth derivative: (y v')' + lambda0 v = Jt''''."""
    npts = npts or _profile_points(b)
    scale = 1.0 + b.lambda0**4 / 24.0
    return _solve_inhomogeneous(b, lambda x: specfun.tilde_j(b, x, 4), npts, tol * scale)


def solve_r(b, w, tol=1e-12, npts=None):
    """Second-level bulk response: (y r')' + lambda0 r = w, r(0)=0."""
    npts = npts or _profile_points(b)
    return _solve_inhomogeneous(b, w, npts, tol)


@dataclass
class BulkCorrections:
    """Profiles w, v and (for the clamped family) r for one mode."""

    basis: SpectralBasis
    w: ChebProfile
    v: ChebProfile
    r: Optional[ChebProfile] = None

    @property
    def w1(self):
        return float(self.w(1.0))

    @property
    def v1(self):
        return float(self.v(1.0))


def bulk_corrections(b, bc="clamped", tol=1e-12):
    """Build all bulk correction profiles one mode needs (r only for clamped)."""
    w = solve_w(b, tol)
    v = solve_v(b, tol)
    r = solve_r(b, w, tol) if bc == "clamped" else None
    return BulkCorrections(basis=b, w=w, v=v, r=r)


# ---------------------------------------------------------------------------
# The free-end layer function Psi


def farfield_series_coeffs(nterms=6):
    """Coefficients c_k of Psi ~ log X + sum c_k X^(-3k).

    Substituting the series into U''' - X U' = -1 forces 3 c_1 + 2 = 0 and
    c_k = (3k-3)(3k-2)(3k-1) c_{k-1} / (3k) for k >= 2.
    """
    c = [-2.0 / 3.0]
    for k in range(2, nterms + 1):
        c.append(c[-1] * (3 * k - 3) * (3 * k - 2) * (3 * k - 1) / (3.0 * k))
    return np.array(c)


def _farfield_tail(x, coeffs):
    k = np.arange(1, len(coeffs) + 1)
    return float(np.sum(coeffs * x ** (-3.0 * k)))


def _farfield_slope(x, coeffs):
    k = np.arange(1, len(coeffs) + 1)
    return float(1.0 / x + np.sum(coeffs * (-3.0 * k) * x ** (-3.0 * k - 1)))


@dataclass
class LayerProfile:
    """Psi on [0, x_max] with its additive far-field constant."""

    x_max: float
    solution: object = field(repr=False)
    psi_infty: float = 0.0
    series_coeffs: np.ndarray = field(default=None, repr=False)

    def psi(self, x, deriv=0):
        if deriv in (0, 1, 2):
            vals = self.solution(x)
            return vals[deriv]
        raise ValueError("deriv must be 0..2")

    def farfield(self, x):
        """The matched model log(x) + tail + psi_infty that Psi approaches."""
        x = float(x)
        return math.log(x) + _farfield_tail(x, self.series_coeffs) + self.psi_infty


def solve_psi(x_max=20.0, tol=1e-10, series_terms=6):
    """Solve U''' - X U' = -1 with U(0) = U''(0) = 0 and far-field slope data.

    The third boundary condition sets U'(x_max) from the derivative of the
    far-field series; psi_infty is then U(x_max) - log(x_max) minus the
    series tail, which is x_max-independent to ~1e-6 for x_max >= 20.
    """
    if x_max < 15.0:
        raise ValueError("x_max must be at least 15 for far-field matching")
    coeffs = farfield_series_coeffs(series_terms)
    slope_end = _farfield_slope(x_max, coeffs)

    def rhs(x, s, p):
        return np.vstack([s[1], s[2], x * s[1] - 1.0])

    def rhs_jac(x, s, p):
        m = len(np.atleast_1d(x))
        jac = np.zeros((3, 3, m))
        jac[0, 1] = 1.0
        jac[1, 2] = 1.0
        jac[2, 1] = x
        return jac

    def bcres(sa, sb, p):
        return np.array([sa[0], sa[2], sb[1] - slope_end])

    def bc_jac(sa, sb, p):
        ja = np.zeros((3, 3))
        jb = np.zeros((3, 3))
        ja[0, 0] = 1.0
        ja[1, 2] = 1.0
        jb[2, 1] = 1.0
        return ja, jb, None

    mesh = np.linspace(0.0, x_max, 241)
    problem = BvpProblem(3, rhs, bcres, mesh, rhs_jac=rhs_jac, bc_jac=bc_jac)

    def guess(m):
        return np.vstack([np.log1p(m), 1.0 / (1.0 + m), -1.0 / (1.0 + m) ** 2])

    sol = solve_bvp(problem, guess, tol=tol)
    psi_end = float(sol(np.array([x_max]))[0, 0])
    psi_infty = psi_end - math.log(x_max) - _farfield_tail(x_max, coeffs)
    return LayerProfile(x_max=x_max, solution=sol, psi_infty=psi_infty, series_coeffs=coeffs)


def c_infty(layer):
    """Order-one matching constant 1/2 - Ai(0)/(6 Ai'(0)^2) + Psi_infty/3."""
    a0 = specfun.AIRY_AI_ZERO
    ap0 = specfun.AIRY_AI_PRIME_ZERO
    return 0.5 - a0 / (6.0 * ap0**2) + layer.psi_infty / 3.0


# ---------------------------------------------------------------------------
# Eigenvalue series


@dataclass
class LambdaSeries:
    """Coefficients of lambda(eps) = lambda0 + eps^(1/2) lambda_half + eps lambda_one.

    lambda_third is always zero; for the pinned family lambda_half is also
    zero, for the clamped family it equals lambda0 (and is computed
    independently from the matching quotient).  log_flag records that the
    eigenfunction series carries an eps*log(eps) term at order one, with
    log_coefficient its bulk profile (pinned construction).
    """

    bc: str
    mode_n: int
    lambda0: float
    lambda_half: float
    lambda_one: float
    lambda_third: float = 0.0
    lambda_two_thirds: float = 0.0
    lambda_five_sixths: float = 0.0
    log_flag: bool = True
    log_coefficient: Optional[Callable] = field(default=None, repr=False)
    lambda_half_identity_gap: float = 0.0


def lambda_series(bc, n, corrections=None, profile_tol=1e-12):
    """Eigenvalue series coefficients for boundary family bc and mode n."""
    if bc not in ("clamped", "pinned"):
        raise ValueError("bc must be 'clamped' or 'pinned'")
    b = make_basis(n) if corrections is None else corrections.basis
    if corrections is None:
        corrections = bulk_corrections(b, bc=bc, tol=profile_tol)
    lam = b.lambda0
    w1 = corrections.w1
    v1 = corrections.v1
    jp1 = float(specfun.tilde_j(b, 1.0, 1))
    yt1 = float(specfun.tilde_y(b, 1.0, 0))
    log_coef = _log_coefficient(b)
    if bc == "pinned":
        lam1 = (v1 + lam**3 / 3.0 * yt1 + jp1) / w1
        return LambdaSeries(bc=bc, mode_n=b.mode_n, lambda0=lam, lambda_half=0.0,
                            lambda_one=lam1, log_coefficient=log_coef)
    r1 = float(corrections.r(1.0))
    wp1 = float(corrections.w(1.0, 1))
    lam_half = -jp1 / w1
    lam1 = (v1 + lam**2 * r1 + lam**3 / 3.0 * yt1 - 0.75 * jp1 + lam * wp1) / w1
    return LambdaSeries(bc=bc, mode_n=b.mode_n, lambda0=lam, lambda_half=lam_half,
                        lambda_one=lam1, log_coefficient=log_coef,
                        lambda_half_identity_gap=abs(lam_half - lam))


def _log_coefficient(b):
    scale = -b.lambda0**3 / 9.0

    def u_hat(y):
        return scale * np.asarray(specfun.tilde_j(b, y, 0))

    return u_hat


_ORDER_KEYS = {"0": 0.0, "1/3": 1.0 / 3.0, "1/2": 0.5, "2/3": 2.0 / 3.0,
               "5/6": 5.0 / 6.0, "1": 1.0}


def _order_value(order):
    if isinstance(order, str):
        if order not in _ORDER_KEYS:
            raise ValueError(f"order must be one of {sorted(_ORDER_KEYS)}")
        return _ORDER_KEYS[order]
    return float(order)


def lambda_asymptotic(series, eps, order="1"):
    """Truncated eigenvalue series at eps (order selects retained exponents)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    cut = _order_value(order) + 1e-12
    val = series.lambda0
    if 0.5 <= cut:
        val += eps**0.5 * series.lambda_half
    if 1.0 <= cut:
        val += eps * series.lambda_one
    return val


# ---------------------------------------------------------------------------
# Composite eigenfunctions


@dataclass
class CompositeEigenfunction:
    """Uniformly valid approximation of the normalized eigenfunction.

    order '0' is the reduced-problem mode Jt; order '1/2' (clamped) corrects
    the fixed-end layer; order '2/3' corrects the free-end layer; order '1'
    adds the order-eps bulk terms, including the eps*log(eps) piece (valid
    away from y = 0, where the log-singular Yt enters).

    The '1/2' composite vanishes at the fixed end y = 1 exactly and has an
    O(sqrt(eps)) slope there; at the free end its value is 1 plus an
    exponentially small term rather than exactly 1.
    """

    order: str
    basis: SpectralBasis
    corrections: Optional[BulkCorrections]
    layer: Optional[LayerProfile]
    epsilon: float
    series: Optional[LambdaSeries] = None

    def value(self, y, eps=None):
        e = self.epsilon if eps is None else eps
        b = self.basis
        lam = b.lambda0
        y = np.asarray(y, dtype=float)
        jt = np.asarray(specfun.tilde_j(b, y, 0))
        if self.order == "0":
            return jt
        if self.order == "1/2":
            w = self.corrections.w(y)
            w1 = self.corrections.w1
            return jt - np.sqrt(e) * lam * (w - w1 * np.exp(-(1.0 - y) / np.sqrt(e)))
        k23 = lam**2 / (6.0 * specfun.AIRY_AI_PRIME_ZERO)
        x_in = e ** (-1.0 / 3.0) * y
        bracket = jt - 1.0 + 3.0 * np.asarray(specfun.ai_integral(x_in))
        out = jt - e ** (2.0 / 3.0) * k23 * bracket
        if self.order == "2/3":
            return out
        # order "1": bulk terms of size eps and eps log eps
        c_inf = c_infty(self.layer)
        lam1 = self.series.lambda_one
        yt = np.asarray(specfun.tilde_y(b, y, 0))
        w = self.corrections.w(y)
        v = self.corrections.v(y)
        bulk1 = (c_inf - lam**3 / 9.0 * math.log(e)) * jt + lam**3 / 3.0 * yt - lam1 * w + v
        return out + e * bulk1

    def derivative(self, y, eps=None, k=1):
        e = self.epsilon if eps is None else eps
        b = self.basis
        lam = b.lambda0
        y = np.asarray(y, dtype=float)
        jtk = np.asarray(specfun.tilde_j(b, y, k))
        if self.order == "0":
            return jtk
        if self.order == "1/2":
            if k != 1:
                raise ValueError("order-1/2 derivative implemented for k = 1")
            wp = self.corrections.w(y, 1)
            w1 = self.corrections.w1
            return jtk - np.sqrt(e) * lam * (wp - w1 / np.sqrt(e) * np.exp(-(1.0 - y) / np.sqrt(e)))
        if k > 2:
            raise ValueError("derivative implemented for k <= 2")
        k23 = lam**2 / (6.0 * specfun.AIRY_AI_PRIME_ZERO)
        x_in = e ** (-1.0 / 3.0) * y
        if k == 1:
            layer_term = 3.0 * e ** (-1.0 / 3.0) * np.asarray(specfun.airy_ai(x_in))
        else:
            layer_term = 3.0 * e ** (-2.0 / 3.0) * np.asarray(specfun.airy_ai_prime(x_in))
        out = jtk - e ** (2.0 / 3.0) * k23 * (jtk + layer_term)
        if self.order == "2/3":
            return out
        if k != 1:
            raise ValueError("order-1 derivative implemented for k = 1")
        c_inf = c_infty(self.layer)
        lam1 = self.series.lambda_one
        ytp = np.asarray(specfun.tilde_y(b, y, 1))
        wp = self.corrections.w(y, 1)
        vp = self.corrections.v(y, 1)
        bulk1 = (c_inf - lam**3 / 9.0 * math.log(e)) * jtk + lam**3 / 3.0 * ytp - lam1 * wp + vp
        return out + e * bulk1

    def __call__(self, y, eps=None):
        return self.value(y, eps)


def composite_eigenfunction(order, b, corrections=None, layer=None, eps=1e-3,
                            series=None, bc=None):
    """Build a composite approximation; ingredients are created as needed."""
    order = _normalize_order(order)
    if eps <= 0 or eps > 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    need_corr = order in ("1/2", "1")
    need_layer = order == "1"
    if need_corr and corrections is None:
        corrections = bulk_corrections(b, bc=bc or ("clamped" if order == "1/2" else "pinned"))
    if need_layer and layer is None:
        layer = solve_psi()
    if order == "1" and series is None:
        series = lambda_series(bc or "pinned", b.mode_n, corrections=corrections)
    return CompositeEigenfunction(order=order, basis=b, corrections=corrections,
                                  layer=layer, epsilon=float(eps), series=series)


def _normalize_order(order):
    if isinstance(order, str):
        if order not in ("0", "1/2", "2/3", "1"):
            raise ValueError("order must be one of '0', '1/2', '2/3', '1'")
        return order
    val = float(order)
    for name, x in (("0", 0.0), ("1/2", 0.5), ("2/3", 2.0 / 3.0), ("1", 1.0)):
        if abs(val - x) < 1e-9:
            return name
    raise ValueError(f"unrecognized composite order {order!r}")


# ---------------------------------------------------------------------------
# Closed-form layer rows (used by the verification suite and the CLI)


def layer_u_third(b, x, deriv=0):
    """Free-end layer row at order 1/3: -lambda0 X."""
    x = np.asarray(x, dtype=float)
    if deriv == 0:
        return -b.lambda0 * x
    if deriv == 1:
        return np.full_like(x, -b.lambda0)
    return np.zeros_like(x)


def layer_v_half_clamped(b, z, deriv=0):
    """Fixed-end layer row at order 1/2: Jt'(1) (1 - Z - e^-Z)."""
    a = float(specfun.tilde_j(b, 1.0, 1))
    z = np.asarray(z, dtype=float)
    ez = np.exp(-z)
    if deriv == 0:
        return a * (1.0 - z - ez)
    if deriv == 1:
        return a * (ez - 1.0)
    # alternating pure-exponential tail for deriv >= 2
    sign = -1.0 if deriv % 2 == 0 else 1.0
    return a * sign * ez


def layer_u_two_thirds(b, x, deriv=0):
    """Free-end layer row at order 2/3 (pinned and clamped alike)."""
    lam = b.lambda0
    coef = -(lam**2) / (2.0 * specfun.AIRY_AI_PRIME_ZERO)
    x = np.asarray(x, dtype=float)
    if deriv == 0:
        return lam**2 / 4.0 * x**2 + coef * np.asarray(specfun.ai_integral(x))
    if deriv == 1:
        return lam**2 / 2.0 * x + coef * np.asarray(specfun.airy_ai(x))
    if deriv == 2:
        return np.full_like(x, lam**2 / 2.0) + coef * np.asarray(specfun.airy_ai_prime(x))
    if deriv == 3:
        return coef * x * np.asarray(specfun.airy_ai(x))
    if deriv == 4:
        return coef * (np.asarray(specfun.airy_ai(x)) + x * np.asarray(specfun.airy_ai_prime(x)))
    raise ValueError("deriv must be 0..4")


def g_particular(b, x, tol=1e-12):
    """Particular solution G of the order-one free-end layer equation.

    G(X) = -(lam^3/36) X^3 + (lam^3 / (2 Ai'(0))) int_0^X (X - t) Ai(t) dt,
    evaluated by quadrature of the integral definition.
    """
    lam3 = b.lambda0**3
    xv = float(x)
    moment = integrate(lambda t: (xv - t) * np.asarray(specfun.airy_ai(t)), 0.0, xv, tol).value
    return -lam3 / 36.0 * xv**3 + lam3 / (2.0 * specfun.AIRY_AI_PRIME_ZERO) * moment


def layer_v1_pinned(b, z, deriv=0):
    """Fixed-end layer row at order 1 (pinned): -Jt'(1)(Z^2/2 + 1 - e^-Z)."""
    a = -float(specfun.tilde_j(b, 1.0, 1))
    z = np.asarray(z, dtype=float)
    ez = np.exp(-z)
    if deriv == 0:
        return a * (0.5 * z**2 + 1.0 - ez)
    if deriv == 1:
        return a * (z + ez)
    if deriv == 2:
        return a * (1.0 - ez)
    if deriv == 3:
        return a * ez
    if deriv == 4:
        return a * -ez
    raise ValueError("deriv must be 0..4")


# ---------------------------------------------------------------------------
# Large-mode estimates and physical scaling


def lambda0_large_n(n):
    """Large-mode eigenvalue estimate (n - 1/4)^2 pi^2 / 4."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n - 0.25) ** 2 * np.pi**2 / 4.0


def validity_threshold(n):
    """Advisory thresholds (n^-6, n^-10): where the series is meaningful,
    and where the two-term eigenvalue truncation dominates the remainder."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (float(n) ** -6, float(n) ** -10)


def nondimensionalize(E, I, rho, g, L):
    """Physical parameters to (epsilon, timescale): EI/(rho g L^3), sqrt(L/g)."""
    vals = dict(E=E, I=I, rho=rho, g=g, L=L)
    for name, v in vals.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    return E * I / (rho * g * L**3), math.sqrt(L / g)


def mode_angular_frequency(lam, g, L):
    """Dimensional angular frequency sqrt(lambda) * sqrt(g / L)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return math.sqrt(lam) * math.sqrt(g / L)


def rect_second_moment(width, depth=None):
    """Second moment of area of a rectangular cross-section about its centroid.

    width is the dimension along the bending direction; a square of side a
    gives a^4/12.
    """
    if depth is None:
        depth = width
    if width <= 0 or depth <= 0:
        raise ValueError("cross-section dimensions must be positive")
    return depth * width**3 / 12.0
