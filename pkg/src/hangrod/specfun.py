"""Self-contained evaluators for the special functions the rod problem needs.

Bessel J0/Y0/J1/Y1 and Airy Ai/Bi (with first derivatives and the running
integral of Ai) are computed from power series in an extended-precision
accumulator for small argument, and from the standard large-argument
asymptotic expansions beyond a switch point.  The switch points are placed
where both branches deliver absolute error below ~1e-13: the power series
loses a factor ~e^x to cancellation, the asymptotic series bottoms out near
e^(-2x), so a double-precision-only implementation cannot bridge the gap --
the series side therefore accumulates in 80-bit floats.

Everything here is a pure function of its arguments; all evaluators accept
scalars or arrays and are safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

# Euler-Mascheroni constant, full binary precision.
EULER_GAMMA = 0.5772156649015328606065120900824024

# Ai(0) = 3**(-2/3)/gamma(2/3),  Ai'(0) = -3**(-1/3)/gamma(1/3).
AIRY_AI_ZERO = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIRY_AI_PRIME_ZERO = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))

_LD = np.longdouble

# Power series are used for |x| <= _BESSEL_SWITCH; Hankel expansions beyond.
_BESSEL_SWITCH = 15.0
_AIRY_SWITCH = 5.8
_AIRY_INT_SWITCH = 7.0


def _series_coeffs_j0(nterms=44):
    # J0(x) = sum (-1)^k q^k / (k!)^2,  q = (x/2)^2
    c = np.zeros(nterms, dtype=_LD)
    c[0] = 1.0
    for k in range(1, nterms):
        c[k] = -c[k - 1] / _LD(k * k)
    return c


def _series_coeffs_j1(nterms=44):
    # J1(x) = (x/2) * sum (-1)^k q^k / (k! (k+1)!)
    c = np.zeros(nterms, dtype=_LD)
    c[0] = 1.0
    for k in range(1, nterms):
        c[k] = -c[k - 1] / _LD(k * (k + 1))
    return c


def _series_coeffs_y0(nterms=44):
    # Sum part of Y0: (2/pi) * sum_{k>=1} (-1)^(k+1) H_k q^k / (k!)^2
    c = np.zeros(nterms, dtype=_LD)
    h = _LD(0.0)
    fact2 = _LD(1.0)
    sign = _LD(1.0)
    for k in range(1, nterms):
        h = h + 1 / _LD(k)
        fact2 = fact2 * _LD(k * k)
        c[k] = sign * h / fact2
        sign = -sign
    return c


def _series_coeffs_y1(nterms=44):
    # Sum part of Y1: -(x/(2*pi)) * sum (-1)^k (H_k + H_{k+1}) q^k / (k!(k+1)!)
    c = np.zeros(nterms, dtype=_LD)
    hk = _LD(0.0)
    hk1 = _LD(1.0)
    fact = _LD(1.0)
    sign = _LD(1.0)
    for k in range(nterms):
        if k > 0:
            hk = hk + 1 / _LD(k)
            hk1 = hk1 + 1 / _LD(k + 1)
            fact = fact * _LD(k * (k + 1))
        c[k] = sign * (hk + hk1) / fact
        sign = -sign
    return c


_J0_COEF = _series_coeffs_j0()
_J1_COEF = _series_coeffs_j1()
_Y0_COEF = _series_coeffs_y0()
_Y1_COEF = _series_coeffs_y1()


def _hankel_a(nu, nterms):
    # a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
    a = [1.0]
    mu = 4.0 * nu * nu
    for k in range(1, nterms):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    return a


# P uses even-index a's with alternating sign, Q the odd ones; 13 terms each
# keeps the truncation at the minimum-term level (~1e-13) at x = 15.
_A0 = _hankel_a(0.0, 27)
_A1 = _hankel_a(1.0, 27)
_P0 = [(-1.0) ** k * _A0[2 * k] for k in range(13)]
_Q0 = [(-1.0) ** k * _A0[2 * k + 1] for k in range(13)]
_P1 = [(-1.0) ** k * _A1[2 * k] for k in range(13)]
_Q1 = [(-1.0) ** k * _A1[2 * k + 1] for k in range(13)]


def _horner(coeffs, x):
    acc = np.full_like(x, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def _bessel_large(x, pcoef, qcoef, phase_shift):
    w = 1.0 / (x * x)
    p = _horner(pcoef, w)
    q = _horner(qcoef, w) / x
    chi = x - phase_shift
    amp = np.sqrt(2.0 / (np.pi * x))
    return amp * (p * np.cos(chi) - q * np.sin(chi)), amp * (p * np.sin(chi) + q * np.cos(chi))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _scalarize(arr, scalar):
    return float(arr) if scalar else arr


def bessel_j0(x):
    """Bessel function J0 for x >= 0, absolute error below ~1e-12 for x <= 70."""
    arr, scalar = _as_array(x)
    if np.any(arr < 0):
        raise ValueError("bessel_j0 requires x >= 0")
    out = np.empty_like(arr)
    small = arr <= _BESSEL_SWITCH
    if np.any(small):
        q = (arr[small] * 0.5).astype(_LD) ** 2
        out[small] = _horner(_J0_COEF, q).astype(float)
    if np.any(~small):
        xl = arr[~small]
        out[~small] = _bessel_large(xl, _P0, _Q0, 0.25 * np.pi)[0]
    return _scalarize(out, scalar)


def bessel_y0(x):
    """Bessel function Y0 for x > 0 (logarithmic singularity at 0)."""
    arr, scalar = _as_array(x)
    if np.any(arr <= 0):
        raise ValueError("bessel_y0 requires x > 0")
    out = np.empty_like(arr)
    small = arr <= _BESSEL_SWITCH
    if np.any(small):
        xs = arr[small].astype(_LD)
        q = (xs * 0.5) ** 2
        j0 = _horner(_J0_COEF, q)
        s = _horner(_Y0_COEF, q)
        y = (2.0 / _LD(np.pi)) * ((np.log(xs * 0.5) + _LD(EULER_GAMMA)) * j0 + s)
        out[small] = y.astype(float)
    if np.any(~small):
        xl = arr[~small]
        out[~small] = _bessel_large(xl, _P0, _Q0, 0.25 * np.pi)[1]
    return _scalarize(out, scalar)


def bessel_j1(x):
    """Bessel function J1 for x >= 0."""
    arr, scalar = _as_array(x)
    if np.any(arr < 0):
        raise ValueError("bessel_j1 requires x >= 0")
    out = np.empty_like(arr)
    small = arr <= _BESSEL_SWITCH
    if np.any(small):
        xs = arr[small].astype(_LD)
        q = (xs * 0.5) ** 2
        out[small] = ((xs * 0.5) * _horner(_J1_COEF, q)).astype(float)
    if np.any(~small):
        xl = arr[~small]
        out[~small] = _bessel_large(xl, _P1, _Q1, 0.75 * np.pi)[0]
    return _scalarize(out, scalar)


def bessel_y1(x):
    """Bessel function Y1 for x > 0."""
    arr, scalar = _as_array(x)
    if np.any(arr <= 0):
        raise ValueError("bessel_y1 requires x > 0")
    out = np.empty_like(arr)
    small = arr <= _BESSEL_SWITCH
    if np.any(small):
        xs = arr[small].astype(_LD)
        q = (xs * 0.5) ** 2
        j1 = (xs * 0.5) * _horner(_J1_COEF, q)
        s = (xs * 0.5) * _horner(_Y1_COEF, q)
        y = (2.0 / _LD(np.pi)) * ((np.log(xs * 0.5) + _LD(EULER_GAMMA)) * j1 - 1.0 / xs) - s / _LD(np.pi)
        out[small] = y.astype(float)
    if np.any(~small):
        xl = arr[~small]
        out[~small] = _bessel_large(xl, _P1, _Q1, 0.75 * np.pi)[1]
    return _scalarize(out, scalar)


def bessel_j0_prime(x):
    """d/dx J0(x) = -J1(x)."""
    return -bessel_j1(x) if np.ndim(x) == 0 else -np.asarray(bessel_j1(x))


def bessel_y0_prime(x):
    """d/dx Y0(x) = -Y1(x)."""
    return -bessel_y1(x) if np.ndim(x) == 0 else -np.asarray(bessel_y1(x))


def bessel_j1_prime(x):
    """d/dx J1(x) = J0(x) - J1(x)/x, continuous value 1/2 at x = 0."""
    arr, scalar = _as_array(x)
    out = np.empty_like(arr)
    at0 = arr == 0.0
    out[at0] = 0.5
    pos = ~at0
    if np.any(pos):
        xp = arr[pos]
        out[pos] = bessel_j0(xp) - bessel_j1(xp) / xp
    return _scalarize(out, scalar)


def j0_positive_zero(n):
    """n-th positive zero of J0 (n >= 1), |J0| residual below 1e-12.

    Seeded from the McMahon expansion of the large-x phase, then polished
    with Newton steps using J0' = -J1.
    """
    if n < 1 or int(n) != n:
        raise ValueError("zero index must be a positive integer")
    beta = (n - 0.25) * np.pi
    x = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta**3) + 3779.0 / (15360.0 * beta**5)
    for _ in range(12):
        f = bessel_j0(x)
        step = f / bessel_j1(x)
        x = x + step
        if abs(step) < 1e-15 * x:
            break
    return float(x)


# ---------------------------------------------------------------------------
# Airy functions


def _airy_series_fg(x, want_deriv=False):
    # Maclaurin solutions of u'' = x u:  f = 1 + x^3/6 + ...,  g = x + x^4/12 + ...
    t = x.astype(_LD)
    t3 = t * t * t
    f = np.ones_like(t)
    g = t.copy()
    af = np.ones_like(t)       # a_k t^{3k}
    ag = t.copy()              # b_k t^{3k+1}
    fp = np.zeros_like(t)
    gp = np.ones_like(t)
    paf = np.ones_like(t)      # a_k t^{3k-1} (valid from k = 1)
    pbg = np.ones_like(t)      # b_k t^{3k}
    for k in range(1, 40):
        af = af * t3 / _LD((3 * k) * (3 * k - 1))
        ag = ag * t3 / _LD((3 * k + 1) * (3 * k))
        f = f + af
        g = g + ag
        if want_deriv:
            if k == 1:
                paf = t * t / _LD(6)
            else:
                paf = paf * t3 / _LD((3 * k) * (3 * k - 1))
            pbg = pbg * t3 / _LD((3 * k + 1) * (3 * k))
            fp = fp + paf * _LD(3 * k)
            gp = gp + pbg * _LD(3 * k + 1)
    return f, g, fp, gp


def _airy_uk(nterms=17):
    u = [1.0]
    for k in range(1, nterms):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    return u


_AIRY_U = _airy_uk()
_AIRY_V = [u * (6 * k + 1) / (1.0 - 6 * k) if k else 1.0 for k, u in enumerate(_AIRY_U)]
# Coefficients for int_X^inf Ai: c_0 = 1, c_k = (-1)^k u_k - (k - 1/2) c_{k-1}.
_AIRY_IC = [1.0]
for _k in range(1, 17):
    _AIRY_IC.append((-1.0) ** _k * _AIRY_U[_k] - (_k - 0.5) * _AIRY_IC[-1])

_AI_ALT_U = [(-1.0) ** k * u for k, u in enumerate(_AIRY_U)]
_AI_ALT_V = [(-1.0) ** k * v for k, v in enumerate(_AIRY_V)]


def _airy_small(x, which):
    f, g, fp, gp = _airy_series_fg(x, want_deriv=which in ("aip", "bip"))
    a = _LD(AIRY_AI_ZERO)
    b = _LD(-AIRY_AI_PRIME_ZERO)
    if which == "ai":
        r = a * f - b * g
    elif which == "bi":
        r = math.sqrt(3.0) * (a * f + b * g)
    elif which == "aip":
        r = a * fp - b * gp
    else:
        r = math.sqrt(3.0) * (a * fp + b * gp)
    return r.astype(float)


def _airy_large(x, which):
    zeta = (2.0 / 3.0) * x**1.5
    w = 1.0 / zeta
    if which == "ai":
        s = _horner(_AI_ALT_U, w)
        return s * np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * x**0.25)
    if which == "aip":
        s = _horner(_AI_ALT_V, w)
        return -s * x**0.25 * np.exp(-zeta) / (2.0 * np.sqrt(np.pi))
    if which == "bi":
        s = _horner(_AIRY_U, w)
        return s * np.exp(zeta) / (np.sqrt(np.pi) * x**0.25)
    s = _horner(_AIRY_V, w)
    return s * x**0.25 * np.exp(zeta) / np.sqrt(np.pi)


def _airy_eval(x, which):
    arr, scalar = _as_array(x)
    out = np.empty_like(arr)
    small = arr <= _AIRY_SWITCH
    if np.any(small):
        out[small] = _airy_small(arr[small], which)
    if np.any(~small):
        out[~small] = _airy_large(arr[~small], which)
    return _scalarize(out, scalar)


def airy_ai(x):
    """Airy Ai; accurate to ~1e-13 absolute on [-2, 40], decays beyond."""
    return _airy_eval(x, "ai")


def airy_ai_prime(x):
    """Derivative of Airy Ai."""
    return _airy_eval(x, "aip")


def airy_bi(x):
    """Airy Bi (grows super-exponentially; intended for moderate x)."""
    return _airy_eval(x, "bi")


def airy_bi_prime(x):
    """Derivative of Airy Bi."""
    return _airy_eval(x, "bip")


def ai_integral(x):
    """Integral of Ai from 0 to x; x = inf gives the limit 1/3 exactly.

    Small x integrates the Maclaurin series termwise; large x uses
    1/3 minus the asymptotic tail integral.
    """
    if np.ndim(x) == 0 and np.isinf(x):
        return 1.0 / 3.0
    arr, scalar = _as_array(x)
    out = np.empty_like(arr)
    inf = np.isinf(arr)
    out[inf] = 1.0 / 3.0
    small = (np.abs(arr) <= _AIRY_INT_SWITCH) & ~inf
    if np.any(small):
        t = arr[small].astype(_LD)
        t3 = t * t * t
        af = np.ones_like(t)   # a_k t^{3k}
        ag = t.copy()          # b_k t^{3k+1}
        sf = t.copy()          # sum a_k t^{3k+1}/(3k+1)
        sg = t * t / 2         # sum b_k t^{3k+2}/(3k+2)
        for k in range(1, 40):
            af = af * t3 / _LD((3 * k) * (3 * k - 1))
            ag = ag * t3 / _LD((3 * k + 1) * (3 * k))
            sf = sf + af * t / _LD(3 * k + 1)
            sg = sg + ag * t / _LD(3 * k + 2)
        a = _LD(AIRY_AI_ZERO)
        b = _LD(-AIRY_AI_PRIME_ZERO)
        out[small] = (a * sf - b * sg).astype(float)
    large = ~small & ~inf
    if np.any(large):
        xl = arr[large]
        zeta = (2.0 / 3.0) * xl**1.5
        s = _horner(_AIRY_IC, 1.0 / zeta)
        out[large] = 1.0 / 3.0 - s * np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * xl**0.75)
    return _scalarize(out, scalar)


# ---------------------------------------------------------------------------
# Spectral basis of the reduced (tension-only) problem


@dataclass(frozen=True)
class SpectralBasis:
    """Mode identity of the reduced problem: J0(2 sqrt(lambda0)) = 0.

    j0_zero is the mode_n-th positive zero of J0 and lambda0 = (j0_zero/2)^2,
    so lambda0 is strictly increasing in mode_n.
    """

    mode_n: int
    lambda0: float
    j0_zero: float


def basis(n):
    """Spectral basis for mode n >= 1 of the reduced equation."""
    z = j0_positive_zero(n)
    return SpectralBasis(mode_n=int(n), lambda0=(z / 2.0) ** 2, j0_zero=z)


def _tilde_j_taylor(lam, y, m):
    # m-th derivative of sum (-1)^k (lam y)^k / (k!)^2, for lam*y = O(1):
    # sum_{j>=0} (-1)^(j+m) lam^(j+m) y^j / ((j+m)! j!)
    term = np.full_like(y, (-1.0) ** m * lam**m / math.factorial(m))
    acc = term.copy()
    for j in range(1, 30):
        term = term * (-lam) * y / ((j + m) * j)
        acc = acc + term
    return acc


def tilde_j(b, y, deriv_order=0):
    """Reduced-mode profile J0(2 sqrt(lambda0 y)) and derivatives 0..4.

    Derivatives of order >= 2 come from the ODE y u'' + u' + lambda0 u = 0
    and its differentiated forms, which stay well-conditioned away from 0;
    near 0 (lambda0*y <= 2) the Taylor coefficients are used directly.
    """
    if deriv_order not in (0, 1, 2, 3, 4):
        raise ValueError("deriv_order must be in 0..4")
    lam = b.lambda0
    arr, scalar = _as_array(y)
    if np.any(arr < 0):
        raise ValueError("tilde_j requires y >= 0")
    m = deriv_order
    if m == 0:
        return _scalarize(np.asarray(bessel_j0(2.0 * np.sqrt(lam * arr))), scalar)
    out = np.empty_like(arr)
    near = lam * arr <= 2.0
    if np.any(near):
        out[near] = _tilde_j_taylor(lam, arr[near], m)
    far = ~near
    if np.any(far):
        yf = arr[far]
        x = 2.0 * np.sqrt(lam * yf)
        u0 = np.asarray(bessel_j0(x))
        u1 = -np.sqrt(lam / yf) * np.asarray(bessel_j1(x))
        if m == 1:
            out[far] = u1
        else:
            u2 = -(u1 + lam * u0) / yf
            if m == 2:
                out[far] = u2
            else:
                u3 = -(2.0 * u2 + lam * u1) / yf
                if m == 3:
                    out[far] = u3
                else:
                    out[far] = -(3.0 * u3 + lam * u2) / yf
    return _scalarize(out, scalar)


def tilde_y(b, y, deriv_order=0):
    """Log-singular companion pi*Y0(2 sqrt(lambda0 y)) - (log lambda0 + 2 gamma) * Jt.

    Behaves like log(y) as y -> 0; defined for y > 0 only.  Derivative
    order 0 or 1.
    """
    if deriv_order not in (0, 1):
        raise ValueError("deriv_order must be 0 or 1")
    lam = b.lambda0
    arr, scalar = _as_array(y)
    if np.any(arr <= 0):
        raise ValueError("tilde_y requires y > 0")
    x = 2.0 * np.sqrt(lam * arr)
    shift = math.log(lam) + 2.0 * EULER_GAMMA
    if deriv_order == 0:
        val = np.pi * np.asarray(bessel_y0(x)) - shift * np.asarray(bessel_j0(x))
    else:
        val = -np.pi * np.asarray(bessel_y1(x)) * np.sqrt(lam / arr) - shift * np.asarray(
            tilde_j(b, arr, 1)
        )
    return _scalarize(val, scalar)


def wronskian_tilde(b, y):
    """y * (Jt Yt' - Yt Jt'); identically 1 for the exact pair."""
    return y * (
        tilde_j(b, y, 0) * tilde_y(b, y, 1) - tilde_y(b, y, 0) * tilde_j(b, y, 1)
    )
