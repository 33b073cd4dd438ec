"""Direct numerical eigensolver for eps u'''' - (y u')' = lambda u.

The fourth-order problem is posed as a first-order system with the
eigenvalue as an augmented scalar unknown, closed by the free-end
normalization u(0) = 1, and solved by the collocation machinery in
odesolve on a three-region mesh: geometric grading inside the free-end
layer (width ~ eps^(1/3)) and the fixed-end layer (width ~ eps^(1/2)),
and a mild bulk mesh in between.  Small eps is reached by continuation
from eps = 0.1 downward, seeded at the top by the reduced-problem mode.

Solves are independent and may run concurrently; a continuation chain is
sequential by construction.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import specfun
from .specfun import basis as make_basis
from .odesolve import BvpProblem, BvpSolution, solve_bvp, continuation, NewtonError, ContinuationError
from . import asymptotics


@dataclass(frozen=True)
class ProblemConfig:
    """One eigenpair request: bending stiffness, end condition, mode index."""

    epsilon: float
    bc: str = "clamped"
    mode_n: int = 1

    def __post_init__(self):
        if not (1e-8 <= self.epsilon <= 10.0):
            raise ValueError("epsilon must lie in [1e-8, 10]")
        if self.bc not in ("clamped", "pinned"):
            raise ValueError("bc must be 'clamped' or 'pinned'")
        if self.mode_n < 1:
            raise ValueError("mode_n must be >= 1")


class ModeJumpError(RuntimeError):
    """Converged eigenvalue is closer to a neighboring mode than expected."""


@dataclass
class EigenSolution:
    """Converged eigenpair: lambda plus (u, u', u'', u''') on the mesh."""

    config: ProblemConfig
    lam: float
    solution: BvpSolution = field(repr=False)
    residual_norm: float = 0.0

    @property
    def mesh(self):
        return self.solution.mesh

    @property
    def states(self):
        return self.solution.states

    def __call__(self, y, deriv=0):
        """Evaluate u (deriv=0..3) anywhere via the collocation interpolant."""
        if deriv == 0:
            return self.solution(y)[0]
        if deriv in (1, 2, 3):
            return self.solution(y)[deriv]
        raise ValueError("deriv must be 0..3")

    def bc_residuals(self):
        s = self.states
        last = s[1, -1] if self.config.bc == "clamped" else s[2, -1]
        return np.array([s[0, 0] - 1.0, s[2, 0], s[3, 0], s[0, -1], last])


def default_tolerance(epsilon):
    """Collocation tolerance: 1e-10 down to eps = 1e-6, relaxed below."""
    return 1e-10 if epsilon >= 1e-6 else 1e-8


def _region_mesh(epsilon, n):
    """Three-region mesh: graded layers at both ends, mild bulk in between."""
    w0 = min(10.0 * epsilon ** (1.0 / 3.0), 0.3)
    w1 = min(10.0 * math.sqrt(epsilon), 0.1)
    n_layer = 36
    n_bulk = 48 + 16 * (n - 1)
    left = w0 * (np.geomspace(1.0, 400.0, n_layer) - 1.0) / 399.0
    right = 1.0 - w1 * (np.geomspace(1.0, 400.0, n_layer) - 1.0) / 399.0
    bulk = np.linspace(w0, 1.0 - w1, n_bulk)
    mesh = np.unique(np.concatenate([left, bulk, right[::-1]]))
    return mesh


def _make_problem(config, mesh=None):
    eps = config.epsilon
    clamped = config.bc == "clamped"

    def rhs(y, s, p):
        return np.vstack([s[1], s[2], s[3], (s[1] + y * s[2] + p * s[0]) / eps])

    def rhs_jac(y, s, p):
        m = len(np.atleast_1d(y))
        jac = np.zeros((4, 4, m))
        jac[0, 1] = 1.0
        jac[1, 2] = 1.0
        jac[2, 3] = 1.0
        jac[3, 0] = p / eps
        jac[3, 1] = 1.0 / eps
        jac[3, 2] = np.asarray(y) / eps
        return jac

    def rhs_dp(y, s, p):
        out = np.zeros_like(s)
        out[3] = s[0] / eps
        return out

    def bcres(sa, sb, p):
        last = sb[1] if clamped else sb[2]
        return np.array([sa[2], sa[3], sb[0], last, sa[0] - 1.0])

    def bc_jac(sa, sb, p):
        ja = np.zeros((5, 4))
        jb = np.zeros((5, 4))
        ja[0, 2] = 1.0
        ja[1, 3] = 1.0
        jb[2, 0] = 1.0
        if clamped:
            jb[3, 1] = 1.0
        else:
            jb[3, 2] = 1.0
        ja[4, 0] = 1.0
        return ja, jb, np.zeros(5)

    if mesh is None:
        mesh = _region_mesh(eps, config.mode_n)
    return BvpProblem(4, rhs, bcres, mesh, nparams=1,
                      rhs_jac=rhs_jac, rhs_dp=rhs_dp, bc_jac=bc_jac)


def _naive_guess(config, mesh):
    b = make_basis(config.mode_n)
    states = np.vstack([np.asarray(specfun.tilde_j(b, mesh, k)) for k in range(4)])
    return states, b.lambda0


DEFAULT_START_EPS = 0.1
CONTINUATION_FACTOR = 10.0 ** -0.5


def _schedule(eps_target, start=DEFAULT_START_EPS):
    """Geometric continuation schedule from `start` down to eps_target."""
    if eps_target >= start:
        return [eps_target]
    n = math.ceil(math.log(eps_target / start) / math.log(CONTINUATION_FACTOR))
    pts = [start * CONTINUATION_FACTOR**k for k in range(n)]
    pts.append(eps_target)
    return pts


def _check_mode(config, lam, b):
    """Gap test against neighbouring reduced eigenvalues, inside the series
    validity range eps <= n^-6 where the asymptotic prediction is meaningful."""
    n = config.mode_n
    if config.epsilon > float(n) ** -6:
        return
    lam_lo = make_basis(n - 1).lambda0 if n > 1 else None
    lam_hi = make_basis(n + 1).lambda0
    gap = lam_hi - b.lambda0 if lam_lo is None else min(lam_hi - b.lambda0, b.lambda0 - lam_lo)
    if abs(lam - b.lambda0) > 0.5 * gap:
        raise ModeJumpError(
            f"converged lambda {lam:.6g} is {abs(lam - b.lambda0):.3g} away from "
            f"lambda0[{n}] = {b.lambda0:.6g}, more than half the gap {gap:.3g} "
            f"to the neighbouring mode"
        )


def solve(config, guess=None, tol=None):
    """Converged eigenpair for one configuration.

    Without a guess, eps <= 0.03 is reached by continuation from eps = 0.1
    (each step seeded from the last); at or above that the reduced-problem
    mode seeds the Newton iteration directly.
    """
    tol = default_tolerance(config.epsilon) if tol is None else tol
    b = make_basis(config.mode_n)
    if guess is not None:
        problem = _make_problem(config)
        sol = solve_bvp(problem, guess, tol=tol,
                        param_guess=guess.scalar_unknown if isinstance(guess, BvpSolution) else None)
    elif config.epsilon >= 0.03:
        problem = _make_problem(config)
        states, lam0 = _naive_guess(config, problem.mesh)
        try:
            sol = solve_bvp(problem, states, tol=tol, param_guess=lam0)
        except NewtonError as exc:
            raise NewtonError(
                f"direct solve failed at eps={config.epsilon}; use continuation "
                f"from a larger eps", exc.last, exc.history) from exc
    else:
        sols = _continue_to(config, tol)
        sol = sols[-1]
    lam = float(sol.scalar_unknown)
    if lam <= 0:
        raise NewtonError(f"converged to nonpositive lambda {lam}", (sol.states, lam), [])
    _check_mode(config, lam, b)
    return EigenSolution(config=config, lam=lam, solution=sol,
                         residual_norm=sol.residual_norm)


def _continue_to(config, tol, schedule=None):
    eps_list = _schedule(config.epsilon) if schedule is None else schedule
    start_cfg = ProblemConfig(eps_list[0], config.bc, config.mode_n)
    start_prob = _make_problem(start_cfg)
    states, lam0 = _naive_guess(start_cfg, start_prob.mesh)
    first = solve_bvp(start_prob, states, tol=tol, param_guess=lam0)

    def family(eps):
        return _make_problem(ProblemConfig(eps, config.bc, config.mode_n))

    return continuation(family, eps_list, first, tol=tol)


@dataclass
class ErrorTable:
    """Sweep results: one row per epsilon, kept strictly decreasing."""

    bc: str
    mode_n: int
    epsilons: np.ndarray
    lambdas: np.ndarray
    lambda_naive: float
    relative_errors: np.ndarray
    remainders: np.ndarray
    failures: list = field(default_factory=list)

    def rows(self):
        for i in range(len(self.epsilons)):
            yield (self.epsilons[i], self.lambdas[i], self.lambda_naive,
                   self.relative_errors[i], self.remainders[i])


def sweep(bc, n, epsilons, tol=None, series=None):
    """Solve along a decreasing epsilon schedule and tabulate errors.

    relative_errors holds |lambda(eps) - lambda0| / lambda0; remainders the
    defect after removing the first correction term (sqrt(eps) lambda0 for
    clamped, eps lambda1 for pinned).  Failed rows are recorded and skipped.
    """
    epsilons = list(epsilons)
    diffs = np.diff(epsilons)
    if len(diffs) and not np.all(diffs < 0):
        raise ValueError("epsilons must be strictly decreasing")
    if series is None:
        series = asymptotics.lambda_series(bc, n)
    lam0 = series.lambda0
    eps_ok, lams, failures = [], [], []
    current_tol = tol if tol is not None else default_tolerance(epsilons[0])
    try:
        chain = _continue_to(ProblemConfig(epsilons[0], bc, n), current_tol,
                             schedule=_schedule(epsilons[0]))
        current = chain[-1]
        eps_ok.append(epsilons[0])
        lams.append(float(current.scalar_unknown))
    except (NewtonError, ContinuationError) as exc:
        failures.append((epsilons[0], str(exc)))
        current = None
    for eps in epsilons[1:]:
        row_tol = tol if tol is not None else default_tolerance(eps)
        cfg = ProblemConfig(eps, bc, n)
        try:
            if current is None:
                current = _continue_to(cfg, row_tol)[-1]
            else:
                current = solve_bvp(_make_problem(cfg), current, tol=row_tol)
            lam = float(current.scalar_unknown)
            _check_mode(cfg, lam, series_basis(series))
            eps_ok.append(eps)
            lams.append(lam)
        except (NewtonError, ContinuationError, ModeJumpError) as exc:
            failures.append((eps, str(exc)))
    eps_arr = np.array(eps_ok)
    lam_arr = np.array(lams)
    rel = np.abs(lam_arr - lam0) / lam0
    if bc == "clamped":
        remainder = np.abs(lam_arr - lam0 - np.sqrt(eps_arr) * series.lambda_half)
    else:
        remainder = np.abs(lam_arr - lam0 - eps_arr * series.lambda_one)
    return ErrorTable(bc=bc, mode_n=n, epsilons=eps_arr, lambdas=lam_arr,
                      lambda_naive=lam0, relative_errors=rel,
                      remainders=remainder, failures=failures)


def series_basis(series):
    return specfun.SpectralBasis(mode_n=series.mode_n,
                                 lambda0=series.lambda0,
                                 j0_zero=2.0 * math.sqrt(series.lambda0))


def fit_slope(table, column="relative_error", eps_range=None):
    """Least-squares log-log line through a sweep column.

    Returns (slope, prefactor, r_squared) for data ~ prefactor * eps^slope.
    """
    if column == "relative_error":
        vals = table.relative_errors
    elif column == "remainder":
        vals = table.remainders
    else:
        raise ValueError("column must be 'relative_error' or 'remainder'")
    eps = table.epsilons
    if eps_range is not None:
        lo, hi = min(eps_range), max(eps_range)
        mask = (eps >= lo) & (eps <= hi)
        eps, vals = eps[mask], vals[mask]
    good = vals > 0
    eps, vals = eps[good], vals[good]
    if len(eps) < 4:
        raise ValueError(f"need at least 4 in-range rows to fit, have {len(eps)}")
    lx, ly = np.log(eps), np.log(vals)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = np.sum((ly - pred) ** 2)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(np.exp(intercept)), float(r2)


@dataclass
class ComparisonReport:
    """Sup-norm gap between a numeric eigenfunction and an approximation."""

    sup_value: float
    sup_slope: float
    at_y_value: float
    at_y_slope: float
    pointwise_max_naive: float = np.nan


def compare_eigenfunction(eigen, composite):
    """Sup-norm of numeric-minus-approximation on the numeric mesh (value and slope)."""
    y = eigen.mesh
    eps = eigen.config.epsilon
    diff = np.abs(eigen.states[0] - np.asarray(composite.value(y, eps)))
    dslope = np.abs(eigen.states[1] - np.asarray(composite.derivative(y, eps)))
    b = composite.basis
    naive = np.abs(eigen.states[0] - np.asarray(specfun.tilde_j(b, y, 0)))
    return ComparisonReport(
        sup_value=float(diff.max()),
        sup_slope=float(dslope.max()),
        at_y_value=float(y[diff.argmax()]),
        at_y_slope=float(y[dslope.argmax()]),
        pointwise_max_naive=float(naive.max()),
    )
