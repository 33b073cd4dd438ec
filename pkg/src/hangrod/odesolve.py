"""Two-point BVP solver: 3-point Lobatto collocation with Newton iteration.

The discretization is the classical C1 collocation scheme of order 4: on
each mesh interval the solution is the cubic with endpoint values and
endpoint slopes given by the ODE, and the remaining condition is collocation
at the midpoint (Lobatto points 0, 1/2, 1).  An optional scalar unknown
(e.g. an eigenvalue) can be appended to the unknowns, balanced by one extra
boundary condition.

Newton's method with a backtracking line search (factor 1/2, at most 8
backtracks) solves the discrete system; the sparse bordered Jacobian is
assembled analytically when the problem supplies derivatives and by finite
differences otherwise.  After convergence the interpolation defect is
measured at off-collocation points and offending intervals are subdivided,
up to a hard cap of 20000 intervals: strongly graded meshes are the
intended regime, uniform meshes are not viable for small layer widths.

Solves are deterministic: identical inputs give bit-identical output.
Distinct solves share no state and may run concurrently.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

_SQRT_EPS = np.sqrt(np.finfo(float).eps)


@dataclass
class BvpProblem:
    """First-order system s' = rhs(y, s, p) with boundary_residual(sa, sb, p) = 0.

    rhs maps (y (m,), states (d, m), p or None) -> (d, m); boundary_residual
    returns dimension + nparams residuals.  The optional *_jac callables
    supply analytic derivatives (rhs_jac -> (d, d, m), rhs_dp -> (d, m),
    bc_jac -> (nbc, d), (nbc, d), (nbc,)); missing ones are replaced by
    forward differences.
    """

    dimension: int
    rhs: Callable
    boundary_residual: Callable
    mesh: np.ndarray
    nparams: int = 0
    rhs_jac: Optional[Callable] = None
    rhs_dp: Optional[Callable] = None
    bc_jac: Optional[Callable] = None

    def __post_init__(self):
        self.mesh = np.asarray(self.mesh, dtype=float)
        if self.mesh.ndim != 1 or len(self.mesh) < 9:
            raise ValueError("mesh must be 1-d with at least 8 intervals")
        if np.any(np.diff(self.mesh) <= 0):
            raise ValueError("mesh breakpoints must be strictly increasing")
        if self.nparams not in (0, 1):
            raise ValueError("nparams must be 0 or 1")


@dataclass
class BvpSolution:
    """Converged states at the mesh nodes plus the C1 cubic interpolant."""

    mesh: np.ndarray
    states: np.ndarray          # (d, N+1)
    scalar_unknown: Optional[float]
    residual_norm: float
    derivs: np.ndarray = field(repr=False, default=None)  # rhs at nodes, (d, N+1)
    max_defect: float = np.nan
    newton_history: list = field(default_factory=list, repr=False)

    def __call__(self, y, deriv=0):
        """Evaluate the C1 piecewise-quartic collocation interpolant (deriv 0..1)."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        out = _quartic_eval(self.mesh, self.states, self.derivs, np.atleast_1d(y), deriv)
        return out[:, 0] if scalar else out


class NewtonError(RuntimeError):
    """Newton iteration failed; carries the last iterate and residual history."""

    def __init__(self, message, last, history):
        super().__init__(message)
        self.last = last
        self.history = history


class ContinuationError(RuntimeError):
    def __init__(self, message, parameter, solutions):
        super().__init__(message)
        self.parameter = parameter
        self.solutions = solutions


def _fd_rhs_jac(rhs, y, s, p, f0):
    d, m = s.shape
    jac = np.empty((d, d, m))
    for j in range(d):
        step = _SQRT_EPS * (1.0 + np.abs(s[j]))
        sp = s.copy()
        sp[j] = sp[j] + step
        jac[:, j, :] = (np.asarray(rhs(y, sp, p)) - f0) / step
    return jac


def _fd_rhs_dp(rhs, y, s, p, f0):
    step = _SQRT_EPS * (1.0 + abs(p))
    return (np.asarray(rhs(y, s, p + step)) - f0) / step


def _fd_bc_jac(bc, sa, sb, p, r0):
    d = len(sa)
    nbc = len(r0)
    ja = np.empty((nbc, d))
    jb = np.empty((nbc, d))
    for j in range(d):
        step = _SQRT_EPS * (1.0 + abs(sa[j]))
        v = sa.copy()
        v[j] += step
        ja[:, j] = (np.asarray(bc(v, sb, p)) - r0) / step
        step = _SQRT_EPS * (1.0 + abs(sb[j]))
        v = sb.copy()
        v[j] += step
        jb[:, j] = (np.asarray(bc(sa, v, p)) - r0) / step
    if p is None:
        return ja, jb, None
    step = _SQRT_EPS * (1.0 + abs(p))
    jp = (np.asarray(bc(sa, sb, p + step)) - r0) / step
    return ja, jb, jp


class _Discretization:
    """Residual/Jacobian assembly for one fixed mesh."""

    def __init__(self, problem, mesh):
        self.pr = problem
        self.mesh = mesh
        self.h = np.diff(mesh)
        self.ymid = mesh[:-1] + 0.5 * self.h
        self.d = problem.dimension
        self.n = len(mesh) - 1
        self.npar = problem.nparams
        self.nunk = self.d * (self.n + 1) + self.npar
        self._build_indices()

    def _build_indices(self):
        d, n = self.d, self.n
        blk_rows = np.arange(d)[:, None].repeat(d, 1)          # (d, d) row pattern
        blk_cols = np.arange(d)[None, :].repeat(d, 0)
        base = np.arange(n) * d
        rows = (blk_rows[None] + base[:, None, None]).ravel()  # interval blocks
        cols_l = (blk_cols[None] + base[:, None, None]).ravel()
        self._rows_blocks = np.concatenate([rows, rows])
        self._cols_blocks = np.concatenate([cols_l, cols_l + d])

    def residual(self, states, p):
        pr = self.pr
        f = np.asarray(pr.rhs(self.mesh, states, p))
        smid = 0.5 * (states[:, :-1] + states[:, 1:]) + (self.h / 8.0) * (f[:, :-1] - f[:, 1:])
        fmid = np.asarray(pr.rhs(self.ymid, smid, p))
        F = (states[:, 1:] - states[:, :-1]) / self.h - (f[:, :-1] + 4.0 * fmid + f[:, 1:]) / 6.0
        bcres = np.asarray(pr.boundary_residual(states[:, 0], states[:, -1], p), dtype=float)
        if len(bcres) != self.d + self.npar:
            raise ValueError("boundary_residual must return dimension + nparams residuals")
        scale = 1.0 + np.abs(fmid)
        norm = max(np.max(np.abs(F) / scale), np.max(np.abs(bcres)) if len(bcres) else 0.0)
        return F, fmid, smid, f, bcres, norm

    def jacobian(self, states, p, f, fmid, smid):
        pr = self.pr
        d, n = self.d, self.n
        h = self.h
        if pr.rhs_jac is not None:
            A = np.asarray(pr.rhs_jac(self.mesh, states, p))
            Am = np.asarray(pr.rhs_jac(self.ymid, smid, p))
        else:
            A = _fd_rhs_jac(pr.rhs, self.mesh, states, p, f)
            Am = _fd_rhs_jac(pr.rhs, self.ymid, smid, p, fmid)
        eye = np.eye(d)[:, :, None]
        Al, Ar = A[:, :, :-1], A[:, :, 1:]
        Ml = 0.5 * eye + (h / 8.0) * Al
        Mr = 0.5 * eye - (h / 8.0) * Ar
        AmMl = np.einsum("ijn,jkn->ikn", Am, Ml)
        AmMr = np.einsum("ijn,jkn->ikn", Am, Mr)
        Bl = -eye / h - Al / 6.0 - (2.0 / 3.0) * AmMl
        Br = eye / h - Ar / 6.0 - (2.0 / 3.0) * AmMr

        data = np.concatenate([
            np.moveaxis(Bl, 2, 0).ravel(),
            np.moveaxis(Br, 2, 0).ravel(),
        ])
        rows = self._rows_blocks
        cols = self._cols_blocks

        sa, sb = states[:, 0], states[:, -1]
        r0 = np.asarray(pr.boundary_residual(sa, sb, p), dtype=float)
        if pr.bc_jac is not None:
            ja, jb, jp = pr.bc_jac(sa, sb, p)
        else:
            ja, jb, jp = _fd_bc_jac(pr.boundary_residual, sa, sb, p, r0)
        nbc = d + self.npar
        bc_row0 = n * d
        rws, cls, dat = [rows], [cols], [data]
        rr = (np.arange(nbc)[:, None] + bc_row0).repeat(d, 1).ravel()
        cc = np.tile(np.arange(d), nbc)
        rws.append(rr)
        cls.append(cc)
        dat.append(np.asarray(ja, dtype=float).ravel())
        rws.append(rr)
        cls.append(cc + n * d)
        dat.append(np.asarray(jb, dtype=float).ravel())

        if self.npar:
            if pr.rhs_dp is not None:
                fp = np.asarray(pr.rhs_dp(self.mesh, states, p))
                fpm = np.asarray(pr.rhs_dp(self.ymid, smid, p))
            else:
                fp = _fd_rhs_dp(pr.rhs, self.mesh, states, p, f)
                fpm = _fd_rhs_dp(pr.rhs, self.ymid, smid, p, fmid)
            dsmid_dp = (h / 8.0) * (fp[:, :-1] - fp[:, 1:])
            col = -(fp[:, :-1] + 4.0 * (fpm + np.einsum("ijn,jn->in", Am, dsmid_dp)) + fp[:, 1:]) / 6.0
            rws.append(np.arange(n * d))
            cls.append(np.full(n * d, self.nunk - 1))
            dat.append(col.ravel(order="F"))
            rws.append(np.arange(nbc) + bc_row0)
            cls.append(np.full(nbc, self.nunk - 1))
            dat.append(np.asarray(jp, dtype=float))

        J = csc_matrix(
            (np.concatenate(dat), (np.concatenate(rws), np.concatenate(cls))),
            shape=(self.nunk, self.nunk),
        )
        return J

    def newton(self, states, p, tol, max_iter=14, max_backtracks=8):
        history = []
        states = states.copy()
        for _ in range(max_iter):
            F, fmid, smid, f, bcres, norm = self.residual(states, p)
            history.append(norm)
            if norm <= tol:
                return states, p, f, norm, history
            J = self.jacobian(states, p, f, fmid, smid)
            r = np.concatenate([F.ravel(order="F"), bcres])
            try:
                step = splu(J).solve(-r)
            except RuntimeError as exc:  # singular factorization
                raise NewtonError(f"linear solve failed: {exc}", (states, p), history)
            ds = step[: self.d * (self.n + 1)].reshape(self.d, self.n + 1, order="F")
            dp = step[-1] if self.npar else 0.0
            alpha = 1.0
            for _bt in range(max_backtracks + 1):
                trial_s = states + alpha * ds
                trial_p = p + alpha * dp if self.npar else p
                t_norm = self.residual(trial_s, trial_p)[-1]
                if t_norm < norm * (1.0 - 1e-4 * alpha) or t_norm <= tol:
                    break
                alpha *= 0.5
            else:
                raise NewtonError(
                    f"Newton line search stalled at residual {norm:.3e}",
                    (states, p), history,
                )
            states = trial_s
            p = trial_p
        F, fmid, smid, f, bcres, norm = self.residual(states, p)
        history.append(norm)
        if norm <= tol:
            return states, p, f, norm, history
        raise NewtonError(
            f"Newton did not converge: residual {norm:.3e} > {tol:.3e}",
            (states, p), history,
        )


def _defects(problem, sol, p):
    """Local error monitor per interval: h times the scaled interpolant defect.

    The pointwise defect of the quartic interpolant is O(h^3); weighting by
    the interval length makes the monitor O(h^4), matching the order of the
    scheme, so equidistributing it to tol targets a global error of that
    size.  Probed at t = 1/4 and 3/4, away from the collocation points.
    """
    mesh = sol.mesh
    h = np.diff(mesh)
    worst = np.zeros(len(h))
    for t in (0.25, 0.75):
        y = mesh[:-1] + t * h
        vals = _quartic_eval(mesh, sol.states, sol.derivs, y, 0)
        slopes = _quartic_eval(mesh, sol.states, sol.derivs, y, 1)
        f = np.asarray(problem.rhs(y, vals, p))
        defect = np.max(np.abs(slopes - f) / (1.0 + np.abs(f)), axis=0)
        worst = np.maximum(worst, defect)
    return h * worst


def _quartic_eval(mesh, states, derivs, y, deriv):
    """Quartic through node values, the collocation midpoint value, and node slopes.

    This is the natural interpolant of the scheme: accuracy O(h^5) in value,
    O(h^4) in slope, so the probed defect inherits the method order.
    """
    idx = np.clip(np.searchsorted(mesh, y, side="right") - 1, 0, len(mesh) - 2)
    h = mesh[idx + 1] - mesh[idx]
    t = (y - mesh[idx]) / h
    s0, s1 = states[:, idx], states[:, idx + 1]
    f0, f1 = derivs[:, idx], derivs[:, idx + 1]
    B = h * f0
    R = h * f1
    S = s1 - s0
    M = 0.5 * S + (h / 8.0) * (f0 - f1)   # s_mid - s_i
    c = 16.0 * M - 4.0 * B - 5.0 * S + R
    dd = -32.0 * M + 5.0 * B + 14.0 * S - 3.0 * R
    e = 16.0 * M - 2.0 * B - 8.0 * S + 2.0 * R
    if deriv == 0:
        return s0 + t * (B + t * (c + t * (dd + t * e)))
    return (B + t * (2.0 * c + t * (3.0 * dd + t * 4.0 * e))) / h


def _coerce_guess(problem, guess):
    mesh = problem.mesh
    d = problem.dimension
    p = None
    if isinstance(guess, BvpSolution):
        states = np.asarray(guess(mesh))
        p = guess.scalar_unknown
    elif callable(guess):
        states = np.asarray(guess(mesh), dtype=float)
    else:
        states = np.asarray(guess, dtype=float)
    if states.shape != (d, len(mesh)):
        raise ValueError(f"guess states must have shape {(d, len(mesh))}")
    return states, p


def solve_bvp(problem, guess, tol=1e-10, param_guess=None, max_rounds=14,
              max_intervals=20000, refine=True):
    """Solve a BvpProblem to the given collocation tolerance.

    `guess` is a BvpSolution, a callable mesh -> states, or a state array on
    problem.mesh; `param_guess` seeds the scalar unknown (required when the
    problem has one, unless the guess solution carries it).
    """
    states, p_from_guess = _coerce_guess(problem, guess)
    if problem.nparams:
        p = param_guess if param_guess is not None else p_from_guess
        if p is None:
            raise ValueError("problem has a scalar unknown but no guess for it")
        p = float(p)
    else:
        p = None
    mesh = problem.mesh.copy()
    newton_tol = max(0.1 * tol, 5e-14)
    history_all = []
    for _round in range(max_rounds):
        disc = _Discretization(problem, mesh)
        states, p, f, norm, hist = disc.newton(states, p, newton_tol)
        history_all.extend(hist)
        sol = BvpSolution(
            mesh=mesh,
            states=states,
            scalar_unknown=p,
            residual_norm=norm,
            derivs=f,
            newton_history=history_all,
        )
        defect = _defects(problem, sol, p)
        sol.max_defect = float(defect.max())
        if not refine or sol.max_defect <= tol:
            return sol
        factor = np.ones(len(defect), dtype=int)
        bad = defect > tol
        factor[bad] = np.clip(np.ceil((defect[bad] / tol) ** 0.25).astype(int) + 1, 2, 4)
        if factor.sum() > max_intervals:
            raise NewtonError(
                f"mesh refinement exceeded {max_intervals} intervals",
                (states, p), history_all,
            )
        pieces = [np.linspace(mesh[i], mesh[i + 1], factor[i] + 1)[:-1] for i in range(len(factor))]
        new_mesh = np.concatenate(pieces + [mesh[-1:]])
        states = _quartic_eval(mesh, states, f, new_mesh, 0)
        mesh = new_mesh
        problem = BvpProblem(
            dimension=problem.dimension,
            rhs=problem.rhs,
            boundary_residual=problem.boundary_residual,
            mesh=mesh,
            nparams=problem.nparams,
            rhs_jac=problem.rhs_jac,
            rhs_dp=problem.rhs_dp,
            bc_jac=problem.bc_jac,
        )
    raise NewtonError(
        f"defect {sol.max_defect:.3e} still above tol after {max_rounds} refinement rounds",
        (states, p), history_all,
    )


def continuation(family, parameter_schedule, initial, tol=1e-10, param_attr=None):
    """Solve family(parameter) along a schedule, seeding each from the last.

    `family` maps a parameter value to a BvpProblem; `initial` must be a
    BvpSolution valid at (or near) the first schedule entry.  A failed step
    triggers one bisection of the parameter step (in log space for positive
    parameters) before giving up.
    """
    schedule = list(parameter_schedule)
    if len(schedule) == 0:
        return []
    diffs = np.diff(schedule)
    if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("parameter schedule must be monotone")
    sols = []
    current = initial
    prev_param = None
    for par in schedule:
        try:
            current = solve_bvp(family(par), current, tol=tol)
        except NewtonError:
            if prev_param is None:
                raise ContinuationError(
                    f"continuation failed at first parameter {par!r}", par, sols
                )
            if prev_param > 0 and par > 0:
                mid = float(np.sqrt(prev_param * par))
            else:
                mid = 0.5 * (prev_param + par)
            try:
                bridge = solve_bvp(family(mid), current, tol=tol)
                current = solve_bvp(family(par), bridge, tol=tol)
            except NewtonError as exc:
                raise ContinuationError(
                    f"continuation failed at parameter {par!r} even after step bisection",
                    par, sols,
                ) from exc
        sols.append(current)
        prev_param = par
    return sols
