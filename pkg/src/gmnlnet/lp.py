"""Thin deterministic wrapper around HiGHS plus exact rational rechecks."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import LPError

#: Dual simplex is deterministic for a fixed problem and gives vertex solutions.
LP_METHOD = "highs-ds"
LP_TOL = 1e-9

_STATUS = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded", 4: "numerical"}


@dataclass
class LPResult:
    status: str
    x: np.ndarray = None
    fun: float = None
    eq_duals: np.ndarray = None
    ub_duals: np.ndarray = None
    message: str = ""

    @property
    def ok(self):
        return self.status == "optimal"


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None),
             tol: float = LP_TOL) -> LPResult:
    """Minimize ``c @ x`` subject to the given constraints.

    Status is one of ``optimal``, ``infeasible``, ``unbounded``,
    ``iteration_limit`` or ``numerical``; only the last two raise.
    """
    opts = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol,
            "presolve": True}
    res = linprog(np.asarray(c, dtype=float), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method=LP_METHOD, options=opts)
    status = _STATUS.get(res.status, "numerical")
    if status in ("iteration_limit", "numerical"):
        raise LPError(f"LP solver failed: {res.message}")
    if status != "optimal":
        return LPResult(status, message=res.message)
    eq = getattr(res, "eqlin", None)
    ub = getattr(res, "ineqlin", None)
    return LPResult(status, np.asarray(res.x), float(res.fun),
                    None if eq is None else np.asarray(eq.marginals),
                    None if ub is None else np.asarray(ub.marginals), res.message)


def to_fraction(v, max_denominator=None):
    f = Fraction(float(v))
    return f if max_denominator is None else f.limit_denominator(max_denominator)


def rational_solve(A, b):
    """Exact solution of ``A x = b`` over the rationals, or ``None`` if inconsistent.

    Entries are converted exactly from floats (or used as given when already
    rational).  Free variables of rank-deficient systems are set to 0.
    """
    from sympy import Matrix, Rational, zeros

    def rat(v):
        v = v if isinstance(v, Fraction) else Fraction(float(v))
        return Rational(v.numerator, v.denominator)

    A = [[rat(v) for v in row] for row in A]
    M = Matrix(A) if A else zeros(0, 0)
    rhs = Matrix([rat(v) for v in b])
    try:
        sol, params = M.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    sol = sol.subs({p: 0 for p in params})
    return [Fraction(int(s.p), int(s.q)) for s in sol]


def recheck_support(A_eq, b_eq, x, tol=1e-9, max_denominator=10 ** 6):
    """Re-solve ``A_eq x = b_eq`` exactly on the support of a floating solution.

    ``A_eq`` and ``b_eq`` are rationalized with ``max_denominator`` (exact for
    data that was rational to begin with).  Returns the exact solution, or
    ``None`` when the support system is inconsistent or gives a negative entry.
    """
    A = np.asarray(A_eq, dtype=float)
    support = [k for k in range(A.shape[1]) if x[k] > tol]
    rows = [[to_fraction(A[r, k], max_denominator) for k in support] for r in range(A.shape[0])]
    rhs = [to_fraction(v, max_denominator) for v in b_eq]
    sol = rational_solve(rows, rhs)
    if sol is None or any(v < 0 for v in sol):
        return None
    full = [Fraction(0)] * A.shape[1]
    for k, v in zip(support, sol):
        full[k] = v
    return full


def certified_upper_bound(V, b, y):
    """Exact upper bound on ``max 1.w s.t. V w <= b, w >= 0`` from a dual guess ``y``.

    Negative entries of ``y`` are clipped to 0 and the result is rescaled so
    that ``V^T y >= 1`` holds in exact arithmetic; weak duality then gives
    ``1.w <= b.y``.  ``V`` must have entries that floats represent exactly
    (0, 1/2, 1 for vertex tables).  Returns ``None`` when no column is covered.
    """
    V = np.asarray(V, dtype=float)
    yq = [Fraction(float(v)) if v > 0 else Fraction(0) for v in y]
    nz = [r for r, v in enumerate(yq) if v]
    worst = None
    for col in range(V.shape[1]):
        s = sum((Fraction(float(V[r, col])) * yq[r] for r in nz if V[r, col]), Fraction(0))
        worst = s if worst is None or s < worst else worst
    if worst is None or worst <= 0:
        return None
    return sum((Fraction(float(b[r])) * yq[r] for r in nz), Fraction(0)) / worst


def certified_lower_bound(V, b, w):
    """Exact lower bound from a primal guess ``w``: rescale so ``V w <= b`` holds exactly."""
    V = np.asarray(V, dtype=float)
    wq = [Fraction(float(v)) if v > 0 else Fraction(0) for v in w]
    nz = [k for k, v in enumerate(wq) if v]
    scale = Fraction(1)
    for r in range(V.shape[0]):
        s = sum((Fraction(float(V[r, k])) * wq[k] for k in nz if V[r, k]), Fraction(0))
        br = Fraction(float(b[r]))
        if s > br:
            scale = min(scale, br / s)
    return scale * sum(wq, Fraction(0))
