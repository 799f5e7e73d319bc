"""Damped fixed-point solver for stationary inclusions A(t,y) + N'dJ(Ny) - g = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConstantViolation, NonConvergence

Array = np.ndarray

_MAX_ITER_CAP = 2_000_000


@dataclass(frozen=True)
class MonotoneOperator:
    """Strongly monotone map A(t, y) with declared moduli.

    ``eval`` must accept a scalar t with a (dim,) vector, and broadcast when
    given an (m,) time array with an (m, dim) row stack.  ``strong_monotonicity``
    is a lower bound on <A(t,y1)-A(t,y2), y1-y2>/|y1-y2|^2 and ``lipschitz`` an
    upper bound on the increment ratio; both are declarations that the sampling
    estimators can refute but never prove.
    """

    dim: int
    eval: Callable[..., Array]
    strong_monotonicity: float
    lipschitz: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("operator dimension must be positive")
        if not self.strong_monotonicity > 0.0:
            raise ValueError("strong-monotonicity constant must be positive")
        if self.lipschitz < self.strong_monotonicity:
            raise ValueError("Lipschitz modulus cannot undercut the monotonicity constant")

    @staticmethod
    def linear(matrix: Array) -> "MonotoneOperator":
        """Wrap a symmetric positive definite matrix; moduli from its spectrum."""
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("matrix must be square")
        if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        eig = np.linalg.eigvalsh(mat)
        if eig[0] <= 0.0:
            raise ValueError("matrix must be positive definite")
        mat.setflags(write=False)
        return MonotoneOperator(
            dim=mat.shape[0],
            eval=lambda t, y, _m=mat: y @ _m.T,
            strong_monotonicity=float(eig[0]),
            lipschitz=float(eig[-1]),
        )


@dataclass(frozen=True)
class TraceMap:
    """Linear boundary-restriction map with its operator (spectral) norm."""

    matrix: Array
    operator_norm: float

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError("trace matrix must be two-dimensional")
        if np.linalg.matrix_rank(mat) != mat.shape[0]:
            raise ValueError("trace matrix must have full row rank")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        top = float(np.linalg.norm(mat, 2))
        if not math.isclose(self.operator_norm, top, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("declared operator norm disagrees with the top singular value")

    @staticmethod
    def from_matrix(matrix: Array) -> "TraceMap":
        mat = np.asarray(matrix, dtype=float)
        return TraceMap(matrix=mat, operator_norm=float(np.linalg.norm(mat, 2)))

    @staticmethod
    def identity(dim: int) -> "TraceMap":
        return TraceMap(matrix=np.eye(dim), operator_norm=1.0)

    @property
    def range_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, y: Array) -> Array:
        return np.asarray(y, dtype=float) @ self.matrix.T

    def adjoint(self, w: Array) -> Array:
        return np.asarray(w, dtype=float) @ self.matrix


@dataclass(frozen=True)
class NonsmoothFunctional:
    """Locally Lipschitz functional J with a one-valued subgradient selection.

    ``value`` and ``subgradient_selection`` take (t, x) where x is a (dim,)
    vector or an (m, dim) row stack.  ``growth`` bounds |selection(t,x)| by
    growth*(|x|+1) and, for the shipped piecewise-linear selections, also
    majorizes the selection's slope (the damped-step formula relies on that).
    ``relaxed_monotonicity`` is the one-sided defect budget c_J.  ``directional``
    is an optional exact formula for the generalized directional derivative;
    ``is_kink`` marks nondifferentiable points.
    """

    dim: int
    value: Callable[..., Array]
    subgradient_selection: Callable[..., Array]
    growth: float
    relaxed_monotonicity: float
    is_kink: Optional[Callable[[Array], Array]] = None
    directional: Optional[Callable[..., float]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("functional dimension must be positive")
        if self.growth < 0.0 or self.relaxed_monotonicity < 0.0:
            raise ValueError("growth and relaxed-monotonicity constants must be >= 0")

    @staticmethod
    def zero(dim: int) -> "NonsmoothFunctional":
        return NonsmoothFunctional(
            dim=dim,
            value=lambda t, x: np.zeros(np.shape(x)[:-1]) if np.ndim(x) > 1 else 0.0,
            subgradient_selection=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
            growth=0.0,
            relaxed_monotonicity=0.0,
            directional=lambda t, x, d: 0.0,
        )


@dataclass(frozen=True)
class InclusionSolution:
    y: Array
    eta: Array
    residual: float
    iterations: int


def clarke_directional(functional: NonsmoothFunctional, t, x, d) -> float:
    """Generalized directional derivative, exact when the functional carries a
    closed form and a sampled upper envelope of difference quotients otherwise.

    The envelope maxes the quotient over base points nudged off x (so one-sided
    branches around a kink are both seen) at steps from the small end of the
    1e-3..1e-7 ladder, where the quotient has already stabilized for smooth
    pieces; larger steps would pollute the smooth case with curvature error.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise ValueError("direction must be nonzero")
    if functional.directional is not None:
        return float(functional.directional(t, x, d))
    dhat = d / nd
    bases = [x]
    for eps in (1e-8, 1e-7):
        bases.append(x + eps * dhat)
        bases.append(x - eps * dhat)
        for k in range(min(x.size, 4)):
            e = np.zeros_like(x)
            e[k] = eps
            bases.append(x + e)
            bases.append(x - e)
    best = -math.inf
    for base in bases:
        j0 = float(functional.value(t, base))
        for mu in (1e-6, 1e-7):
            q = (float(functional.value(t, base + mu * d)) - j0) / mu
            if q > best:
                best = q
    return best


def inclusion_step_size(
    operator: MonotoneOperator, trace: TraceMap, functional: NonsmoothFunctional
) -> float:
    """Damping factor for the fixed-point iteration; positive iff the
    monotonicity margin dominates the nonsmooth defect."""
    nsq = trace.operator_norm**2
    margin = operator.strong_monotonicity - functional.relaxed_monotonicity * nsq
    if margin <= 0.0:
        raise ConstantViolation(
            "strong monotonicity does not dominate the nonsmooth defect",
            lhs=operator.strong_monotonicity,
            rhs=functional.relaxed_monotonicity * nsq,
        )
    return margin / (operator.lipschitz + functional.growth * nsq) ** 2


def _default_max_iter(operator, trace, functional, lam) -> int:
    lf = operator.lipschitz + functional.growth * trace.operator_norm**2
    rate_sq = 1.0 - 2.0 * lam * (operator.strong_monotonicity
                                 - functional.relaxed_monotonicity * trace.operator_norm**2) \
        + lam**2 * lf**2
    rate = math.sqrt(max(rate_sq, 0.0))
    if rate >= 1.0:
        return _MAX_ITER_CAP
    if rate <= 0.0:
        return 200
    # enough steps to shrink any double-precision-scale residual below tolerance
    return min(_MAX_ITER_CAP, max(200, int(80.0 / (1.0 - rate)) + 50))


def _step(operator, trace, functional, t, y, g):
    w = trace.apply(y)
    theta = functional.subgradient_selection(t, w)
    eta = trace.adjoint(theta)
    return operator.eval(t, y) + eta - g, eta


def solve_inclusion(
    operator: MonotoneOperator,
    trace: TraceMap,
    functional: NonsmoothFunctional,
    t: float,
    g,
    y0=None,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> InclusionSolution:
    """Solve A(t,y) + N'theta(Ny) = g by damped fixed-point iteration.

    The step size is pinned to margin/(L_A + m_J|N|^2)^2, which makes the
    update a contraction whenever the margin m_A - c_J|N|^2 is positive.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    g = np.asarray(g, dtype=float).ravel()
    if g.size != operator.dim:
        raise ValueError("right-hand side dimension mismatch")
    lam = inclusion_step_size(operator, trace, functional)
    if max_iter is None:
        max_iter = _default_max_iter(operator, trace, functional, lam)
    y = np.zeros(operator.dim) if y0 is None else np.asarray(y0, dtype=float).ravel().copy()
    best_y, best_eta, best_res = y.copy(), None, math.inf
    for k in range(1, max_iter + 1):
        f_val, eta = _step(operator, trace, functional, t, y, g)
        res = float(np.linalg.norm(f_val))
        if res < best_res:
            best_y, best_eta, best_res = y.copy(), eta, res
        if res <= tol:
            return InclusionSolution(y=y.copy(), eta=np.asarray(eta, dtype=float), residual=res, iterations=k)
        y = y - lam * f_val
    raise NonConvergence(
        f"inclusion residual {best_res:.3e} above tolerance {tol:.3e} after {max_iter} iterations",
        best=best_y,
        residual=best_res,
    )


def solve_inclusion_batch(
    operator: MonotoneOperator,
    trace: TraceMap,
    functional: NonsmoothFunctional,
    times: Array,
    rhs: Array,
    y0: Optional[Array] = None,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
):
    """Vectorized variant: one damped iteration advanced simultaneously for a
    whole stack of (t, g) pairs.  Returns (Y, residuals, iterations)."""
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    times = np.asarray(times, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float)
    if rhs.ndim == 1:
        rhs = rhs[:, None]
    if rhs.shape != (times.size, operator.dim):
        raise ValueError("right-hand-side stack must be (len(times), dim)")
    lam = inclusion_step_size(operator, trace, functional)
    if max_iter is None:
        max_iter = _default_max_iter(operator, trace, functional, lam)
    y = np.zeros_like(rhs) if y0 is None else np.array(y0, dtype=float)
    if y.shape != rhs.shape:
        raise ValueError("warm start must match the right-hand-side stack")
    best_y, best_worst = y.copy(), math.inf
    for k in range(1, max_iter + 1):
        f_val, _ = _step(operator, trace, functional, times[:, None], y, rhs)
        res = np.linalg.norm(f_val, axis=1)
        worst = float(res.max()) if res.size else 0.0
        if worst < best_worst:
            best_y, best_worst = y.copy(), worst
        if worst <= tol:
            return y.copy(), res, k
        y = y - lam * f_val
    raise NonConvergence(
        f"batch inclusion residual {best_worst:.3e} above tolerance {tol:.3e} after {max_iter} iterations",
        best=best_y,
        residual=best_worst,
    )


def inner_lipschitz_ratio(
    operator: MonotoneOperator,
    trace: TraceMap,
    functional: NonsmoothFunctional,
    t: float,
    g1,
    g2,
    tol: float = 1e-12,
) -> float:
    """|y1 - y2| / |g1 - g2| for the two inclusion solutions; bounded by
    1/(m_A - c_J|N|^2) up to solver tolerance."""
    g1 = np.asarray(g1, dtype=float).ravel()
    g2 = np.asarray(g2, dtype=float).ravel()
    gap = float(np.linalg.norm(g1 - g2))
    if gap == 0.0:
        raise ValueError("right-hand sides must differ")
    s1 = solve_inclusion(operator, trace, functional, t, g1, tol=tol)
    s2 = solve_inclusion(operator, trace, functional, t, g2, tol=tol)
    return float(np.linalg.norm(s1.y - s2.y)) / gap
