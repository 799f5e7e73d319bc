"""Randomized estimators that can refute (never certify) declared constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .inclusion import MonotoneOperator, NonsmoothFunctional, TraceMap
from .solver import ProblemSpec, contraction_factor
from .trajectory import PiecewiseTrajectory

Array = np.ndarray

# a declaration is refuted only when beaten by more than this relative slack
_SLACK = 1e-9

CONSISTENT = "consistent"
REFUTED = "refuted"


@dataclass(frozen=True)
class ConstantEstimate:
    name: str
    declared: float
    observed_extremum: float
    samples: int
    verdict: str


def _tol(declared: float) -> float:
    return _SLACK * max(1.0, abs(declared))


def _upper_verdict(declared: float, observed: float) -> str:
    """Declared is an upper bound: refuted when the observation exceeds it."""
    return REFUTED if observed > declared + _tol(declared) else CONSISTENT


def _lower_verdict(declared: float, observed: float) -> str:
    """Declared is a lower bound: refuted when the observation undercuts it."""
    return REFUTED if observed < declared - _tol(declared) else CONSISTENT


def _centers(dim: int, extra) -> Array:
    base = [np.zeros(dim)]
    if extra is not None:
        pts = np.asarray(extra, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != dim:
            raise ValueError("sampling centers have the wrong dimension")
        # thin out long orbits; sampling only needs representative neighborhoods
        step = max(1, pts.shape[0] // 16)
        base.extend(pts[::step])
    return np.asarray(base)


def _draw(rng, centers: Array, radius: float) -> Array:
    c = centers[int(rng.integers(centers.shape[0]))]
    return c + rng.uniform(-radius, radius, size=c.size)


def _draw_pair(rng, centers: Array, radius: float):
    # resample until the pair is usable; identical draws carry no information
    while True:
        x1 = _draw(rng, centers, radius)
        x2 = _draw(rng, centers, radius)
        if np.linalg.norm(x1 - x2) > 1e-12:
            return x1, x2


def _draw_time(rng, horizon: float) -> float:
    return float(rng.uniform(0.0, horizon))


def estimate_strong_monotonicity(
    operator: MonotoneOperator,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    horizon: float = 1.0,
    centers=None,
) -> ConstantEstimate:
    """Minimum increment quotient <dA, dy>/|dy|^2 over sampled pairs."""
    if sample_count < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    cts = _centers(operator.dim, centers)
    worst = math.inf
    for _ in range(sample_count):
        t = _draw_time(rng, horizon)
        y1, y2 = _draw_pair(rng, cts, radius)
        diff = y1 - y2
        quot = float(
            np.dot(operator.eval(t, y1) - operator.eval(t, y2), diff)
            / np.dot(diff, diff)
        )
        worst = min(worst, quot)
    declared = operator.strong_monotonicity
    return ConstantEstimate(
        name="m_A",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_lower_verdict(declared, worst),
    )


def estimate_operator_lipschitz(
    operator: MonotoneOperator,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    horizon: float = 1.0,
    centers=None,
) -> ConstantEstimate:
    if sample_count < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    cts = _centers(operator.dim, centers)
    worst = 0.0
    for _ in range(sample_count):
        t = _draw_time(rng, horizon)
        y1, y2 = _draw_pair(rng, cts, radius)
        quot = float(
            np.linalg.norm(operator.eval(t, y1) - operator.eval(t, y2))
            / np.linalg.norm(y1 - y2)
        )
        worst = max(worst, quot)
    declared = operator.lipschitz
    return ConstantEstimate(
        name="L_A",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(declared, worst),
    )


def estimate_relaxed_monotonicity(
    functional: NonsmoothFunctional,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    horizon: float = 1.0,
    centers=None,
) -> ConstantEstimate:
    """Maximum one-sided defect -<dtheta, dx>/|dx|^2 of the selection."""
    if sample_count < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    cts = _centers(functional.dim, centers)
    worst = -math.inf
    for _ in range(sample_count):
        t = _draw_time(rng, horizon)
        x1, x2 = _draw_pair(rng, cts, radius)
        diff = x1 - x2
        th1 = np.asarray(functional.subgradient_selection(t, x1), dtype=float)
        th2 = np.asarray(functional.subgradient_selection(t, x2), dtype=float)
        quot = float(-np.dot(th1 - th2, diff) / np.dot(diff, diff))
        worst = max(worst, quot)
    declared = functional.relaxed_monotonicity
    return ConstantEstimate(
        name="c_J",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(declared, worst),
    )


def estimate_growth(
    functional: NonsmoothFunctional,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    horizon: float = 1.0,
    centers=None,
) -> ConstantEstimate:
    """Maximum of |selection(t,x)| / (|x| + 1) over sampled points."""
    if sample_count < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    cts = _centers(functional.dim, centers)
    worst = 0.0
    for _ in range(sample_count):
        t = _draw_time(rng, horizon)
        x = _draw(rng, cts, radius)
        theta = np.asarray(functional.subgradient_selection(t, x), dtype=float)
        quot = float(np.linalg.norm(theta) / (np.linalg.norm(x) + 1.0))
        worst = max(worst, quot)
    declared = functional.growth
    return ConstantEstimate(
        name="m_J",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(declared, worst),
    )


def estimate_f_lipschitz(
    spec: ProblemSpec,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    z_centers=None,
    y_centers=None,
) -> ConstantEstimate:
    """Joint increment quotient |df| / (|dz| + |dy|) for the drive."""
    if sample_count < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    zc = _centers(spec.state_dim, z_centers)
    yc = _centers(spec.inner_dim, y_centers)
    worst = 0.0
    for _ in range(sample_count):
        t = _draw_time(rng, spec.horizon)
        z1, z2 = _draw_pair(rng, zc, radius)
        y1, y2 = _draw_pair(rng, yc, radius)
        num = float(np.linalg.norm(
            np.asarray(spec.f(t, z1, y1), dtype=float)
            - np.asarray(spec.f(t, z2, y2), dtype=float)
        ))
        den = float(np.linalg.norm(z1 - z2) + np.linalg.norm(y1 - y2))
        worst = max(worst, num / den)
    declared = spec.f_lipschitz
    return ConstantEstimate(
        name="M1",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(declared, worst),
    )


def estimate_coupling_lipschitz(
    spec: ProblemSpec,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    z_centers=None,
) -> ConstantEstimate:
    if sample_count < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    zc = _centers(spec.state_dim, z_centers)
    worst = 0.0
    for _ in range(sample_count):
        t = _draw_time(rng, spec.horizon)
        z1, z2 = _draw_pair(rng, zc, radius)
        num = float(np.linalg.norm(
            np.asarray(spec.coupling(t, z1), dtype=float)
            - np.asarray(spec.coupling(t, z2), dtype=float)
        ))
        worst = max(worst, num / float(np.linalg.norm(z1 - z2)))
    declared = spec.coupling_lipschitz
    return ConstantEstimate(
        name="m_g",
        declared=declared,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(declared, worst),
    )


def estimate_impulse_lipschitz(
    spec: ProblemSpec,
    index: int,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    z_centers=None,
) -> ConstantEstimate:
    if not 0 <= index < len(spec.impulses):
        raise IndexError("impulse index out of range")
    if sample_count < 2:
        raise ValueError("need at least two samples")
    imp = spec.impulses[index]
    rng = np.random.default_rng(seed)
    zc = _centers(spec.state_dim, z_centers)
    worst = 0.0
    for _ in range(sample_count):
        z1, z2 = _draw_pair(rng, zc, radius)
        num = float(np.linalg.norm(
            np.asarray(imp.map(z1), dtype=float) - np.asarray(imp.map(z2), dtype=float)
        ))
        worst = max(worst, num / float(np.linalg.norm(z1 - z2)))
    return ConstantEstimate(
        name=f"d_{index + 1}",
        declared=imp.lipschitz,
        observed_extremum=worst,
        samples=sample_count,
        verdict=_upper_verdict(imp.lipschitz, worst),
    )


def operator_norm_estimate(
    trace: TraceMap, iterations: int = 200, seed: int = 0
) -> ConstantEstimate:
    """Power iteration on N'N; converges to the top singular value."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    rng = np.random.default_rng(seed)
    mat = trace.matrix
    v = rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iterations):
        w = mat.T @ (mat @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            break
        v = w / norm
        sigma = math.sqrt(norm)
    declared = trace.operator_norm
    return ConstantEstimate(
        name="norm_N",
        declared=declared,
        observed_extremum=sigma,
        samples=iterations,
        verdict=_upper_verdict(declared, sigma),
    )


def check_HO(spec: ProblemSpec):
    """Truth of the two smallness conditions plus the contraction factor.

    Returns (margin positive, factor below one, factor); the factor is NaN
    when the margin fails, since the formula is then meaningless.
    """
    nsq = spec.trace.operator_norm**2
    first = spec.operator.strong_monotonicity > spec.functional.relaxed_monotonicity * nsq
    if not first:
        return False, False, math.nan
    rho = contraction_factor(spec)
    return True, rho < 1.0, rho


def hypotheses_report(
    spec: ProblemSpec,
    sample_count: int = 200,
    radius: float = 1.0,
    seed: int = 0,
    orbit: Optional[PiecewiseTrajectory] = None,
    inner_orbit: Optional[PiecewiseTrajectory] = None,
) -> Tuple[ConstantEstimate, ...]:
    """One estimate per declared constant, sampled near the origin and, when a
    solution orbit is supplied, near its node values as well."""
    z_pts = orbit.values if orbit is not None else spec.z0[None, :]
    y_pts = inner_orbit.values if inner_orbit is not None else None
    rows = [
        estimate_f_lipschitz(
            spec, sample_count, radius, seed, z_centers=z_pts, y_centers=y_pts
        ),
        estimate_coupling_lipschitz(spec, sample_count, radius, seed + 1, z_centers=z_pts),
        estimate_strong_monotonicity(
            spec.operator, sample_count, radius, seed + 2, spec.horizon, centers=y_pts
        ),
        estimate_operator_lipschitz(
            spec.operator, sample_count, radius, seed + 3, spec.horizon, centers=y_pts
        ),
        estimate_growth(
            spec.functional, sample_count, radius, seed + 4, spec.horizon
        ),
        estimate_relaxed_monotonicity(
            spec.functional, sample_count, radius, seed + 5, spec.horizon
        ),
        operator_norm_estimate(spec.trace, seed=seed + 6),
    ]
    for j in range(len(spec.impulses)):
        rows.append(
            estimate_impulse_lipschitz(
                spec, j, sample_count, radius, seed + 7 + j, z_centers=z_pts
            )
        )
    return tuple(rows)


def report_rows(estimates: Sequence[ConstantEstimate]):
    """Rows for the `constant, declared, observed, samples, verdict` table."""
    return [
        (e.name, e.declared, e.observed_extremum, e.samples, e.verdict)
        for e in estimates
    ]
