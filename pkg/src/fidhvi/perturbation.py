"""Convergence study for a family of perturbed inner potentials.

A family maps a perturbation size delta to a full problem instance on the same
grid as the base problem.  The study solves every member, measures sup-norm
distances to the base solution, and compares them with the a-priori envelope
built from the declared constants; the observed log-log slope documents the
first-order response.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ConstantViolation
from .inclusion import NonsmoothFunctional
from .solver import ProblemSpec, gronwall_envelope, picard_solve
from .special import gamma_fn
from .trajectory import sup_distance

__all__ = [
    "PerturbationFamily",
    "PerturbationRow",
    "StudyResult",
    "linear_shift_family",
    "validate_family",
    "y_error_bound",
    "run_perturbation_study",
]


@dataclass(frozen=True)
class PerturbationFamily:
    """``member(delta)`` must reuse the base grid; ``modulus(delta)`` bounds the
    adjoint-weighted selection difference uniformly in the argument; ``floor``
    is a positive lower bound on every member's coercivity margin."""

    base: ProblemSpec
    member: Callable[[float], ProblemSpec]
    modulus: Callable[[float], float]
    floor: float
    sample_radius: float = 2.0


@dataclass(frozen=True)
class PerturbationRow:
    delta: float
    v_delta: float
    sup_z_err: float
    sup_y_err: float
    gronwall_ceiling: float
    y_bound: float


@dataclass(frozen=True)
class StudyResult:
    rows: Tuple[PerturbationRow, ...]
    slope: float
    k2: float


def _margin(spec: ProblemSpec) -> float:
    return (
        spec.operator.strong_monotonicity
        - spec.functional.relaxed_monotonicity * spec.trace.operator_norm**2
    )


def linear_shift_family(spec: ProblemSpec, direction=None) -> PerturbationFamily:
    """Tilt the inner potential by delta times a fixed linear form.

    The selection shifts by a constant vector, so the relaxed-monotonicity
    budget is unchanged and the perturbation modulus is exactly linear:
    V(delta) = delta * |N| * |b|.
    """
    dim = spec.functional.dim
    b = np.ones(dim) if direction is None else np.asarray(direction, dtype=float).ravel()
    if b.size != dim:
        raise ConfigError("shift direction must match the functional dimension")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        raise ConfigError("shift direction must be nonzero")
    base_j = spec.functional

    def member(delta: float) -> ProblemSpec:
        delta = float(delta)
        if delta < 0.0:
            raise ConfigError("perturbation size must be >= 0")
        value0, theta0, dir0 = base_j.value, base_j.subgradient_selection, base_j.directional
        shifted = NonsmoothFunctional(
            dim=dim,
            value=lambda t, x: value0(t, x) + delta * np.sum(b * np.asarray(x), axis=-1),
            subgradient_selection=lambda t, x: np.asarray(theta0(t, x), dtype=float)
            + delta * b,
            growth=base_j.growth + delta * bnorm,
            relaxed_monotonicity=base_j.relaxed_monotonicity,
            is_kink=base_j.is_kink,
            directional=None
            if dir0 is None
            else (lambda t, x, d: dir0(t, x, d) + delta * float(np.sum(b * np.asarray(d)))),
        )
        return replace(spec, functional=shifted)

    modulus = lambda delta: float(delta) * spec.trace.operator_norm * bnorm
    return PerturbationFamily(
        base=spec, member=member, modulus=modulus, floor=_margin(spec)
    )


def validate_family(
    family: PerturbationFamily,
    deltas: Sequence[float],
    sample_count: int = 64,
    radius: Optional[float] = None,
    seed: int = 0,
) -> None:
    """Spot-check the declared modulus and the uniform coercivity margin.

    Raises ConstantViolation when a sampled selection difference exceeds the
    declared modulus, when the modulus is not monotone from zero, or when a
    member's margin dips below the declared floor.
    """
    if family.floor <= 0.0:
        raise ConstantViolation(
            "family margin floor must be positive", lhs=family.floor, rhs=0.0
        )
    sizes = sorted(float(d) for d in deltas)
    if sizes and sizes[0] < 0.0:
        raise ConfigError("perturbation sizes must be >= 0")
    v0 = family.modulus(0.0)
    if abs(v0) > 1e-12:
        raise ConstantViolation("modulus must vanish at zero", lhs=v0, rhs=0.0)
    last = 0.0
    for d in sizes:
        v = family.modulus(d)
        if v < last - 1e-12:
            raise ConstantViolation(
                "modulus must be nondecreasing", lhs=v, rhs=last
            )
        last = v
    rng = np.random.default_rng(seed)
    if radius is None:
        radius = family.sample_radius
    base_j = family.base.functional
    trace = family.base.trace
    horizon = family.base.horizon
    for d in sizes:
        spec_d = family.member(d)
        if spec_d.grid is not family.base.grid and not np.array_equal(
            spec_d.grid.nodes, family.base.grid.nodes
        ):
            raise ConfigError("family members must reuse the base grid")
        margin_d = _margin(spec_d)
        if margin_d < family.floor - 1e-12:
            raise ConstantViolation(
                "member coercivity margin fell below the declared floor",
                lhs=margin_d,
                rhs=family.floor,
            )
        bound = family.modulus(d) + 1e-12
        for _ in range(sample_count):
            t = float(rng.uniform(0.0, horizon))
            x = rng.uniform(-radius, radius, size=base_j.dim)
            diff = np.asarray(
                spec_d.functional.subgradient_selection(t, x), dtype=float
            ) - np.asarray(base_j.subgradient_selection(t, x), dtype=float)
            vec = trace.adjoint(np.atleast_1d(diff))
            if float(np.linalg.norm(vec)) > bound:
                raise ConstantViolation(
                    "sampled selection difference exceeds the declared modulus",
                    lhs=float(np.linalg.norm(vec)),
                    rhs=bound,
                )


def y_error_bound(spec: ProblemSpec, v_delta: float, sup_z_err: float) -> float:
    """Inner-solution error transfer: V/margin + (m_g/margin) * state error."""
    margin = _margin(spec)
    return v_delta / margin + spec.coupling_lipschitz / margin * sup_z_err


def _ceiling(spec: ProblemSpec, v_delta: float) -> Tuple[float, float]:
    """Envelope constants for one member: (sup of the envelope, growth rate)."""
    margin = _margin(spec)
    gk = gamma_fn(spec.kappa)
    t_pow = spec.horizon**spec.kappa
    k1 = t_pow * spec.f_lipschitz * v_delta / (spec.kappa * gk * margin)
    k2 = spec.f_lipschitz * (spec.coupling_lipschitz / margin + 1.0) / gk
    d_js = [imp.lipschitz for imp in spec.impulses]
    env = gronwall_envelope(k1, k2, d_js, spec.kappa, spec.grid)
    sup_env = float(env.values.max())
    if env.right_values.size:
        sup_env = max(sup_env, float(env.right_values.max()))
    return sup_env, k2


def run_perturbation_study(
    spec: ProblemSpec,
    family: Optional[PerturbationFamily] = None,
    deltas: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4),
    tol: float = 1e-10,
    inner_tol: float = 1e-10,
    threads: Optional[int] = None,
    max_sweeps: int = 200,
    base_report=None,
) -> StudyResult:
    """Solve the base and every member, then tabulate errors against bounds.

    Members are solved in a deterministic order; the optional thread fan-out
    (default from FIDHVI_THREADS, else 1) never changes row order.
    """
    if family is None:
        family = linear_shift_family(spec)
    sizes = [float(d) for d in deltas]
    if not sizes or any(d <= 0.0 for d in sizes):
        raise ConfigError("perturbation sizes must be positive")
    validate_family(family, sizes)
    if threads is None:
        threads = int(os.environ.get("FIDHVI_THREADS", "1"))
    threads = max(1, threads)

    base_rep = base_report if base_report is not None else picard_solve(
        family.base, tol=tol, max_sweeps=max_sweeps, inner_tol=inner_tol
    )

    def solve_member(d: float):
        rep = picard_solve(
            family.member(d), tol=tol, max_sweeps=max_sweeps, inner_tol=inner_tol
        )
        return rep

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(solve_member, sizes))
    else:
        reports = [solve_member(d) for d in sizes]

    rows = []
    k2 = 0.0
    for d, rep in zip(sizes, reports):
        v = family.modulus(d)
        z_err = sup_distance(rep.z, base_rep.z)
        y_err = sup_distance(rep.y, base_rep.y)
        ceiling, k2 = _ceiling(family.base, v)
        rows.append(
            PerturbationRow(
                delta=d,
                v_delta=v,
                sup_z_err=z_err,
                sup_y_err=y_err,
                gronwall_ceiling=ceiling,
                y_bound=y_error_bound(family.base, v, z_err),
            )
        )

    errs = np.array([r.sup_z_err for r in rows])
    ds = np.array(sizes)
    keep = errs > 0.0
    if keep.sum() >= 2:
        slope_fit = np.polyfit(np.log(ds[keep]), np.log(errs[keep]), 1)
        slope = float(slope_fit[0])
    else:
        slope = math.nan
    return StudyResult(rows=tuple(rows), slope=slope, k2=k2)
