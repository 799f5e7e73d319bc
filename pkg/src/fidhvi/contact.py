"""Frictional contact of a 1-D elastic rod, driven by a memory-fractional
internal force state.

The rod is fixed at the left end and discretized with linear elements; the
right end meets a deformable obstacle.  Both contact laws are continuous
piecewise-linear selections with a rising branch, a softening (descending)
branch, and a plateau, so their potentials are nonconvex but C^1.  The normal
law acts on the end displacement, the tangential (friction-like) law on the
same trace; their nondifferentiable selection points are disjoint, so the
combined directional derivative splits additively and exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, ConstantViolation
from .inclusion import MonotoneOperator, NonsmoothFunctional, TraceMap
from .perturbation import (
    PerturbationFamily,
    StudyResult,
    run_perturbation_study,
)
from .solver import Impulse, ProblemSpec, picard_solve
from .trajectory import TimeGrid, sup_distance

__all__ = [
    "ContactLaw",
    "ContactModel",
    "CONTACT_MODELS",
    "assemble_stiffness",
    "assemble_load",
    "end_trace",
    "get_contact_model",
    "to_problem_spec",
    "friction_continuation",
    "run_contact_perturbation",
]


def _ramp_integral(r, c):
    # integral from 0 of clip(s, 0, c): quadratic rise then linear growth
    r = np.asarray(r, dtype=float)
    core = np.clip(r, 0.0, c)
    return 0.5 * core * core + c * np.maximum(r - c, 0.0)


@dataclass(frozen=True)
class ContactLaw:
    """Continuous piecewise-linear selection: slope ``stiffness`` up to
    ``knee``, slope ``-drop`` down to ``tail``, constant beyond.  ``odd``
    laws are extended antisymmetrically for negative arguments."""

    stiffness: float
    knee: float
    tail: float
    drop: float
    odd: bool = False
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.knee < self.tail:
            raise ConfigError("law breakpoints must satisfy 0 < knee < tail")
        if self.stiffness <= 0.0 or self.drop < 0.0 or self.scale < 0.0:
            raise ConfigError("law slopes must be positive (drop may be zero)")
        if self.plateau < 0.0:
            raise ConfigError("law must not descend below zero force")

    @property
    def plateau(self) -> float:
        return self.stiffness * self.knee - self.drop * (self.tail - self.knee)

    @property
    def slope_bound(self) -> float:
        return self.scale * max(self.stiffness, self.drop)

    @property
    def defect(self) -> float:
        """One-sided monotonicity defect: the softening slope."""
        return self.scale * self.drop

    def selection(self, w):
        w = np.asarray(w, dtype=float)
        r = np.abs(w) if self.odd else w
        raw = self.stiffness * np.clip(r, 0.0, self.knee) - self.drop * np.clip(
            r - self.knee, 0.0, self.tail - self.knee
        )
        if self.odd:
            raw = raw * np.sign(w)
        return self.scale * raw

    def value(self, w):
        w = np.asarray(w, dtype=float)
        r = np.abs(w) if self.odd else w
        raw = self.stiffness * _ramp_integral(r, self.knee) - self.drop * _ramp_integral(
            r - self.knee, self.tail - self.knee
        )
        return self.scale * raw

    def scaled(self, factor: float) -> "ContactLaw":
        return replace(self, scale=self.scale * float(factor))


@dataclass(frozen=True)
class ContactModel:
    name: str
    elements: int
    length: float
    axial_stiffness: float
    body_load: float
    normal: ContactLaw
    friction: Optional[ContactLaw]
    state_decay: float
    coupling_gain: float
    kappa: float = 0.5
    horizon: float = 1.0
    z0: float = 0.5
    impulses: Tuple[Impulse, ...] = ()
    trace_constant: float = 1.0
    contact_measure: float = 1.0

    def __post_init__(self):
        if self.elements < 1:
            raise ConfigError("need at least one element")
        if self.length <= 0.0 or self.axial_stiffness <= 0.0:
            raise ConfigError("rod geometry and stiffness must be positive")

    @property
    def defect_total(self) -> float:
        d = self.normal.defect
        if self.friction is not None:
            d += self.friction.defect
        return d

    @property
    def slope_total(self) -> float:
        s = self.normal.slope_bound
        if self.friction is not None:
            s += self.friction.slope_bound
        return s


def assemble_stiffness(elements: int, axial_stiffness: float = 1.0, length: float = 1.0):
    """Linear-element stiffness of a fixed-free bar; SPD of size ``elements``."""
    h = length / elements
    k = axial_stiffness / h
    main = np.full(elements, 2.0 * k)
    main[-1] = k
    mat = np.diag(main)
    off = np.full(elements - 1, -k)
    mat += np.diag(off, 1) + np.diag(off, -1)
    return mat


def assemble_load(elements: int, body_load: float = 1.0, length: float = 1.0):
    """Consistent nodal loads of a uniform body force: h per interior node,
    h/2 at the free end."""
    h = length / elements
    b = np.full(elements, body_load * h)
    b[-1] = 0.5 * body_load * h
    return b


def end_trace(elements: int) -> TraceMap:
    row = np.zeros((1, elements))
    row[0, -1] = 1.0
    return TraceMap(matrix=row, operator_norm=1.0)


def _combined_functional(model: ContactModel) -> NonsmoothFunctional:
    normal, friction = model.normal, model.friction

    def value(t, x):
        v = normal.value(x)
        if friction is not None:
            v = v + friction.value(x)
        return np.sum(v, axis=-1)

    def selection(t, x):
        s = normal.selection(x)
        if friction is not None:
            s = s + friction.selection(x)
        return s

    def directional(t, x, d):
        # both potentials are C^1 (their selections are continuous), so the
        # generalized derivative is the plain directional derivative
        return float(np.sum(selection(t, np.asarray(x, dtype=float)) * np.asarray(d)))

    return NonsmoothFunctional(
        dim=1,
        value=value,
        subgradient_selection=selection,
        growth=model.slope_total,
        relaxed_monotonicity=model.defect_total,
        is_kink=lambda x: np.zeros(np.shape(np.sum(x, axis=-1)), dtype=bool),
        directional=directional,
    )


def to_problem_spec(
    model: ContactModel,
    cells: int = 512,
    grid: Optional[TimeGrid] = None,
    kappa: Optional[float] = None,
) -> ProblemSpec:
    """Assemble the rod instance, rejecting it if the coercivity margin of the
    contact block is not positive."""
    stiffness = assemble_stiffness(model.elements, model.axial_stiffness, model.length)
    operator = MonotoneOperator.linear(stiffness)
    trace = end_trace(model.elements)
    margin = operator.strong_monotonicity - model.defect_total * trace.operator_norm**2
    if margin <= 0.0:
        raise ConstantViolation(
            "contact softening exceeds the stiffness coercivity",
            lhs=operator.strong_monotonicity,
            rhs=model.defect_total * trace.operator_norm**2,
        )
    load = assemble_load(model.elements, model.body_load, model.length)
    gamma = trace.matrix  # (1, elements)
    k = float(kappa) if kappa is not None else model.kappa
    times = tuple(imp.time for imp in model.impulses)
    if grid is None:
        grid = TimeGrid.uniform(model.horizon, cells, times)

    decay, gain = model.state_decay, model.coupling_gain

    def drive(t, z, y):
        return -decay * np.asarray(z, dtype=float) - gain * (
            np.asarray(y, dtype=float) @ gamma.T
        )

    def coupling(t, z):
        return load + np.asarray(z, dtype=float) @ gamma

    return ProblemSpec(
        kappa=k,
        grid=grid,
        z0=np.array([model.z0]),
        f=drive,
        f_lipschitz=max(decay, gain),
        f_bound=lambda t: 0.5,
        impulses=model.impulses,
        operator=operator,
        trace=trace,
        functional=_combined_functional(model),
        coupling=coupling,
        coupling_lipschitz=1.0,
    )


_NORMAL_LAW = ContactLaw(stiffness=1.0, knee=0.5, tail=1.5, drop=0.2)
_FRICTION_LAW = ContactLaw(stiffness=0.5, knee=0.4, tail=1.4, drop=0.1, odd=True)


CONTACT_MODELS: dict[str, ContactModel] = {
    "rod_basic": ContactModel(
        name="rod_basic",
        elements=2,
        length=1.0,
        axial_stiffness=1.0,
        body_load=1.0,
        normal=_NORMAL_LAW,
        friction=_FRICTION_LAW,
        state_decay=0.1,
        coupling_gain=0.05,
        impulses=(Impulse(time=0.5, map=lambda z: 0.1 * z, lipschitz=0.1),),
    ),
    "rod_decoupled": ContactModel(
        name="rod_decoupled",
        elements=2,
        length=1.0,
        axial_stiffness=1.0,
        body_load=1.0,
        normal=_NORMAL_LAW,
        friction=_FRICTION_LAW,
        state_decay=0.1,
        coupling_gain=0.0,
        impulses=(
            Impulse(time=0.5, map=lambda z: 0.2 * np.ones_like(z), lipschitz=0.0),
        ),
    ),
    "rod_frictionless": ContactModel(
        name="rod_frictionless",
        elements=2,
        length=1.0,
        axial_stiffness=1.0,
        body_load=1.0,
        normal=_NORMAL_LAW,
        friction=None,
        state_decay=0.1,
        coupling_gain=0.05,
        impulses=(Impulse(time=0.5, map=lambda z: 0.1 * z, lipschitz=0.1),),
    ),
    "rod_violates_h0": ContactModel(
        name="rod_violates_h0",
        elements=2,
        length=1.0,
        axial_stiffness=1.0,
        body_load=1.0,
        normal=_NORMAL_LAW.scaled(3.0),
        friction=_FRICTION_LAW.scaled(3.0),
        state_decay=0.1,
        coupling_gain=0.05,
    ),
}


def get_contact_model(name: str) -> ContactModel:
    try:
        return CONTACT_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(CONTACT_MODELS))
        raise ConfigError(
            f"unknown contact model {name!r}; known models: {known}"
        ) from None


def friction_continuation(
    model: ContactModel,
    factors=(1.0, 0.3, 0.1, 0.03, 0.01, 1e-3, 1e-4, 1e-5, 1e-6),
    cells: int = 256,
    tol: float = 1e-10,
    inner_tol: float = 1e-10,
):
    """Scale the friction law towards zero and track the distance to the
    frictionless solution.  Returns rows of (factor, state gap, field gap)."""
    if model.friction is None:
        raise ConfigError("continuation needs a model with a friction law")
    base = replace(model, friction=None, name=model.name + "_limit")
    ref = picard_solve(to_problem_spec(base, cells=cells), tol=tol, inner_tol=inner_tol)
    rows = []
    for s in factors:
        s = float(s)
        if s < 0.0:
            raise ConfigError("friction factors must be >= 0")
        member = replace(model, friction=model.friction.scaled(s))
        rep = picard_solve(
            to_problem_spec(member, cells=cells), tol=tol, inner_tol=inner_tol
        )
        rows.append((s, sup_distance(rep.z, ref.z), sup_distance(rep.y, ref.y)))
    return rows


def _tilted_spec(spec: ProblemSpec, rate: float) -> ProblemSpec:
    """Member with the selection tilted by a monotone linear term rate * w."""
    base_j = spec.functional
    value0, theta0, dir0 = base_j.value, base_j.subgradient_selection, base_j.directional
    tilted = NonsmoothFunctional(
        dim=base_j.dim,
        value=lambda t, x: value0(t, x)
        + 0.5 * rate * np.sum(np.square(np.asarray(x, dtype=float)), axis=-1),
        subgradient_selection=lambda t, x: np.asarray(theta0(t, x), dtype=float)
        + rate * np.asarray(x, dtype=float),
        growth=base_j.growth + rate,
        relaxed_monotonicity=base_j.relaxed_monotonicity,
        is_kink=base_j.is_kink,
        directional=None
        if dir0 is None
        else (
            lambda t, x, d: dir0(t, x, d)
            + rate * float(np.sum(np.asarray(x) * np.asarray(d)))
        ),
    )
    return replace(spec, functional=tilted)


def run_contact_perturbation(
    model: ContactModel,
    deltas=(1e-1, 1e-2, 1e-3, 1e-4),
    cells: int = 512,
    relative_rate: float = 0.1,
    tol: float = 1e-10,
    inner_tol: float = 1e-10,
    threads: Optional[int] = None,
) -> StudyResult:
    """Relative perturbation of the contact selection: member delta adds
    ``relative_rate * delta * w``.  The absolute modulus is calibrated from the
    base solution's trace range and checked against the relative bound before
    any member is solved."""
    spec = to_problem_spec(model, cells=cells)
    base_rep = picard_solve(spec, tol=tol, inner_tol=inner_tol)
    traces = np.abs(
        np.concatenate(
            [
                spec.trace.apply(base_rep.y.values).ravel(),
                spec.trace.apply(base_rep.y.right_values).ravel()
                if base_rep.y.right_values.size
                else np.zeros(0),
            ]
        )
    )
    u_sup = float(traces.max())
    # relative bound check on the widened trace range, ahead of member solves
    probe = np.linspace(-(u_sup + 1.0), u_sup + 1.0, 41)
    for d in deltas:
        rate = relative_rate * float(d)
        diff = np.abs(
            _tilted_spec(spec, rate).functional.subgradient_selection(0.0, probe)
            - spec.functional.subgradient_selection(0.0, probe)
        )
        if np.any(diff > rate * np.abs(probe) + 1e-12):
            raise ConstantViolation(
                "tilted selection exceeds its relative modulus",
                lhs=float(diff.max()),
                rhs=rate * (u_sup + 1.0),
            )
    scale = model.trace_constant**2 * model.contact_measure * u_sup
    family = PerturbationFamily(
        base=spec,
        member=lambda d: _tilted_spec(spec, relative_rate * float(d)),
        modulus=lambda d: scale * relative_rate * float(d),
        floor=spec.operator.strong_monotonicity
        - spec.functional.relaxed_monotonicity * spec.trace.operator_norm**2,
        sample_radius=u_sup,
    )
    return run_perturbation_study(
        spec,
        family,
        deltas=deltas,
        tol=tol,
        inner_tol=inner_tol,
        threads=threads,
        base_report=base_rep,
    )
