"""Named benchmark configurations with hand-checked constants.

Every preset fixes a complete problem instance: drive, inner operator data,
impulses, and the declared hypothesis constants the estimators and the
contraction certificate consume.  Two presets are deliberately broken so the
refutation paths stay exercised: ``sawtooth_j`` declares a one-sided defect
budget its selection violates, and ``violates_ho`` has a negative coercivity
margin and must be rejected before any solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError
from .inclusion import MonotoneOperator, NonsmoothFunctional, TraceMap
from .solver import Impulse, ProblemSpec
from .trajectory import TimeGrid

__all__ = ["Preset", "PRESETS", "get_preset", "list_presets"]


@dataclass(frozen=True)
class Preset:
    name: str
    summary: str
    expected_valid: bool
    parameters: Mapping[str, float]
    build: Callable[..., ProblemSpec]


def _grid_for(horizon, cells, impulse_times, grid):
    if grid is not None:
        return grid
    return TimeGrid.uniform(horizon, cells, impulse_times)


def _identity_inner(scale: float) -> MonotoneOperator:
    return MonotoneOperator(
        dim=1,
        eval=lambda t, y, _s=scale: _s * y,
        strong_monotonicity=scale,
        lipschitz=scale,
    )


def _quadratic_functional(curvature: float) -> NonsmoothFunctional:
    """J(x) = -0.5 * curvature * |x|^2; the selection is its gradient."""
    c = float(curvature)
    return NonsmoothFunctional(
        dim=1,
        value=lambda t, x, _c=c: -0.5 * _c * np.sum(np.square(x), axis=-1),
        subgradient_selection=lambda t, x, _c=c: -_c * np.asarray(x, dtype=float),
        growth=c,
        relaxed_monotonicity=c,
        is_kink=lambda x: np.zeros(np.shape(np.sum(x, axis=-1)), dtype=bool),
        directional=lambda t, x, d, _c=c: float(-_c * np.sum(np.asarray(x) * np.asarray(d))),
    )


def _triangle_wave(x):
    # distance-to-even-integer profile, 2-periodic, peaks of height 1 at odd x
    x = np.asarray(x, dtype=float)
    return x - 2.0 * np.round(x / 2.0)


def _sawtooth_functional() -> NonsmoothFunctional:
    """Triangle-wave potential whose selection flips sign at every integer.

    The declared one-sided defect budget (0.5) is false: pairs straddling an
    odd integer produce difference quotients that grow without bound, so the
    randomized estimator refutes the declaration.
    """

    def value(t, x):
        return 0.5 * np.sum(np.abs(_triangle_wave(x)), axis=-1)

    def selection(t, x):
        p = _triangle_wave(x)
        return 0.5 * np.where(p >= 0.0, 1.0, -1.0)

    def directional(t, x, d):
        x = np.asarray(x, dtype=float).ravel()
        d = np.asarray(d, dtype=float).ravel()
        p = _triangle_wave(x)
        kink = np.abs(x - np.round(x)) < 1e-12
        per_coord = np.where(kink, 0.5 * np.abs(d), 0.5 * np.sign(p) * d)
        return float(np.sum(per_coord))

    return NonsmoothFunctional(
        dim=1,
        value=value,
        subgradient_selection=selection,
        growth=0.5,
        relaxed_monotonicity=0.5,
        is_kink=lambda x: np.abs(x - np.round(x)) < 1e-12,
        directional=directional,
    )


def _linear_impulses(coeffs, times):
    return tuple(
        Impulse(time=t, map=lambda z, _c=c: _c * z, lipschitz=abs(c))
        for t, c in zip(times, coeffs)
    )


def _build_constant(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    grid = _grid_for(1.0, cells, (), grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: 0.5 * np.ones_like(z),
        f_lipschitz=0.0,
        f_bound=lambda t: 0.5,
        impulses=(),
        operator=_identity_inner(1.0),
        trace=TraceMap.identity(1),
        functional=NonsmoothFunctional.zero(1),
        coupling=lambda t, z: 0.3 * np.ones_like(z),
        coupling_lipschitz=0.0,
    )


def _build_pure_jump(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    times = (0.25, 0.75) if impulse_times is None else tuple(impulse_times)
    coeffs = (0.3, -0.2)[: len(times)]
    grid = _grid_for(1.0, cells, times, grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: np.zeros_like(z),
        f_lipschitz=0.0,
        f_bound=lambda t: 0.0,
        impulses=_linear_impulses(coeffs, times),
        operator=_identity_inner(1.0),
        trace=TraceMap.identity(1),
        functional=NonsmoothFunctional.zero(1),
        coupling=lambda t, z: np.asarray(z, dtype=float),
        coupling_lipschitz=1.0,
    )


def _build_linear_decay(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    times = (0.25, 0.75) if impulse_times is None else tuple(impulse_times)
    coeffs = (0.2, -0.1)[: len(times)]
    grid = _grid_for(1.0, cells, times, grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: -0.1 * (z + y),
        f_lipschitz=0.1,
        f_bound=lambda t: 0.5,
        impulses=_linear_impulses(coeffs, times),
        operator=_identity_inner(2.0),
        trace=TraceMap.identity(1),
        functional=_quadratic_functional(0.5),
        coupling=lambda t, z: np.asarray(z, dtype=float),
        coupling_lipschitz=1.0,
    )


def _build_fractional_decay(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    grid = _grid_for(1.0, cells, (), grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: -np.asarray(z, dtype=float),
        f_lipschitz=1.0,
        f_bound=lambda t: 2.5,
        impulses=(),
        operator=_identity_inner(2.0),
        trace=TraceMap.identity(1),
        functional=NonsmoothFunctional.zero(1),
        coupling=lambda t, z: 0.1 * np.asarray(z, dtype=float),
        coupling_lipschitz=0.1,
    )


def _build_strong_coupling(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    grid = _grid_for(1.0, cells, (), grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: -0.02 * (z + y),
        f_lipschitz=0.02,
        f_bound=lambda t: 0.6,
        impulses=(),
        operator=_identity_inner(1.0),
        trace=TraceMap.identity(1),
        functional=NonsmoothFunctional.zero(1),
        coupling=lambda t, z: 20.0 * np.asarray(z, dtype=float),
        coupling_lipschitz=20.0,
    )


def _build_sawtooth_j(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    grid = _grid_for(1.0, cells, (), grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: -0.1 * (z + y),
        f_lipschitz=0.1,
        f_bound=lambda t: 0.5,
        impulses=(),
        operator=_identity_inner(2.0),
        trace=TraceMap.identity(1),
        functional=_sawtooth_functional(),
        coupling=lambda t, z: np.asarray(z, dtype=float),
        coupling_lipschitz=1.0,
    )


def _build_violates_ho(cells=1024, grid=None, kappa=0.5, impulse_times=None):
    grid = _grid_for(1.0, cells, (), grid)
    return ProblemSpec(
        kappa=kappa,
        grid=grid,
        z0=np.array([1.0]),
        f=lambda t, z, y: -0.1 * (z + y),
        f_lipschitz=0.1,
        f_bound=lambda t: 0.5,
        impulses=(),
        operator=_identity_inner(2.0),
        trace=TraceMap.identity(1),
        functional=_quadratic_functional(3.0),
        coupling=lambda t, z: np.asarray(z, dtype=float),
        coupling_lipschitz=1.0,
    )


PRESETS: dict[str, Preset] = {
    "constant": Preset(
        name="constant",
        summary="constant drive, no impulses; state follows the kernel moment of 1",
        expected_valid=True,
        parameters={"kappa": 0.5, "horizon": 1.0, "m_A": 1.0, "c_J": 0.0, "m_g": 0.0},
        build=_build_constant,
    ),
    "pure_jump": Preset(
        name="pure_jump",
        summary="zero drive with two linear impulses; piecewise-constant state",
        expected_valid=True,
        parameters={"kappa": 0.5, "horizon": 1.0, "d_1": 0.3, "d_2": 0.2, "m_g": 1.0},
        build=_build_pure_jump,
    ),
    "linear_decay": Preset(
        name="linear_decay",
        summary="damped linear drive, quadratic inner potential, two impulses",
        expected_valid=True,
        parameters={
            "kappa": 0.5, "horizon": 1.0, "M1": 0.1, "m_A": 2.0, "L_A": 2.0,
            "c_J": 0.5, "m_J": 0.5, "m_g": 1.0, "d_1": 0.2, "d_2": 0.1,
            "rho": 0.0752252778,
        },
        build=_build_linear_decay,
    ),
    "fractional_decay": Preset(
        name="fractional_decay",
        summary="pure relaxation drive; closed-form decay profile in the kernel order",
        expected_valid=True,
        parameters={"kappa": 0.5, "horizon": 1.0, "M1": 1.0, "m_A": 2.0, "m_g": 0.1},
        build=_build_fractional_decay,
    ),
    "strong_coupling": Preset(
        name="strong_coupling",
        summary="weak drive with a strongly amplified inner coupling, no impulses",
        expected_valid=True,
        parameters={
            "kappa": 0.5, "horizon": 1.0, "M1": 0.02, "m_A": 1.0, "m_g": 20.0,
        },
        build=_build_strong_coupling,
    ),
    "sawtooth_j": Preset(
        name="sawtooth_j",
        summary="triangle-wave potential with an understated one-sided defect budget",
        expected_valid=False,
        parameters={"kappa": 0.5, "horizon": 1.0, "c_J_declared": 0.5},
        build=_build_sawtooth_j,
    ),
    "violates_ho": Preset(
        name="violates_ho",
        summary="inner coercivity margin is negative; must be rejected before solving",
        expected_valid=False,
        parameters={"kappa": 0.5, "horizon": 1.0, "m_A": 2.0, "c_J": 3.0},
        build=_build_violates_ho,
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}") from None


def list_presets():
    return tuple(PRESETS)
