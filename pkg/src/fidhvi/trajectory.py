"""Time grids and piecewise-continuous trajectories with jump nodes.

Trajectories are left-continuous: the stored value at an impulse time is the
left limit, and the right limit is kept separately so both one-sided values
survive serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "PiecewiseTrajectory",
    "sup_distance",
    "trajectory_to_csv",
    "trajectory_from_csv",
]

_SNAP = 1e-12


def _node_lookup(nodes: np.ndarray, t: float) -> int:
    idx = int(np.searchsorted(nodes, t))
    scale = max(1.0, abs(float(nodes[-1])))
    for cand in (idx - 1, idx, idx + 1):
        if 0 <= cand < nodes.size and abs(float(nodes[cand]) - t) <= _SNAP * scale:
            return cand
    raise ValueError(f"t={t!r} is not a grid node")


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing nodes on [0, T] with impulse times pinned to nodes."""

    nodes: np.ndarray
    impulse_times: tuple[float, ...] = ()
    impulse_indices: np.ndarray = field(init=False, repr=False)
    subinterval: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        taus = tuple(float(t) for t in self.impulse_times)
        if any(t2 <= t1 for t1, t2 in zip(taus, taus[1:])):
            raise ValueError("impulse times must be strictly increasing")
        horizon = float(nodes[-1])
        if any(not (0.0 < t < horizon) for t in taus):
            raise ValueError("impulse times must lie strictly inside (0, T)")
        idx = np.array([_node_lookup(nodes, t) for t in taus], dtype=int)
        # snap declared impulse times onto their nodes so lookups are exact
        taus = tuple(float(nodes[i]) for i in idx)
        sub = np.searchsorted(np.array(taus), nodes, side="left") if taus else np.zeros(nodes.size, dtype=int)
        # a node equal to tau_j belongs to the closing subinterval (tau_{j-1}, tau_j]
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "impulse_times", taus)
        idx.setflags(write=False)
        object.__setattr__(self, "impulse_indices", idx)
        sub = np.asarray(sub, dtype=int)
        sub.setflags(write=False)
        object.__setattr__(self, "subinterval", sub)

    @classmethod
    def uniform(cls, horizon: float, cells: int, impulse_times=()) -> "TimeGrid":
        """Globally uniform lattice; every impulse time must sit on a lattice point."""
        horizon = float(horizon)
        if horizon <= 0.0 or cells < 2:
            raise ValueError("need horizon > 0 and at least two cells")
        nodes = np.linspace(0.0, horizon, cells + 1)
        h = horizon / cells
        for t in impulse_times:
            k = round(float(t) / h)
            if not (0 < k < cells) or abs(k * h - float(t)) > 1e-9 * max(1.0, horizon):
                raise ValueError(f"impulse time {t!r} does not align with the uniform lattice")
        snapped = tuple(nodes[round(float(t) / h)] for t in impulse_times)
        return cls(nodes, snapped)

    @classmethod
    def per_subinterval(cls, horizon: float, impulse_times, cells) -> "TimeGrid":
        """Uniform refinement of each inter-impulse subinterval.

        ``cells`` is one count used for every subinterval or a sequence with
        one entry per subinterval.
        """
        horizon = float(horizon)
        taus = [float(t) for t in impulse_times]
        bounds = [0.0] + taus + [horizon]
        m = len(bounds) - 1
        counts = [int(cells)] * m if np.isscalar(cells) else [int(c) for c in cells]
        if len(counts) != m:
            raise ValueError(f"expected {m} cell counts, got {len(counts)}")
        if any(c < 1 for c in counts):
            raise ValueError("every subinterval needs at least one cell")
        pieces = [np.array([0.0])]
        for a, b, c in zip(bounds[:-1], bounds[1:], counts):
            pieces.append(np.linspace(a, b, c + 1)[1:])
        return cls(np.concatenate(pieces), tuple(taus))

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    @property
    def is_uniform(self) -> bool:
        widths = np.diff(self.nodes)
        return bool(np.all(np.abs(widths - widths[0]) <= 1e-12 * widths[0]))

    def node_index(self, t: float) -> int:
        return _node_lookup(self.nodes, float(t))

    def subinterval_index(self, t: float) -> int:
        """j such that t lies in (tau_j, tau_{j+1}], with tau equal to its own left limit."""
        return int(self.subinterval[self.node_index(t)])


@dataclass(frozen=True)
class PiecewiseTrajectory:
    """Node values plus explicit right limits at the impulse nodes."""

    grid: TimeGrid
    values: np.ndarray
    right_values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.grid.n_nodes:
            raise ValueError("one value row per grid node required")
        m = len(self.grid.impulse_times)
        rights = np.ascontiguousarray(np.asarray(self.right_values, dtype=float))
        if rights.ndim == 1:
            if vals.shape[1] == 1:
                rights = rights[:, None]
            elif m == 1:
                rights = rights[None, :]
        if rights.size == 0:
            rights = np.zeros((0, vals.shape[1]))
        if rights.shape != (m, vals.shape[1]):
            raise ValueError(f"right limits must have shape ({m}, {vals.shape[1]})")
        vals.setflags(write=False)
        rights.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "right_values", rights)

    @classmethod
    def constant(cls, grid: TimeGrid, vec) -> "PiecewiseTrajectory":
        vec = np.atleast_1d(np.asarray(vec, dtype=float))
        vals = np.tile(vec, (grid.n_nodes, 1))
        rights = np.tile(vec, (len(grid.impulse_times), 1))
        return cls(grid, vals, rights)

    @classmethod
    def from_values_and_jumps(cls, grid: TimeGrid, values, jumps) -> "PiecewiseTrajectory":
        """Rebuild with right limits defined by left value + jump at each impulse."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        jumps = np.asarray(jumps, dtype=float)
        if jumps.ndim == 1 and values.shape[1] == 1:
            jumps = jumps[:, None]
        rights = values[grid.impulse_indices] + jumps
        return cls(grid, values, rights)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def eval_left(self, t: float) -> np.ndarray:
        return self.values[self.grid.node_index(t)]

    def eval_right(self, t: float) -> np.ndarray:
        idx = self.grid.node_index(t)
        hits = np.nonzero(self.grid.impulse_indices == idx)[0]
        if hits.size:
            return self.right_values[int(hits[0])]
        return self.values[idx]

    def jump(self, j: int) -> np.ndarray:
        m = len(self.grid.impulse_times)
        if not 0 <= j < m:
            raise IndexError(f"impulse index {j} out of range for {m} impulses")
        return self.right_values[j] - self.values[self.grid.impulse_indices[j]]

    def jumps(self) -> np.ndarray:
        return self.right_values - self.values[self.grid.impulse_indices]

    def restrict(self, coarse: TimeGrid) -> "PiecewiseTrajectory":
        """Sample onto a grid whose nodes (and impulse times) this grid contains."""
        idx = [self.grid.node_index(t) for t in coarse.nodes]
        vals = self.values[idx]
        rights = np.array([self.eval_right(t) for t in coarse.impulse_times]).reshape(
            len(coarse.impulse_times), self.dim
        )
        return PiecewiseTrajectory(coarse, vals, rights)


def sup_distance(a: PiecewiseTrajectory, b: PiecewiseTrajectory) -> float:
    """Supremum over nodes (both one-sided limits) of the Euclidean distance."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.grid.n_nodes != b.grid.n_nodes or not np.array_equal(a.grid.nodes, b.grid.nodes):
        raise ValueError("trajectories live on different grids")
    if a.grid.impulse_times != b.grid.impulse_times:
        raise ValueError("trajectories have different impulse times")
    d = float(np.max(np.linalg.norm(a.values - b.values, axis=1), initial=0.0))
    if a.right_values.size:
        d = max(d, float(np.max(np.linalg.norm(a.right_values - b.right_values, axis=1))))
    return d


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def trajectory_to_csv(traj: PiecewiseTrajectory, path) -> None:
    """Write header ``t,z_1..z_dim,is_right_limit``; impulse nodes emit a left
    row followed by a right row.  17 significant digits make the round trip
    bit-exact."""
    dim = traj.dim
    header = ",".join(["t"] + [f"z_{i + 1}" for i in range(dim)] + ["is_right_limit"])
    imp_by_node = {int(i): j for j, i in enumerate(traj.grid.impulse_indices)}
    lines = [header]
    for k, t in enumerate(traj.grid.nodes):
        row = [_fmt(t)] + [_fmt(v) for v in traj.values[k]] + ["0"]
        lines.append(",".join(row))
        if k in imp_by_node:
            right = traj.right_values[imp_by_node[k]]
            lines.append(",".join([_fmt(t)] + [_fmt(v) for v in right] + ["1"]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def trajectory_from_csv(path) -> PiecewiseTrajectory:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    header = lines[0].split(",")
    if header[0] != "t" or header[-1] != "is_right_limit":
        raise ValueError("unrecognized trajectory header")
    dim = len(header) - 2
    ts, vals, flags = [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        ts.append(float(parts[0]))
        vals.append([float(p) for p in parts[1 : 1 + dim]])
        flags.append(parts[-1] == "1")
    nodes, left_rows, rights, taus = [], [], [], []
    for t, v, is_right in zip(ts, vals, flags):
        if is_right:
            taus.append(t)
            rights.append(v)
        else:
            nodes.append(t)
            left_rows.append(v)
    grid = TimeGrid(np.array(nodes), tuple(taus))
    rights_arr = np.array(rights, dtype=float).reshape(len(taus), dim)
    return PiecewiseTrajectory(grid, np.array(left_rows, dtype=float), rights_arr)
