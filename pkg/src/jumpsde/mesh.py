"""Jump-adapted time discretization: deterministic grid merged with jump times.

Each realized Poisson jump time is inserted into the uniform grid so that no
step interior contains a jump; the maximum step size never exceeds the base
step T/M. Meshes are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["JumpAdaptedMesh", "MeshError", "DEDUP_RTOL", "sample_jump_times", "build_mesh"]

# Two time points within DEDUP_RTOL * T are merged into one node (grid value
# wins); shorter intervals would ruin the implicit solve's conditioning.
DEDUP_RTOL = 1e-12


class MeshError(ValueError):
    """Inconsistent mesh construction or node matching."""


@dataclass(frozen=True)
class JumpAdaptedMesh:
    """Sorted nodes on [0, T] with per-node jump flags and per-interval steps.

    nodes[0] = 0 and nodes[-1] = T; every multiple of base_dt appears among
    the nodes (up to the dedup tolerance); every step is at most base_dt.
    """

    nodes: np.ndarray
    is_jump: np.ndarray
    dt: np.ndarray
    base_dt: float

    @property
    def n_intervals(self) -> int:
        return len(self.nodes) - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])


def sample_jump_times(lam: float, T: float, rng: np.random.Generator) -> np.ndarray:
    """Jump epochs of a Poisson process on (0, T).

    Cumulative sums of i.i.d. exponential interarrival times with mean 1/lam,
    truncated at T; empty for lam = 0.
    """
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if not T > 0.0:
        raise ValueError(f"T must be strictly positive, got {T}")
    if lam == 0.0:
        return np.empty(0, dtype=float)
    scale = 1.0 / lam
    times = []
    t = rng.exponential(scale)
    while t < T:
        times.append(t)
        t += rng.exponential(scale)
    return np.asarray(times, dtype=float)


def build_mesh(M: int, T: float, jump_times) -> JumpAdaptedMesh:
    """Merge the uniform M-step grid on [0, T] with sorted jump times.

    Jump times within the dedup tolerance of a grid node are merged onto the
    grid node and flag it; mutually colliding jump times collapse to one
    node. Jump times at or beyond the domain ends (outside (0, T), up to
    tolerance at T) raise MeshError.
    """
    if M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if not T > 0.0:
        raise ValueError(f"T must be strictly positive, got {T}")
    base_dt = T / M
    tol = DEDUP_RTOL * T
    grid = np.arange(M + 1, dtype=float) * base_dt
    grid[-1] = T

    jt = np.asarray(jump_times, dtype=float)
    if jt.size:
        if np.any(np.diff(jt) < 0.0):
            raise MeshError("jump times must be sorted")
        if jt[0] <= tol or jt[-1] >= T + tol:
            raise MeshError(
                f"jump time outside (0, T): first={jt[0] if jt.size else None}, "
                f"last={jt[-1] if jt.size else None}, T={T}"
            )
        # collapse jump times colliding with each other
        keep = np.empty(jt.size, dtype=bool)
        keep[0] = True
        keep[1:] = np.diff(jt) > tol
        jt = jt[keep]

    if jt.size == 0:
        nodes = grid
        flags = np.zeros(M + 1, dtype=bool)
    else:
        nearest = np.clip(np.rint(jt / base_dt).astype(int), 0, M)
        collides = np.abs(jt - grid[nearest]) <= tol
        inserted = jt[~collides]
        nodes = np.insert(grid, np.searchsorted(grid, inserted), inserted)
        flags = np.zeros(nodes.size, dtype=bool)
        if inserted.size:
            flags[np.searchsorted(nodes, inserted)] = True
        if np.any(collides):
            flags[np.searchsorted(nodes, grid[nearest[collides]])] = True

    dt = np.diff(nodes)
    nodes.setflags(write=False)
    flags.setflags(write=False)
    dt.setflags(write=False)
    return JumpAdaptedMesh(nodes=nodes, is_jump=flags, dt=dt, base_dt=base_dt)
