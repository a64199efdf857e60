"""Reproducible coupled Brownian/Poisson path bundles and their coarsenings.

Each path derives two independent counter-based streams from
(global_seed, path_index), one for jump times and one for Brownian
increments, so results never depend on execution order or thread count and
changing the jump intensity never perturbs the Brownian draw sequence.
Coarse-resolution increments are left-to-right sums of fine increments, so
every resolution of a bundle sees exactly the same Brownian path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DEDUP_RTOL, JumpAdaptedMesh, MeshError, build_mesh, sample_jump_times
from .model import ModelParams

__all__ = [
    "PathBundle",
    "path_streams",
    "generate_bundle",
    "coarsen_increments",
    "regular_increments",
]


@dataclass(frozen=True)
class PathBundle:
    """One path's jump times plus Brownian increments on the reference mesh.

    Regeneration from the same (global_seed, path_index) is bit-identical.
    dw_fine[k] is Normal(0, dt_k) on interval k of fine_mesh.
    """

    global_seed: int
    path_index: int
    m_ref: int
    T: float
    jump_times: np.ndarray
    fine_mesh: JumpAdaptedMesh
    dw_fine: np.ndarray


def path_streams(
    global_seed: int, path_index: int
) -> tuple[np.random.Generator, np.random.Generator]:
    """Two disjoint counter-based substreams for one path: (jumps, Brownian)."""
    jump_seq = np.random.SeedSequence(entropy=global_seed, spawn_key=(path_index, 0))
    brownian_seq = np.random.SeedSequence(entropy=global_seed, spawn_key=(path_index, 1))
    return (
        np.random.Generator(np.random.Philox(jump_seq)),
        np.random.Generator(np.random.Philox(brownian_seq)),
    )


def generate_bundle(
    params: ModelParams, m_ref: int, global_seed: int, path_index: int
) -> PathBundle:
    """Sample jump times, build the reference mesh, then sample increments."""
    if m_ref < 1:
        raise ValueError(f"m_ref must be a positive integer, got {m_ref}")
    jump_rng, brownian_rng = path_streams(global_seed, path_index)
    jump_times = sample_jump_times(params.lam, params.T, jump_rng)
    fine_mesh = build_mesh(m_ref, params.T, jump_times)
    dw = brownian_rng.standard_normal(fine_mesh.n_intervals) * np.sqrt(fine_mesh.dt)
    dw.setflags(write=False)
    jump_times.setflags(write=False)
    return PathBundle(
        global_seed=global_seed,
        path_index=path_index,
        m_ref=m_ref,
        T=params.T,
        jump_times=jump_times,
        fine_mesh=fine_mesh,
        dw_fine=dw,
    )


def _match_nodes(fine_nodes: np.ndarray, targets: np.ndarray, T: float) -> np.ndarray:
    """Indices of targets inside fine_nodes, matched within the dedup tolerance."""
    tol = DEDUP_RTOL * T
    idx = np.searchsorted(fine_nodes, targets - tol)
    idx = np.minimum(idx, len(fine_nodes) - 1)
    if np.any(np.abs(fine_nodes[idx] - targets) > tol):
        bad = targets[np.abs(fine_nodes[idx] - targets) > tol][0]
        raise MeshError(f"coarse node {bad} missing from the fine mesh")
    return idx


def coarsen_increments(
    bundle: PathBundle, m_coarse: int
) -> tuple[JumpAdaptedMesh, np.ndarray]:
    """Coarse mesh plus per-interval sums of the fine Brownian increments.

    Each coarse increment is the left-to-right sum of the fine increments its
    interval contains; coarse nodes must be a subset of fine nodes, which
    m_coarse dividing m_ref guarantees.
    """
    if m_coarse < 1:
        raise ValueError(f"m_coarse must be a positive integer, got {m_coarse}")
    if bundle.m_ref % m_coarse != 0:
        raise MeshError(
            f"m_coarse = {m_coarse} does not divide m_ref = {bundle.m_ref}"
        )
    coarse = build_mesh(m_coarse, bundle.T, bundle.jump_times)
    idx = _match_nodes(bundle.fine_mesh.nodes, coarse.nodes, bundle.T)
    fine = bundle.dw_fine.tolist()
    out = np.empty(coarse.n_intervals, dtype=float)
    for j in range(coarse.n_intervals):
        out[j] = sum(fine[idx[j]:idx[j + 1]], 0.0)
    out.setflags(write=False)
    return coarse, out


def regular_increments(bundle: PathBundle, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Brownian sums and jump counts on the uniform M-step grid.

    Interval k gets the left-to-right sum of fine increments over
    (k*T/M, (k+1)*T/M] and the number of jump times in that half-open
    interval; used by regular-grid schemes on the same coupled bundle.
    """
    if M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if bundle.m_ref % M != 0:
        raise MeshError(f"M = {M} does not divide m_ref = {bundle.m_ref}")
    T = bundle.T
    bounds = np.arange(M + 1, dtype=float) * (T / M)
    bounds[-1] = T
    idx = _match_nodes(bundle.fine_mesh.nodes, bounds, T)
    fine = bundle.dw_fine.tolist()
    dw = np.empty(M, dtype=float)
    for k in range(M):
        dw[k] = sum(fine[idx[k]:idx[k + 1]], 0.0)
    counts = np.diff(np.searchsorted(bundle.jump_times, bounds, side="right"))
    return dw, counts.astype(np.int64)
