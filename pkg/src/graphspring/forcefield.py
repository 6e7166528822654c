"""Force-field evaluation over a signed graph in O(edges * dims).

Geometry is computed once per undirected edge: the difference vector, its
length and the unit direction.  Each edge then contributes to both endpoints
with opposite directions; the force magnitude toward each endpoint is
evaluated from that endpoint's viewpoint (the feature vector swaps its node
order, so the two magnitudes differ for the neural model).  Gathers and
scatters run as sparse incidence-matrix products, which keeps the whole pass
linear in edges and dimensions with a fixed, reproducible accumulation order.

`force_field_vjp` is the exact reverse-mode counterpart: given the gradient
of a scalar objective with respect to the returned force matrix, it
recomputes the forward intermediates from the same positions and returns the
gradients with respect to positions and the flat parameter vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import rng
from .forces import (ForceParams, SpringParams, force_batch, force_batch_vjp,
                     gain_batch, gain_batch_vjp)
from .graphs import NodeStatics, SignedGraph

TIE_TAG = "tiebreak"


def pair_distance(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Euclidean distance between two embedding vectors."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise ValueError("vectors must have equal length")
    return float(np.sqrt(((x_i - x_j) ** 2).sum()))


def tie_break_unit(k: int, edge_index: int, step: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random unit vector for coincident endpoints."""
    raw = rng.uniform_sym(seed, f"{TIE_TAG}:{step}", edge_index * k + np.arange(k))
    norm = np.sqrt((raw ** 2).sum())
    if norm == 0.0:  # unreachable in practice; uniform draws are never all zero
        raw = np.zeros(k)
        raw[0] = 1.0
        norm = 1.0
    return raw / norm


def edge_force(f_val: float, x_i: np.ndarray, x_j: np.ndarray, eps: float = 1e-9,
               edge_index: int = 0, step: int = 0, seed: int = 0) -> np.ndarray:
    """Force vector f_val * unit(x_j - x_i), with a random unit at distance < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    diff = x_j - x_i
    dist = float(np.sqrt((diff ** 2).sum()))
    if dist < eps:
        unit = tie_break_unit(x_i.shape[0], edge_index, step, seed)
    else:
        unit = diff / dist
    return f_val * unit


@dataclass(frozen=True)
class FieldContext:
    """Sparse incidence operators plus position-independent edge features."""

    n_nodes: int
    n_edges: int
    sign: np.ndarray            # (m,) observed sign per undirected edge
    diff_op: sp.csr_matrix      # (m, n): diff_op @ X = X[v] - X[u]
    diff_op_t: sp.csr_matrix    # (n, m)
    gather_u: sp.csr_matrix     # (m, n): rows of a node matrix at u
    gather_v: sp.csr_matrix
    scatter_u: sp.csr_matrix    # (n, m): transpose of gather_u
    scatter_v: sp.csr_matrix
    static_fwd: np.ndarray      # (m, 6) [deg_u, deg_v, neg_u, neg_v, pos_u, pos_v]
    static_rev: np.ndarray      # (m, 6) node order swapped
    node_features: np.ndarray   # (n, 3) [deg_norm, neg_frac, pos_frac]


def prepare(graph: SignedGraph, statics: NodeStatics,
            raw_degree_features: bool = False) -> FieldContext:
    """Build the reusable evaluation context for a (graph, statics) pair."""
    n, m = graph.n_nodes, graph.n_edges
    u, v = graph.u, graph.v
    edge_idx = np.arange(m)

    ones = np.ones(m)
    diff_op = sp.csr_matrix(
        (np.concatenate([-ones, ones]),
         (np.concatenate([edge_idx, edge_idx]), np.concatenate([u, v]))),
        shape=(m, n))
    gather_u = sp.csr_matrix((ones, (edge_idx, u)), shape=(m, n))
    gather_v = sp.csr_matrix((ones, (edge_idx, v)), shape=(m, n))

    if m > 0 and statics.p80 <= 0:
        raise ValueError("p80 must be positive for a graph with edges")
    deg_norm = np.minimum(1.0, statics.deg / statics.p80) if m else np.zeros(n)
    # the node gain always sees the capped degree; the flag only switches the
    # per-edge feature vector back to literal degrees
    node_features = np.column_stack([deg_norm, statics.neg_frac, statics.pos_frac])
    deg_feat = statics.deg.astype(np.float64) if raw_degree_features else deg_norm
    static_fwd = np.column_stack([
        deg_feat[u], deg_feat[v],
        statics.neg_frac[u], statics.neg_frac[v],
        statics.pos_frac[u], statics.pos_frac[v],
    ])
    static_rev = static_fwd[:, [1, 0, 3, 2, 5, 4]].copy()
    return FieldContext(
        n_nodes=n, n_edges=m, sign=graph.observed_sign.copy(),
        diff_op=diff_op, diff_op_t=diff_op.T.tocsr(),
        gather_u=gather_u, gather_v=gather_v,
        scatter_u=gather_u.T.tocsr(), scatter_v=gather_v.T.tocsr(),
        static_fwd=static_fwd, static_rev=static_rev,
        node_features=node_features)


def _edge_geometry(ctx: FieldContext, X: np.ndarray, eps: float,
                   seed: int, step: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per undirected edge: distance, unit direction (u toward v), coincidence mask.

    Overflow from an already-diverging state is tolerated here; the simulator
    aborts on the resulting non-finite values right after the update.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        diff = ctx.diff_op @ X
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        tied = dist < eps
        unit = np.divide(diff, np.maximum(dist, eps)[:, None], out=diff)
    if tied.any():
        k = X.shape[1]
        for e in np.flatnonzero(tied):
            unit[e] = tie_break_unit(k, int(e), step, seed)
    return dist, unit, tied


def _force_magnitudes(ctx: FieldContext, model: ForceParams, dist: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Force magnitude per edge from each endpoint's viewpoint (f_uv, f_vu)."""
    if isinstance(model, SpringParams):
        f = force_batch(model, ctx.sign, dist[:, None])
        return f, f
    z_fwd = np.column_stack([dist, ctx.static_fwd])
    z_rev = np.column_stack([dist, ctx.static_rev])
    return (force_batch(model, ctx.sign, z_fwd),
            force_batch(model, ctx.sign, z_rev))


def _scaled(op: sp.csr_matrix, per_edge: np.ndarray) -> sp.csr_matrix:
    """The operator with column j (an edge) scaled by per_edge[j]; no copies of
    the index structure, so applying it fuses the scaling into the matmul."""
    return sp.csr_matrix((per_edge[op.indices], op.indices, op.indptr),
                         shape=op.shape)


def _aggregate(ctx: FieldContext, f_fwd: np.ndarray, f_rev: np.ndarray,
               unit: np.ndarray) -> np.ndarray:
    agg = _scaled(ctx.scatter_u, f_fwd) @ unit
    agg -= _scaled(ctx.scatter_v, f_rev) @ unit
    return agg


def force_field(graph_or_ctx: SignedGraph | FieldContext, statics: NodeStatics | None,
                model: ForceParams, X: np.ndarray, eps: float = 1e-9,
                seed: int = 0, step: int = 0) -> np.ndarray:
    """Net force on every node from the spring model at positions X.

    Accepts either (graph, statics) or a prepared FieldContext with
    statics=None.  Runs in O(edges * dims + nodes * dims) with a fixed,
    reproducible accumulation order.
    """
    ctx = graph_or_ctx if isinstance(graph_or_ctx, FieldContext) else \
        prepare(graph_or_ctx, statics)
    if X.shape[0] != ctx.n_nodes:
        raise ValueError(f"X has {X.shape[0]} rows, graph has {ctx.n_nodes} nodes")
    if ctx.n_edges == 0:
        return np.zeros_like(X, dtype=np.float64)
    dist, unit, _ = _edge_geometry(ctx, X, eps, seed, step)
    with np.errstate(over="ignore", invalid="ignore"):
        f_fwd, f_rev = _force_magnitudes(ctx, model, dist)
        agg = _aggregate(ctx, f_fwd, f_rev, unit)
        gain = gain_batch(model, ctx.node_features)
        return gain[:, None] * agg


def force_field_vjp(ctx: FieldContext, model: ForceParams, X: np.ndarray,
                    w: np.ndarray, eps: float = 1e-9, seed: int = 0,
                    step: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (d/dX, d/dparams) of sum(w * force_field(X)) for cotangent w."""
    if ctx.n_edges == 0:
        return np.zeros_like(X, dtype=np.float64), np.zeros(model.flatten().shape[0])
    dist, unit, tied = _edge_geometry(ctx, X, eps, seed, step)
    f_fwd, f_rev = _force_magnitudes(ctx, model, dist)
    agg = _aggregate(ctx, f_fwd, f_rev, unit)
    gain = gain_batch(model, ctx.node_features)

    grad_params = gain_batch_vjp(model, ctx.node_features, (w * agg).sum(axis=1))

    gw = gain[:, None] * w
    a_fwd = ctx.gather_u @ gw          # dL/d(f_fwd * unit) rows
    b_rev = ctx.gather_v @ gw          # minus dL/d(f_rev * unit) rows
    df_fwd = np.einsum("ij,ij->i", a_fwd, unit)
    df_rev = -np.einsum("ij,ij->i", b_rev, unit)

    if isinstance(model, SpringParams):
        g_f, dfdd = force_batch_vjp(model, ctx.sign, dist[:, None], df_fwd + df_rev)
        grad_params += g_f
        ddist = (df_fwd + df_rev) * dfdd
    else:
        z_fwd = np.column_stack([dist, ctx.static_fwd])
        z_rev = np.column_stack([dist, ctx.static_rev])
        g_f, dfdd_fwd = force_batch_vjp(model, ctx.sign, z_fwd, df_fwd)
        grad_params += g_f
        g_f, dfdd_rev = force_batch_vjp(model, ctx.sign, z_rev, df_rev)
        grad_params += g_f
        ddist = df_fwd * dfdd_fwd + df_rev * dfdd_rev

    # through the geometry: unit = diff / dist and dist = |diff|; the unit of a
    # tie-broken edge is a constant, so its geometric gradient is zero
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ddiff = np.multiply(f_fwd[:, None], a_fwd, out=a_fwd)
        ddiff -= np.multiply(f_rev[:, None], b_rev, out=b_rev)
        proj = f_fwd * df_fwd + f_rev * df_rev
        ddiff -= proj[:, None] * unit
        ddiff /= dist[:, None]
        ddiff += ddist[:, None] * unit
    if tied.any():
        ddiff[tied] = 0.0
    dx = ctx.diff_op_t @ ddiff
    return dx, grad_params
