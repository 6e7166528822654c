"""Damped explicit-Euler time integration of the spring system.

One step reads the whole state at time t: positions advance with the old
velocities, then velocities are damped and accelerated by the force field
evaluated at the old positions.  An optional semi-implicit mode advances
positions with the freshly updated velocities instead, the usual stability
fix for stiff springs; the default matches the plain explicit ordering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import rng
from .forces import ForceParams
from .forcefield import FieldContext, force_field, prepare
from .graphs import NodeStatics, SignedGraph

INIT_TAG = "init"


class SimulationDivergedError(RuntimeError):
    """State became non-finite; carries the step at which it happened."""

    def __init__(self, step: int, what: str = "state"):
        super().__init__(f"simulation diverged at step {step}: non-finite {what}")
        self.step = step


@dataclass(frozen=True)
class SimConfig:
    k: int = 64
    dt: float = 0.005
    damping: float = 0.05
    n_steps: int = 120
    seed: int = 0
    eps: float = 1e-9
    semi_implicit: bool = False
    float32: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must be in [0, 1)")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class SimState:
    X: np.ndarray
    V: np.ndarray
    t_step: int = 0

    def __post_init__(self):
        if self.X.shape != self.V.shape:
            raise ValueError("X and V must have the same shape")


def init_state(n_nodes: int, config: SimConfig) -> SimState:
    """Positions i.i.d. uniform on (-1, 1) from the documented stream, V = 0."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be at least 1")
    idx = np.arange(n_nodes * config.k)
    X = rng.uniform_sym(config.seed, INIT_TAG, idx).reshape(n_nodes, config.k)
    dtype = np.float32 if config.float32 else np.float64
    return SimState(X.astype(dtype), np.zeros((n_nodes, config.k), dtype=dtype), 0)


def _advance(X: np.ndarray, V: np.ndarray, F: np.ndarray,
             config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    if config.semi_implicit:
        V1 = (1.0 - config.damping) * V + config.dt * F
        X1 = X + config.dt * V1
    else:
        X1 = X + config.dt * V
        V1 = (1.0 - config.damping) * V + config.dt * F
    return X1, V1


def _step_ctx(state: SimState, ctx: FieldContext, model: ForceParams,
              config: SimConfig) -> SimState:
    F = force_field(ctx, None, model, state.X, eps=config.eps,
                    seed=config.seed, step=state.t_step)
    if state.X.dtype == np.float32:
        F = F.astype(np.float32)
    with np.errstate(over="ignore", invalid="ignore"):
        X1, V1 = _advance(state.X, state.V, F, config)
    if not (np.isfinite(X1).all() and np.isfinite(V1).all()):
        raise SimulationDivergedError(state.t_step + 1)
    return SimState(X1, V1, state.t_step + 1)


def step(state: SimState, graph: SignedGraph, statics: NodeStatics,
         model: ForceParams, config: SimConfig, ctx: FieldContext | None = None) -> SimState:
    """Advance the state by one time step."""
    if ctx is None:
        ctx = prepare(graph, statics)
    return _step_ctx(state, ctx, model, config)


def simulate(state: SimState, graph: SignedGraph, statics: NodeStatics,
             model: ForceParams, config: SimConfig, ctx: FieldContext | None = None,
             on_step=None) -> SimState:
    """Apply `config.n_steps` steps; `on_step(state)` is called after each."""
    if ctx is None:
        ctx = prepare(graph, statics)
    for _ in range(config.n_steps):
        state = _step_ctx(state, ctx, model, config)
        if on_step is not None:
            on_step(state)
    return state


def embeddings(state: SimState) -> np.ndarray:
    """Final node positions, used as the embedding matrix."""
    return state.X


def mean_abs_velocity(state: SimState) -> float:
    return float(np.abs(state.V).mean())


# --- embedding files ------------------------------------------------------------

_MAGIC = b"SGEMB001"


def write_embeddings_text(path, X: np.ndarray) -> None:
    """Header "N k" then one row of %.17g floats per node (exact round-trip)."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{X.shape[0]} {X.shape[1]}\n")
        for row in X:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_embeddings_text(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        n, k = (int(tok) for tok in fh.readline().split())
        X = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if X.shape != (n, k):
        raise ValueError(f"embedding file header says {(n, k)}, data is {X.shape}")
    return X


def write_embeddings_binary(path, X: np.ndarray) -> None:
    """Magic, version, N, k (little-endian u32/u64), then row-major float64."""
    X = np.ascontiguousarray(X, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", 1, X.shape[0], X.shape[1]))
        fh.write(X.tobytes())


def read_embeddings_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not an embedding file (bad magic)")
        version, n, k = struct.unpack("<IQQ", fh.read(20))
        if version != 1:
            raise ValueError(f"unsupported embedding file version {version}")
        data = np.frombuffer(fh.read(8 * n * k), dtype="<f8")
    return data.reshape(n, k).astype(np.float64)

