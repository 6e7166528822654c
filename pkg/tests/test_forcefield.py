import numpy as np
import pytest

from graphspring import SignedGraph, compute_node_statics
from graphspring.forcefield import (edge_force, force_field, force_field_vjp,
                                    pair_distance, prepare, tie_break_unit)
from graphspring.forces import (SpringParams, neural_force, neural_gain,
                                spring_force, spring_gain)

from conftest import hidden_toy
from test_forces import random_neural


def brute_force_field(graph, statics, params, X):
    """Naive per-edge loop over the definition, independent of the vectorized path."""
    n, k = X.shape
    agg = np.zeros((n, k))
    deg_norm = np.minimum(1.0, statics.deg / statics.p80)

    def features(a, b, dist):
        return np.array([dist, deg_norm[a], deg_norm[b],
                         statics.neg_frac[a], statics.neg_frac[b],
                         statics.pos_frac[a], statics.pos_frac[b]])

    for u, v, sign in zip(graph.u, graph.v, graph.observed_sign):
        u, v, sign = int(u), int(v), int(sign)
        dist = pair_distance(X[u], X[v])
        direction = (X[v] - X[u]) / dist
        if isinstance(params, SpringParams):
            f_uv = f_vu = spring_force(params, sign, dist)
        else:
            f_uv = neural_force(params, sign, features(u, v, dist))
            f_vu = neural_force(params, sign, features(v, u, dist))
        agg[u] += f_uv * direction
        agg[v] += f_vu * -direction

    out = np.zeros_like(agg)
    for i in range(n):
        if isinstance(params, SpringParams):
            gain = spring_gain(params, statics.deg[i], statics.p80) \
                if graph.n_edges else 1.0
        else:
            gain = neural_gain(params, np.array([deg_norm[i], statics.neg_frac[i],
                                                 statics.pos_frac[i]]))
        out[i] = gain * agg[i]
    return out


# --- pair_distance and edge_force ----------------------------------------------

def test_pair_distance_345():
    assert pair_distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0


def test_pair_distance_identity():
    x = np.array([1.0, -2.0, 0.5])
    assert pair_distance(x, x) == 0.0


def test_pair_distance_matches_compensated_sum():
    import math
    rand = np.random.default_rng(8)
    for _ in range(20):
        a, b = rand.normal(0, 3, (2, 8))
        acc = 0.0
        comp = 0.0
        for ai, bi in zip(a, b):  # Kahan summation of squared differences
            term = (ai - bi) ** 2
            y = term - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        assert pair_distance(a, b) == pytest.approx(math.sqrt(acc), rel=1e-12)


def test_edge_force_zero_scalar():
    out = edge_force(0.0, np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert np.array_equal(out, np.zeros(2))


def test_edge_force_unit_scaling():
    out = edge_force(2.0, np.array([0.0, 0.0]), np.array([3.0, 4.0]))
    assert np.allclose(out, [1.2, 1.6])


def test_edge_force_coincident_tie_break():
    x = np.array([0.5, 0.5, 0.5])
    a = edge_force(3.0, x, x, edge_index=4, step=2, seed=9)
    b = edge_force(3.0, x, x, edge_index=4, step=2, seed=9)
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(3.0, rel=1e-12)
    c = edge_force(3.0, x, x, edge_index=5, step=2, seed=9)
    assert not np.array_equal(a, c)


def test_edge_force_requires_positive_eps():
    with pytest.raises(ValueError):
        edge_force(1.0, np.zeros(2), np.ones(2), eps=0.0)


# --- force field forward --------------------------------------------------------

def test_zero_edges_gives_zero_forces():
    g = SignedGraph(4, np.zeros(0, np.int64), np.zeros(0, np.int64),
                    np.zeros(0, np.int8), np.zeros(0, np.int8))
    st = compute_node_statics(g)
    X = np.random.default_rng(0).normal(0, 1, (4, 3))
    assert np.array_equal(force_field(g, st, SpringParams(), X), np.zeros((4, 3)))


def test_two_body_newton_pair():
    g = SignedGraph(2, np.array([0]), np.array([1]),
                    np.array([1], np.int8), np.array([0], np.int8))
    st = compute_node_statics(g)
    X = np.array([[0.0, 0.0], [3.0, 0.0]])
    F = force_field(g, st, SpringParams(beta=0.0), X)
    assert np.allclose(F[0], -F[1], atol=1e-15)
    # stretched neutral spring attracts: dist 3 > l_neu 2 -> force 1 toward the peer
    assert F[0][0] == pytest.approx(1.0)


def test_path_graph_matches_brute_force_spring():
    g = SignedGraph(4, np.array([0, 1, 2]), np.array([1, 2, 3]),
                    np.array([1, -1, 1], np.int8), np.array([1, 0, 1], np.int8))
    st = compute_node_statics(g)
    rand = np.random.default_rng(5)
    X = rand.normal(0, 2, (4, 3))
    params = SpringParams(1.3, 2.1, 2.9, 0.8, 1.2, 0.6, 0.4)
    got = force_field(g, st, params, X)
    want = brute_force_field(g, st, params, X)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("kind", ["spring", "spring-nn"])
def test_random_instances_match_brute_force(kind):
    rand = np.random.default_rng(17)
    for seed in range(6):
        graph, _ = hidden_toy(seed=seed)
        st = compute_node_statics(graph)
        X = rand.normal(0, 1.5, (graph.n_nodes, 4))
        if kind == "spring":
            params = SpringParams(*rand.uniform(0.2, 3.0, 6), rand.uniform(-1, 1))
        else:
            params = random_neural(rand)
        got = force_field(graph, st, params, X)
        want = brute_force_field(graph, st, params, X)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-13)


def test_dimension_mismatch_rejected():
    graph, _ = hidden_toy()
    st = compute_node_statics(graph)
    with pytest.raises(ValueError):
        force_field(graph, st, SpringParams(), np.zeros((graph.n_nodes + 1, 3)))


def test_coincident_nodes_no_nan_and_deterministic():
    g = SignedGraph(2, np.array([0]), np.array([1]),
                    np.array([-1], np.int8), np.array([-1], np.int8))
    st = compute_node_statics(g)
    X = np.zeros((2, 3))
    F1 = force_field(g, st, SpringParams(), X, seed=3, step=7)
    F2 = force_field(g, st, SpringParams(), X, seed=3, step=7)
    assert np.isfinite(F1).all()
    assert np.array_equal(F1, F2)
    # repelling tie-broken pair moves apart: antisymmetric directions
    assert np.allclose(F1[0], -F1[1])
    assert np.linalg.norm(F1[0]) > 0
    F3 = force_field(g, st, SpringParams(), X, seed=3, step=8)
    assert not np.array_equal(F1, F3)


def test_tie_break_unit_is_unit():
    for e in range(5):
        r = tie_break_unit(6, e, step=3, seed=1)
        assert np.linalg.norm(r) == pytest.approx(1.0, rel=1e-12)


def test_raw_degree_flag_only_touches_edge_features():
    graph, _ = hidden_toy(seed=1)
    st = compute_node_statics(graph)
    X = np.random.default_rng(0).normal(0, 1, (graph.n_nodes, 3))
    capped = prepare(graph, st, raw_degree_features=False)
    raw = prepare(graph, st, raw_degree_features=True)
    # the spring model reads no edge features, so its output cannot change
    p = SpringParams(beta=0.7)
    assert np.array_equal(force_field(capped, None, p, X),
                          force_field(raw, None, p, X))
    # the neural model reads them, so it sees the literal degrees
    rand = np.random.default_rng(1)
    q = random_neural(rand)
    assert not np.array_equal(force_field(capped, None, q, X),
                              force_field(raw, None, q, X))
    assert raw.static_fwd[:, 0].max() > 1.0
    assert capped.static_fwd[:, 0].max() <= 1.0


# --- invariances -----------------------------------------------------------------

def test_translation_invariance():
    graph, _ = hidden_toy(seed=2)
    st = compute_node_statics(graph)
    rand = np.random.default_rng(2)
    X = rand.normal(0, 1, (graph.n_nodes, 5))
    params = random_neural(rand)
    shift = rand.uniform(-5, 5, 5)
    F0 = force_field(graph, st, params, X)
    F1 = force_field(graph, st, params, X + shift)
    assert np.abs(F0 - F1).max() < 1e-9


def test_rotation_equivariance():
    graph, _ = hidden_toy(seed=3)
    st = compute_node_statics(graph)
    rand = np.random.default_rng(3)
    X = rand.normal(0, 1, (graph.n_nodes, 4))
    q, _ = np.linalg.qr(rand.normal(0, 1, (4, 4)))
    params = SpringParams(1.0, 2.0, 3.0, 1.1, 0.9, 1.3, 0.5)
    F_rot = force_field(graph, st, params, X @ q.T)
    F_ref = force_field(graph, st, params, X) @ q.T
    assert np.abs(F_rot - F_ref).max() < 1e-9


def test_spring_momentum_conserved_with_zero_beta():
    graph, _ = hidden_toy(seed=4)
    st = compute_node_statics(graph)
    rand = np.random.default_rng(4)
    X = rand.normal(0, 1, (graph.n_nodes, 6))
    F = force_field(graph, st, SpringParams(beta=0.0), X)
    assert np.abs(F.sum(axis=0)).max() < 1e-9


# --- backward pass -----------------------------------------------------------------

@pytest.mark.parametrize("kind", ["spring", "spring-nn"])
def test_vjp_matches_finite_differences(kind):
    rand = np.random.default_rng(23)
    graph, _ = hidden_toy(seed=6)
    st = compute_node_statics(graph)
    ctx = prepare(graph, st)
    X = rand.normal(0, 1.2, (graph.n_nodes, 3))
    params = SpringParams(1.2, 2.0, 3.1, 0.9, 1.1, 0.8, 0.3) if kind == "spring" \
        else random_neural(rand)
    w = rand.normal(0, 1, X.shape)

    def objective(X_, params_):
        return float((w * force_field(ctx, None, params_, X_)).sum())

    dX, dtheta = force_field_vjp(ctx, params, X, w)
    h = 1e-6
    # positions
    for _ in range(12):
        i = rand.integers(0, X.shape[0])
        j = rand.integers(0, X.shape[1])
        Xp, Xm = X.copy(), X.copy()
        Xp[i, j] += h
        Xm[i, j] -= h
        fd = (objective(Xp, params) - objective(Xm, params)) / (2 * h)
        assert abs(fd - dX[i, j]) <= max(1e-7, 1e-5 * abs(fd))
    # parameters
    flat = params.flatten()
    idxs = range(flat.size) if flat.size == 7 else \
        rand.choice(flat.size, 20, replace=False)
    for i in idxs:
        fp, fm = flat.copy(), flat.copy()
        fp[i] += h
        fm[i] -= h
        fd = (objective(X, type(params).from_flat(fp))
              - objective(X, type(params).from_flat(fm))) / (2 * h)
        assert abs(fd - dtheta[i]) <= max(1e-7, 1e-5 * abs(fd))
