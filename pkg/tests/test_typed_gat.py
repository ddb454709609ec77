import numpy as np
import pytest

from src.core.exceptions import ConfigurationError
from src.services.gradcheck import make_instance
from src.services.graph import GraphVariant, build_implicit, build_semantic, permute_graph
from src.services.numerics import finite_diff_check
from src.services.oracle import typed_reference
from src.services.param_store import init_typed
from src.services.typed_gat import TypedGatParams, aggregation_edges, typed_backward, typed_forward


@pytest.fixture(params=["spa", "sem"])
def instance(request):
    return make_instance(request.param, seed=11, n=6, d=4, d_g=16)


@pytest.mark.parametrize("direction_mode", ["incoming", "bidirectional"])
@pytest.mark.parametrize("aggregation", ["attention", "uniform"])
def test_matches_reference(instance, direction_mode, aggregation):
    v_star, attention = typed_forward(
        instance.X, instance.graph, instance.params, direction_mode=direction_mode, aggregation=aggregation
    )
    slow_v, slow_w = typed_reference(
        instance.X, instance.graph, instance.params, direction_mode=direction_mode, aggregation=aggregation
    )
    np.testing.assert_allclose(v_star.features, slow_v, atol=1e-12)
    np.testing.assert_allclose(attention.weights, slow_w, atol=1e-12)


def test_rows_are_stochastic(instance):
    _, attention = typed_forward(instance.X, instance.graph, instance.params)
    np.testing.assert_allclose(attention.weights.sum(axis=1), 1.0, atol=1e-12)
    assert not attention.empty_rows().any()


def test_isolated_nodes_attend_to_themselves():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(3, 4))
    p = init_typed(rng, 4, GraphVariant.SEMANTIC)
    v_star, attention = typed_forward(X, build_semantic(3, []), p)
    np.testing.assert_array_equal(attention.weights, np.eye(3))
    np.testing.assert_allclose(v_star.features, X @ p.W_dir["self"].T + p.b_lab["self_loop"], atol=1e-14)


def test_uniform_aggregation_weights(instance):
    _, attention = typed_forward(instance.X, instance.graph, instance.params, aggregation="uniform")
    for i in range(instance.graph.n):
        k = len(instance.graph.in_neighbors(i))
        row = attention.weights[i]
        np.testing.assert_allclose(row[row > 0], 1.0 / k)


def test_bidirectional_adds_outgoing_edges(instance):
    incoming = aggregation_edges(instance.graph, "incoming")
    both = aggregation_edges(instance.graph, "bidirectional")
    assert both.size == incoming.size + len(instance.graph.external_edges())


def test_permutation_equivariance(instance):
    rng = np.random.default_rng(63)
    v_star, attention = typed_forward(instance.X, instance.graph, instance.params)
    for _ in range(100):
        perm = rng.permutation(6).tolist()
        inverse = np.argsort(perm)
        graph_perm = permute_graph(instance.graph, perm)
        v_perm, attention_perm = typed_forward(instance.X[inverse], graph_perm, instance.params)
        np.testing.assert_allclose(v_perm.features, v_star.features[inverse], atol=1e-12)
        np.testing.assert_allclose(attention_perm.weights, attention.weights[np.ix_(inverse, inverse)], atol=1e-12)


@pytest.mark.parametrize("kind", ["spa", "sem"])
def test_rows_are_stochastic_across_sizes(kind):
    sizes = np.random.default_rng(8)
    for seed in range(150):
        n = int(sizes.integers(1, 51))
        d = int(sizes.integers(1, 65))
        instance = make_instance(kind, seed=seed, n=n, d=d, d_g=16)
        for direction_mode in ("incoming", "bidirectional"):
            _, attention = typed_forward(instance.X, instance.graph, instance.params, direction_mode=direction_mode)
            np.testing.assert_allclose(attention.weights.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("direction_mode", ["incoming", "bidirectional"])
def test_backward_matches_finite_differences(instance, direction_mode):
    R = instance.upstream

    def loss(arrays):
        v_star, _ = typed_forward(arrays["V"], instance.graph, TypedGatParams.from_arrays(arrays), direction_mode)
        return float((v_star.features * R).sum())

    arrays = dict(instance.params.to_arrays(), V=instance.X)
    grads = typed_backward(instance.X, instance.graph, instance.params, R, direction_mode=direction_mode)
    assert list(grads) == list(arrays)
    for report in finite_diff_check(loss, arrays, grads):
        assert report.valid
        assert report.max_relative_error < 1e-4, report.parameter_name


def test_uniform_backward_has_no_score_gradient(instance):
    grads = typed_backward(instance.X, instance.graph, instance.params, instance.upstream, aggregation="uniform")
    for name in ("Wv_dir.forward", "Wv_dir.self", "W_K"):
        np.testing.assert_array_equal(grads[name], 0.0)


def test_missing_label_parameters(instance):
    p = instance.params
    trimmed = TypedGatParams(
        W_dir=p.W_dir, Wv_dir=p.Wv_dir, W_K=p.W_K,
        b_lab={k: v for k, v in p.b_lab.items() if k != "self_loop"},
        c_lab={k: v for k, v in p.c_lab.items() if k != "self_loop"},
    )
    with pytest.raises(ConfigurationError, match="self_loop"):
        typed_forward(instance.X, instance.graph, trimmed)


def test_rejects_implicit_graph(instance):
    with pytest.raises(ConfigurationError):
        typed_forward(instance.X, build_implicit(instance.graph.n), instance.params)


def test_unknown_modes(instance):
    with pytest.raises(ConfigurationError):
        typed_forward(instance.X, instance.graph, instance.params, direction_mode="sideways")
    with pytest.raises(ConfigurationError):
        typed_forward(instance.X, instance.graph, instance.params, aggregation="max")
