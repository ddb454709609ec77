import numpy as np
import pytest

from src.core.exceptions import DomainError, EmptyGraphError, InputError
from src.services.geometry import DetectedObject, SpatialLabel, complement_label, image_diagonal
from src.services.gradcheck import random_objects
from src.services.graph import (
    Edge,
    EdgeKind,
    EdgeLabel,
    GraphVariant,
    RelationGraph,
    build_implicit,
    build_semantic,
    build_spatial,
    in_neighbors,
    labels_for_variant,
    permute_graph,
)


def one_hot(class_id, size=16, p=1.0):
    probs = np.full(size, (1.0 - p) / (size - 1))
    probs[class_id] = p
    return probs


def test_implicit_graph_is_complete():
    g = build_implicit(4)
    assert len(g.edges) == 12
    assert all(e.src != e.dst for e in g.edges)
    assert [j for j, _ in g.in_neighbors(2)] == [0, 1, 3]


def test_single_node_graphs():
    assert build_implicit(1).edges == ()
    g = build_spatial([DetectedObject(5.0, 5.0, 2.0, 2.0)], 10.0)
    assert g.external_edges() == []
    assert in_neighbors(g, 0) == [(0, EdgeLabel.self_loop())]


def test_empty_graph_rejected():
    with pytest.raises(EmptyGraphError):
        build_implicit(0)
    with pytest.raises(EmptyGraphError):
        build_spatial([], 10.0)


def test_spatial_graph_has_mirrored_edges(scattered_objects):
    g = build_spatial(scattered_objects, image_diagonal(100.0, 100.0))
    stored = {(e.src, e.dst): e.label for e in g.external_edges()}
    assert stored
    for (src, dst), label in stored.items():
        expected = complement_label(SpatialLabel(label.class_id))
        assert stored[(dst, src)] == EdgeLabel.spatial(expected)


def test_implicit_edge_count():
    for n in range(1, 65):
        g = build_implicit(n)
        assert len(g.edges) == n * (n - 1)
        assert len(set((e.src, e.dst) for e in g.edges)) == n * (n - 1)


def test_spatial_edges_are_mirrored_across_random_scenes():
    rng = np.random.default_rng(44)
    diag = image_diagonal(100.0, 100.0)
    for _ in range(1000):
        g = build_spatial(random_objects(rng, int(rng.integers(2, 9))), diag)
        stored = {(e.src, e.dst): e.label for e in g.external_edges()}
        for (src, dst), label in stored.items():
            assert stored[(dst, src)] == EdgeLabel.spatial(complement_label(SpatialLabel(label.class_id)))


def test_spatial_graph_self_loops(scattered_objects):
    g = build_spatial(scattered_objects, image_diagonal(100.0, 100.0))
    loops = [e for e in g.edges if e.label.kind == EdgeKind.SELF_LOOP]
    assert [e.src for e in loops] == [0, 1, 2, 3]


def test_identical_boxes_give_two_overlap_edges():
    box = DetectedObject(30.0, 30.0, 10.0, 10.0)
    g = build_spatial([box, box], image_diagonal(100.0, 100.0))
    names = [(e.src, e.dst, e.label.name) for e in g.external_edges()]
    assert names == [(0, 1, "overlap"), (1, 0, "overlap")]


def test_edges_are_sorted():
    g = RelationGraph(
        n=2,
        variant=GraphVariant.SEMANTIC,
        edges=(
            Edge(1, 1, EdgeLabel.self_loop()),
            Edge(1, 0, EdgeLabel.semantic(3)),
            Edge(0, 0, EdgeLabel.self_loop()),
        ),
    )
    assert [(e.src, e.dst) for e in g.edges] == [(0, 0), (1, 0), (1, 1)]


def test_graph_validation_errors():
    with pytest.raises(InputError, match="self-loop"):
        RelationGraph(n=2, variant=GraphVariant.SEMANTIC, edges=(Edge(0, 0, EdgeLabel.self_loop()),))
    with pytest.raises(InputError, match="outside"):
        RelationGraph(n=1, variant=GraphVariant.SEMANTIC, edges=(Edge(0, 3, EdgeLabel.semantic(2)),))
    with pytest.raises(InputError, match="mirror"):
        RelationGraph(
            n=2,
            variant=GraphVariant.SPATIAL,
            edges=(
                Edge(0, 0, EdgeLabel.self_loop()),
                Edge(1, 1, EdgeLabel.self_loop()),
                Edge(0, 1, EdgeLabel.spatial(SpatialLabel.ANGLE_0)),
            ),
        )


def test_edge_label_ranges():
    with pytest.raises(DomainError):
        EdgeLabel.semantic(0)
    with pytest.raises(DomainError):
        EdgeLabel(EdgeKind.SPATIAL, 0)
    assert EdgeLabel.semantic(7).name == "semantic_7"


def test_labels_for_variant_sizes():
    assert len(labels_for_variant(GraphVariant.SPATIAL)) == 12
    assert len(labels_for_variant(GraphVariant.SEMANTIC)) == 16
    assert labels_for_variant(GraphVariant.IMPLICIT) == [EdgeLabel.implicit()]


def test_build_semantic_threshold():
    predictions = [(0, 1, one_hot(4, p=0.9)), (1, 0, one_hot(4, p=0.4)), (0, 2, one_hot(0, p=0.95))]
    g = build_semantic(3, predictions, threshold=0.5)
    assert [(e.src, e.dst, e.label.class_id) for e in g.external_edges()] == [(0, 1, 4)]
    assert len(g.edges) == 4


def test_build_semantic_with_no_edges_keeps_self_loops():
    g = build_semantic(3, [])
    assert g.external_edges() == []
    assert all(g.in_neighbors(i) == [(i, EdgeLabel.self_loop())] for i in range(3))


@pytest.mark.parametrize(
    "predictions",
    [
        [(1, 1, one_hot(2))],
        [(0, 1, one_hot(2)), (0, 1, one_hot(3))],
        [(0, 1, np.full(16, 0.1))],
        [(0, 1, np.ones(4) / 4)],
    ],
)
def test_build_semantic_rejects_bad_predictions(predictions):
    with pytest.raises(InputError):
        build_semantic(2, predictions)


def test_permute_graph_relabels_nodes(scattered_objects):
    g = build_spatial(scattered_objects, image_diagonal(100.0, 100.0))
    perm = [2, 0, 3, 1]
    h = permute_graph(g, perm)
    original = {(e.src, e.dst, e.label) for e in g.edges}
    moved = {(e.src, e.dst, e.label) for e in h.edges}
    assert moved == {(perm[s], perm[d], label) for s, d, label in original}
    with pytest.raises(DomainError):
        permute_graph(g, [0, 0, 1, 2])


def test_adjacency_marks_incoming_edges():
    g = build_semantic(2, [(0, 1, one_hot(5))])
    mask = g.adjacency()
    assert mask[1, 0] and not mask[0, 1]
    assert mask[0, 0] and mask[1, 1]


def test_in_neighbors_out_of_range():
    with pytest.raises(IndexError):
        build_implicit(2).in_neighbors(2)
