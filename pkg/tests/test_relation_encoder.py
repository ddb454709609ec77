import json
from dataclasses import replace

import numpy as np
import pytest

from src.core.exceptions import ShapeError, UsageError
from src.services.implicit_gat import ImplicitGatParams
from src.services.param_store import init_parameters
from src.services.relation_encoder import RelationEncoder, encode_documents, top_k_attention
from src.utils.svg_overlay import render_overlay
from tests.conftest import GOLDEN_DIR


def test_spatial_relations_match_golden(sample_inputs):
    document = RelationEncoder().relations(sample_inputs, "spatial")
    golden = json.loads((GOLDEN_DIR / "relations_spatial.json").read_text())
    assert document.model_dump(exclude_none=True) == golden


def test_semantic_relations_need_parameters(sample_inputs):
    with pytest.raises(UsageError):
        RelationEncoder().relations(sample_inputs, "semantic")


def test_semantic_relations_are_stable(sample_inputs, small_params):
    first = RelationEncoder(small_params, threshold=0.0).relations(sample_inputs, "semantic")
    second = RelationEncoder(small_params, threshold=0.0).relations(sample_inputs, "semantic")
    assert first == second
    assert first.threshold == 0.0
    assert all(edge.label_name == f"semantic_{edge.label_id}" for edge in first.edges)
    assert all(0.0 < edge.score <= 1.0 for edge in first.edges)


def test_refined_features_add_context(sample_inputs, small_params):
    encodings = RelationEncoder(small_params, threshold=0.0).encode(sample_inputs, ["imp", "spa", "sem"])
    assert [e.kind for e in encodings] == ["imp", "spa", "sem"]
    for encoding in encodings:
        np.testing.assert_allclose(
            encoding.refined.features, sample_inputs.features.features + encoding.v_star.features
        )
        sums = encoding.attention.weights.sum(axis=1)
        assert all(s == pytest.approx(1.0, abs=1e-12) or s == 0.0 for s in sums)


def test_zero_implicit_projection_returns_input(sample_inputs, small_params):
    p = small_params.implicit
    zeroed = replace(small_params, implicit=ImplicitGatParams(W=np.zeros_like(p.W), W_K=p.W_K, W_Q=p.W_Q, W_bG=p.W_bG))
    (encoding,) = RelationEncoder(zeroed).encode(sample_inputs, ["imp"])
    np.testing.assert_array_equal(encoding.refined.features, sample_inputs.features.features)


def test_feature_dimension_mismatch_names_the_field(sample_inputs):
    params = init_parameters(seed=0, d=4, d_g=8, d_model=8, heads=2)
    with pytest.raises(ShapeError, match=r"regions\[\]\.feature"):
        RelationEncoder(params).encode(sample_inputs, ["spa"])


def test_encode_documents_layout(sample_inputs, small_params):
    encodings = RelationEncoder(small_params).encode(sample_inputs, ["imp", "spa"])
    document = encode_documents(sample_inputs.image_id, encodings)
    assert [g.graph for g in document.features.graphs] == ["imp", "spa"]
    assert document.attention.graphs[0].geometry_gate is not None
    assert document.attention.graphs[1].geometry_gate is None


def test_top_k_sorted_and_clamped(sample_inputs, small_params):
    encoding = RelationEncoder(small_params).encode_graph("imp", sample_inputs)
    document = top_k_attention(sample_inputs, encoding, top_k=10)
    assert document.top_k == 4
    for node in document.nodes:
        weights = [entry.weight for entry in node.top]
        assert weights == sorted(weights, reverse=True)
        assert node.node not in [entry.source for entry in node.top]
        assert node.self_weight is None


def test_top_k_ties_by_source_index(sample_inputs, small_params):
    encoder = RelationEncoder(small_params, aggregation="uniform")
    document = top_k_attention(sample_inputs, encoder.encode_graph("spa", sample_inputs), top_k=3)
    node0 = document.nodes[0]
    assert [entry.source for entry in node0.top] == [1, 2, 3]
    assert node0.self_weight == pytest.approx(0.25)


def test_top_k_must_be_positive(sample_inputs, small_params):
    encoding = RelationEncoder(small_params).encode_graph("imp", sample_inputs)
    with pytest.raises(UsageError):
        top_k_attention(sample_inputs, encoding, top_k=0)


def test_svg_overlay(sample_inputs, small_params):
    encoding = RelationEncoder(small_params).encode_graph("spa", sample_inputs)
    document = top_k_attention(sample_inputs, encoding, top_k=3)
    svg = render_overlay(document, focus=0, width=200, height=100)
    assert svg.startswith("<svg")
    assert svg.count("<rect") == len(document.nodes[0].top) + 1
    with pytest.raises(UsageError):
        render_overlay(document, focus=9, width=200, height=100)
