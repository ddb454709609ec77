import numpy as np
import pytest

from src.core.exceptions import ConfigurationError, InputError
from src.schemas.params import TensorRecord
from src.services.param_store import (
    from_parameter_file,
    init_parameters,
    load_parameters,
    save_parameters,
    to_parameter_file,
)


def arrays_of(params):
    return {record.name: np.array(record.data).reshape(record.shape) for record in to_parameter_file(params).tensors}


def test_same_seed_same_file(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_parameters(init_parameters(seed=3, d=8, d_g=16, d_model=16, heads=4), first)
    save_parameters(init_parameters(seed=3, d=8, d_g=16, d_model=16, heads=4), second)
    assert first.read_bytes() == second.read_bytes()


def test_different_seed_different_values():
    a = arrays_of(init_parameters(seed=1, d=8, d_g=16, d_model=16, heads=4))
    b = arrays_of(init_parameters(seed=2, d=8, d_g=16, d_model=16, heads=4))
    assert not np.array_equal(a["implicit.W"], b["implicit.W"])


def test_round_trip_is_exact(tmp_path, small_params):
    path = tmp_path / "params.json"
    save_parameters(small_params, path)
    loaded = load_parameters(path)
    original, restored = arrays_of(small_params), arrays_of(loaded)
    assert list(original) == list(restored)
    for name in original:
        np.testing.assert_array_equal(original[name], restored[name])
    assert loaded.dims == small_params.dims


def test_biases_are_zero_and_gains_one(small_params):
    arrays = arrays_of(small_params)
    for name, value in arrays.items():
        leaf = name.rsplit(".", 1)[-1]
        if name.startswith(("spatial.b_lab", "semantic.b_lab", "spatial.c_lab", "semantic.c_lab")):
            assert not value.any(), name
        elif leaf.startswith("b_") or leaf.endswith("_bias"):
            assert not value.any(), name
        elif leaf.endswith("_gain"):
            np.testing.assert_array_equal(value, 1.0)


def test_shapes_follow_dims(small_params):
    arrays = arrays_of(small_params)
    assert arrays["implicit.W"].shape == (8, 8)
    assert arrays["implicit.W_bG"].shape == (1, 16)
    assert arrays["spatial.W_dir.backward"].shape == (8, 8)
    assert arrays["spatial.b_lab.angle_315"].shape == (8,)
    assert arrays["spatial.c_lab.overlap"].shape == ()
    assert arrays["semantic.b_lab.semantic_15"].shape == (8,)
    assert arrays["classifier.input_proj"].shape == (8, 16)
    assert arrays["classifier.position"].shape == (3, 16)
    assert arrays["classifier.layer1.W_ff1"].shape == (16, 64)
    assert arrays["classifier.output_proj"].shape == (16, 16)


def test_groups_are_independent_of_selection():
    everything = arrays_of(init_parameters(seed=9, d=4, d_g=8, d_model=8, heads=2))
    implicit_only = init_parameters(seed=9, d=4, d_g=8, d_model=8, heads=2, variants=["imp"])
    assert implicit_only.spatial is None and implicit_only.classifier is None
    np.testing.assert_array_equal(implicit_only.implicit.W, everything["implicit.W"])


def test_absent_group_is_a_configuration_error():
    params = init_parameters(seed=0, d=4, d_g=8, d_model=8, heads=2, variants=["imp"])
    with pytest.raises(ConfigurationError, match="semantic"):
        params.require("semantic")


def test_unknown_variant_rejected():
    with pytest.raises(ConfigurationError):
        init_parameters(seed=0, d=4, d_g=8, variants=["xyz"])


def test_bad_embedding_width_rejected():
    with pytest.raises(ConfigurationError):
        init_parameters(seed=0, d=4, d_g=12, d_model=8, heads=2)


@pytest.mark.parametrize("name", ["d", "d_g", "d_model", "heads"])
def test_zero_dimension_is_not_replaced_by_default(name):
    dims = dict(d=4, d_g=8, d_model=8, heads=2)
    dims[name] = 0
    with pytest.raises(ConfigurationError, match=f"dimension {name}:"):
        init_parameters(seed=0, **dims)


def test_unknown_tensor_name_rejected(small_params):
    document = to_parameter_file(small_params)
    document.tensors.append(TensorRecord(name="decoder.W", shape=[1], data=[0.0]))
    with pytest.raises(ConfigurationError, match="decoder.W"):
        from_parameter_file(document)


def test_corrupt_file_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"format_version": 1,\n  "seed": }')
    with pytest.raises(InputError, match=r"broken.json:2:\d+"):
        load_parameters(path)


def test_size_mismatch_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"format_version": 1, "seed": 0, "dims": {"d": 1, "d_g": 8, "d_model": 4, "heads": 1},'
        ' "tensors": [{"name": "implicit.W", "shape": [2, 2], "data": [1.0]}]}'
    )
    with pytest.raises(InputError):
        load_parameters(path)
