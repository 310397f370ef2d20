import io
import struct

import numpy as np
import pytest

from src.codec.serialization import load_model, save_model
from src.exceptions import ModelFormatError


@pytest.mark.parametrize("fixture_name", ["fsq_model", "rvq_model", "none_model"])
def test_round_trip_is_bitwise(request, fixture_name):
    model = request.getfixturevalue(fixture_name)
    data = save_model(model)
    restored = load_model(data)
    assert save_model(restored) == data
    assert restored.variant == model.variant
    assert restored.spec_cfg == model.spec_cfg
    assert restored.mel_cfg == model.mel_cfg
    np.testing.assert_array_equal(restored.projection.matrix, model.projection.matrix)
    np.testing.assert_array_equal(restored.synthesis.bias, model.synthesis.bias)


def test_rvq_codebooks_survive(rvq_model):
    restored = load_model(save_model(rvq_model))
    for a, b in zip(restored.rvq_codebooks.stages, rvq_model.rvq_codebooks.stages):
        np.testing.assert_array_equal(a, b)


def test_fsq_spec_survives(fsq_model):
    restored = load_model(save_model(fsq_model))
    assert restored.fsq_spec == fsq_model.fsq_spec


def test_layout_prefix(fsq_model):
    data = save_model(fsq_model)
    assert data[:4] == b"SCMK"
    assert data[4] == 1
    configs_length = struct.unpack_from("<I", data, 5)[0]
    assert struct.unpack_from("<I", data, 9)[0] == 44100
    assert configs_length == 4 * 4 + 1 + 4 + 3 * 8


def test_sink_receives_the_bytes(none_model):
    sink = io.BytesIO()
    data = save_model(none_model, sink)
    assert sink.getvalue() == data


def test_unknown_version_is_rejected(fsq_model):
    data = bytearray(save_model(fsq_model))
    data[4] = 2
    with pytest.raises(ModelFormatError) as excinfo:
        load_model(bytes(data))
    assert excinfo.value.offset == 4


def test_bad_magic(fsq_model):
    with pytest.raises(ModelFormatError):
        load_model(b"SPCT" + save_model(fsq_model)[4:])


@pytest.mark.parametrize("cut", [3, 5, 20, 200, -1])
def test_truncation_reports_offset(fsq_model, cut):
    data = save_model(fsq_model)
    with pytest.raises(ModelFormatError) as excinfo:
        load_model(data[:cut])
    assert excinfo.value.offset is not None
    assert "offset" in str(excinfo.value)


def test_trailing_bytes_are_rejected(none_model):
    with pytest.raises(ModelFormatError):
        load_model(save_model(none_model) + b"\x00")


def test_unknown_variant_code(none_model):
    data = bytearray(save_model(none_model))
    offset = 5
    for _ in range(3):
        offset += 4 + struct.unpack_from("<I", data, offset)[0]
    data[offset + 4] = 7
    with pytest.raises(ModelFormatError, match="variant"):
        load_model(bytes(data))
