import math

import numpy as np
import pytest

from src.bitstream.stream import (
    HEADER_STRUCT,
    StreamHeader,
    TokenStream,
    bitrate,
    bits_for,
    pack,
    token_rate,
    unpack,
)
from src.exceptions import BitstreamError, TokenRangeError


def _stream(tokens, bits=10, size=1000, sample_rate=44100, hop=512):
    return TokenStream.from_tokens(np.asarray(tokens), sample_rate, hop, size, bits)


def test_header_size():
    assert HEADER_STRUCT.size == 24


def test_empty_stream_is_header_only():
    stream = _stream(np.zeros((0, 8), dtype=np.int64))
    data = pack(stream)
    assert len(data) == HEADER_STRUCT.size
    assert data[:4] == b"SPCT"
    assert unpack(data) == stream


def test_payload_length_four_frames():
    stream = _stream(np.zeros((4, 8), dtype=np.int64))
    assert len(pack(stream)) - HEADER_STRUCT.size == 40


def test_bit_pattern_of_999():
    stream = _stream(np.full((1, 8), 999))
    payload = pack(stream)[HEADER_STRUCT.size:]
    assert len(payload) == 10
    bits = "".join(f"{byte:08b}" for byte in payload)
    assert bits == "1111100111" * 8


def test_header_fields_are_little_endian():
    stream = _stream(np.zeros((3, 8), dtype=np.int64))
    magic, version, sr, hop, codebooks, bits, size, frames = HEADER_STRUCT.unpack_from(pack(stream))
    assert (magic, version, sr, hop, codebooks, bits, size, frames) == (b"SPCT", 1, 44100, 512, 8, 10, 1000, 3)
    assert pack(stream)[5:9] == (44100).to_bytes(4, "little")


@pytest.mark.parametrize(
    "frames, codebooks, bits",
    [(0, 1, 1), (1, 1, 1), (7, 3, 5), (33, 16, 16), (100, 8, 10), (10000, 2, 13), (5, 16, 1)],
)
def test_randomized_round_trip(frames, codebooks, bits):
    rng = np.random.default_rng(frames * 31 + codebooks * 7 + bits)
    size = 2 ** bits
    tokens = rng.integers(0, size, size=(frames, codebooks))
    stream = _stream(tokens, bits=bits, size=size)
    data = pack(stream)
    assert len(data) - HEADER_STRUCT.size == math.ceil(frames * codebooks * bits / 8)
    restored = unpack(data)
    assert restored == stream
    np.testing.assert_array_equal(restored.tokens, tokens)


def test_token_out_of_range_reports_position():
    tokens = np.zeros((3, 8), dtype=np.int64)
    tokens[2, 5] = 1000
    with pytest.raises(TokenRangeError) as excinfo:
        _stream(tokens)
    assert excinfo.value.frame == 2
    assert excinfo.value.codebook == 5
    assert "frame 2, codebook 5" in str(excinfo.value)


def test_unpack_rejects_decoded_tokens_beyond_codebook():
    header = HEADER_STRUCT.pack(b"SPCT", 1, 44100, 512, 1, 10, 1000, 1)
    with pytest.raises(TokenRangeError):
        unpack(header + bytes([0xFF, 0xC0]))


def test_unpack_rejects_bad_magic():
    data = bytearray(pack(_stream(np.zeros((1, 8), dtype=np.int64))))
    data[:4] = b"XXXX"
    with pytest.raises(BitstreamError):
        unpack(bytes(data))


def test_unpack_rejects_unknown_version():
    data = bytearray(pack(_stream(np.zeros((1, 8), dtype=np.int64))))
    data[4] = 9
    with pytest.raises(BitstreamError):
        unpack(bytes(data))


def test_unpack_rejects_truncation_and_trailing_bytes():
    data = pack(_stream(np.ones((4, 8), dtype=np.int64)))
    with pytest.raises(BitstreamError):
        unpack(data[:-1])
    with pytest.raises(BitstreamError):
        unpack(data[:10])
    with pytest.raises(BitstreamError):
        unpack(data + b"\x00")


def test_header_invariants():
    with pytest.raises(BitstreamError):
        StreamHeader(44100, 512, 8, 9, 1000, 1)
    with pytest.raises(BitstreamError):
        StreamHeader(44100, 512, 0, 10, 1000, 1)
    with pytest.raises(BitstreamError):
        StreamHeader(44100, 0, 8, 10, 1000, 1)


def test_shape_must_match_header():
    header = StreamHeader(44100, 512, 8, 10, 1000, 2)
    with pytest.raises(BitstreamError):
        TokenStream(header, np.zeros((3, 8), dtype=np.int64))
    with pytest.raises(BitstreamError):
        TokenStream(header, np.zeros((8, 2), dtype=np.int64))
    with pytest.raises(BitstreamError):
        TokenStream(header, np.zeros(16, dtype=np.int64))


def test_any_empty_array_is_zero_frames():
    header = StreamHeader(44100, 512, 8, 10, 1000, 0)
    for empty in (np.zeros(0), np.zeros((0, 3)), []):
        assert TokenStream(header, empty).tokens.shape == (0, 8)


def test_header_fields_must_fit_u32():
    with pytest.raises(BitstreamError, match="codebook_size"):
        StreamHeader(44100, 512, 1, 32, 2 ** 32, 0)
    with pytest.raises(BitstreamError, match="codebook_size"):
        TokenStream.from_tokens(np.zeros((1, 1), dtype=np.int64), 44100, 512, 2 ** 32)
    with pytest.raises(BitstreamError):
        StreamHeader(2 ** 32, 512, 1, 10, 1000, 0)
    header = StreamHeader(44100, 512, 1, 32, 2 ** 32 - 1, 0)
    assert unpack(pack(TokenStream(header, np.zeros((0, 1))))).header == header


def test_explicit_zero_bits_is_rejected():
    with pytest.raises(BitstreamError, match="bits_per_index"):
        TokenStream.from_tokens(np.zeros((1, 1), dtype=np.int64), 44100, 512, 2, bits_per_index=0)
    assert TokenStream.from_tokens(np.zeros((1, 1), dtype=np.int64), 44100, 512, 2).header.bits_per_index == 1


def test_tokens_are_read_only():
    stream = _stream(np.zeros((2, 8), dtype=np.int64))
    with pytest.raises(ValueError):
        stream.tokens[0, 0] = 1


def test_rates_at_default_configuration():
    header = StreamHeader(44100, 512, 8, 10, 1000, 0)
    assert token_rate(header) == pytest.approx(86.13, abs=0.01)
    assert token_rate(header) == 86.1328125
    assert bitrate(header) == 6890.625
    assert f"{bitrate(header):.1f}" == "6890.6"


def test_one_bit_per_second():
    assert bitrate(StreamHeader(512, 512, 1, 1, 2, 0)) == 1.0


def test_bits_for():
    assert bits_for(1000) == 10
    assert bits_for(1024) == 10
    assert bits_for(1025) == 11
    assert bits_for(2) == 1
    assert bits_for(1) == 1
