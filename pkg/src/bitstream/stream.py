"""
Token stream container and its ``.spct`` wire format.

Layout (little-endian header, then a bit-packed payload)::

    magic "SPCT" | version u8 | sample_rate u32 | hop_length u32 |
    num_codebooks u16 | bits_per_index u8 | codebook_size u32 | num_frames u32 |
    payload

The payload holds tokens frame-major, codebook-ascending, each as a
``bits_per_index`` wide big-endian field; fields are bit-contiguous and the
final byte is zero-padded.
"""
import logging
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.exceptions import BitstreamError, TokenRangeError

logger = logging.getLogger(__name__)

MAGIC = b"SPCT"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (FORMAT_VERSION,)
HEADER_STRUCT = struct.Struct("<4sBIIHBII")
MAX_BITS = 32
MAX_U32 = 0xFFFFFFFF


def bits_for(codebook_size: int) -> int:
    """Smallest field width that can hold every index of a codebook."""
    return max(1, math.ceil(math.log2(codebook_size))) if codebook_size > 1 else 1


@dataclass(frozen=True)
class StreamHeader:
    """
    Metadata needed to interpret a token payload.

    Attributes:
        sample_rate: Audio sample rate in Hz
        hop_length: Samples between frames
        num_codebooks: Tokens per frame
        bits_per_index: Width of each packed token
        codebook_size: Exclusive upper bound for tokens
        num_frames: Number of frames in the payload
        version: Wire format version
    """
    sample_rate: int
    hop_length: int
    num_codebooks: int
    bits_per_index: int
    codebook_size: int
    num_frames: int
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if not (1 <= self.sample_rate <= MAX_U32 and 1 <= self.hop_length <= MAX_U32):
            raise BitstreamError(
                f"sample_rate and hop_length must be in [1, {MAX_U32}], got {self.sample_rate} and {self.hop_length}"
            )
        if not 1 <= self.num_codebooks <= 0xFFFF:
            raise BitstreamError(f"num_codebooks must be in [1, 65535], got {self.num_codebooks}")
        if not 1 <= self.bits_per_index <= MAX_BITS:
            raise BitstreamError(f"bits_per_index must be in [1, {MAX_BITS}], got {self.bits_per_index}")
        if not 1 <= self.codebook_size <= MAX_U32:
            raise BitstreamError(f"codebook_size must be in [1, {MAX_U32}], got {self.codebook_size}")
        if self.codebook_size > 2 ** self.bits_per_index:
            raise BitstreamError(
                f"codebook_size {self.codebook_size} does not fit {self.bits_per_index}-bit fields"
            )
        if not 0 <= self.num_frames <= MAX_U32:
            raise BitstreamError(f"num_frames must be in [0, {MAX_U32}], got {self.num_frames}")
        if self.version not in SUPPORTED_VERSIONS:
            raise BitstreamError(f"unsupported stream version {self.version}")

    @property
    def payload_bits(self) -> int:
        return self.num_frames * self.num_codebooks * self.bits_per_index

    @property
    def payload_bytes(self) -> int:
        return (self.payload_bits + 7) // 8


def _check_tokens(tokens: np.ndarray, codebook_size: int) -> None:
    bad = np.argwhere((tokens < 0) | (tokens >= codebook_size))
    if bad.size:
        frame, codebook = (int(x) for x in bad[0])
        raise TokenRangeError(frame, codebook, int(tokens[frame, codebook]), codebook_size)


class TokenStream:
    """
    Per-frame codebook indices plus their header.

    Args:
        header: Stream metadata
        tokens: Integer matrix [num_frames x num_codebooks], every token < codebook_size

    Raises:
        BitstreamError: If the matrix shape disagrees with the header
        TokenRangeError: If a token does not fit its codebook
    """
    def __init__(self, header: StreamHeader, tokens: np.ndarray):
        tokens = np.array(tokens, dtype=np.int64)
        expected = (header.num_frames, header.num_codebooks)
        # any empty array stands for zero frames
        mismatched = tokens.size != header.num_frames * header.num_codebooks
        if mismatched or (tokens.size and tokens.shape != expected):
            raise BitstreamError(f"tokens have shape {tokens.shape}, header expects {expected}")
        tokens = tokens.reshape(expected)
        _check_tokens(tokens, header.codebook_size)
        tokens.setflags(write=False)
        self.header = header
        self.tokens = tokens

    @classmethod
    def from_tokens(
        cls,
        tokens: np.ndarray,
        sample_rate: int,
        hop_length: int,
        codebook_size: int,
        bits_per_index: Optional[int] = None,
    ) -> "TokenStream":
        """
        Build a stream, deriving the header from the token matrix.

        Args:
            tokens: Integer matrix [frames x codebooks]
            sample_rate: Audio sample rate in Hz
            hop_length: Samples between frames
            codebook_size: Exclusive token bound
            bits_per_index: Field width; defaults to the smallest that fits

        Returns:
            TokenStream: The stream
        """
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim != 2:
            raise BitstreamError(f"tokens must be a 2-D matrix, got shape {tokens.shape}")
        header = StreamHeader(
            sample_rate=sample_rate,
            hop_length=hop_length,
            num_codebooks=tokens.shape[1],
            bits_per_index=bits_for(codebook_size) if bits_per_index is None else bits_per_index,
            codebook_size=codebook_size,
            num_frames=tokens.shape[0],
        )
        return cls(header, tokens)

    @property
    def num_frames(self) -> int:
        return self.header.num_frames

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TokenStream):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.tokens, other.tokens)

    def __repr__(self) -> str:
        return f"TokenStream({self.header!r})"


def pack(stream: TokenStream) -> bytes:
    """
    Serialize a stream to bytes.

    Args:
        stream: Token stream

    Returns:
        bytes: Header followed by ceil(frames * codebooks * bits / 8) payload bytes

    Raises:
        TokenRangeError: If a token does not fit its codebook
    """
    header = stream.header
    _check_tokens(stream.tokens, header.codebook_size)
    head = HEADER_STRUCT.pack(
        MAGIC,
        header.version,
        header.sample_rate,
        header.hop_length,
        header.num_codebooks,
        header.bits_per_index,
        header.codebook_size,
        header.num_frames,
    )
    if header.payload_bits == 0:
        return head
    shifts = np.arange(header.bits_per_index - 1, -1, -1, dtype=np.int64)
    bits = ((stream.tokens.reshape(-1, 1) >> shifts) & 1).astype(np.uint8)
    return head + np.packbits(bits.reshape(-1)).tobytes()


def unpack(data: bytes) -> TokenStream:
    """
    Parse bytes produced by ``pack``.

    Args:
        data: Serialized stream

    Returns:
        TokenStream: Stream equal to the one packed

    Raises:
        BitstreamError: On bad magic, unsupported version, truncation or trailing bytes
        TokenRangeError: If a decoded token does not fit its codebook
    """
    if len(data) < HEADER_STRUCT.size:
        raise BitstreamError(f"stream too short for header: {len(data)} < {HEADER_STRUCT.size} bytes")
    magic, version, sample_rate, hop, codebooks, bits, size, frames = HEADER_STRUCT.unpack_from(data)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version not in SUPPORTED_VERSIONS:
        raise BitstreamError(f"unsupported stream version {version}")
    header = StreamHeader(sample_rate, hop, codebooks, bits, size, frames, version)

    payload = data[HEADER_STRUCT.size:]
    if len(payload) < header.payload_bytes:
        raise BitstreamError(
            f"truncated payload: {len(payload) * 8} bits available, {header.payload_bits} required"
        )
    if len(payload) > header.payload_bytes:
        raise BitstreamError(f"{len(payload) - header.payload_bytes} unexpected bytes after payload")
    if header.payload_bits == 0:
        return TokenStream(header, np.zeros((frames, codebooks), dtype=np.int64))

    raw = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:header.payload_bits]
    weights = np.left_shift(np.int64(1), np.arange(bits - 1, -1, -1, dtype=np.int64))
    tokens = raw.reshape(-1, bits).astype(np.int64) @ weights
    return TokenStream(header, tokens.reshape(frames, codebooks))


def token_rate(header: StreamHeader) -> float:
    """Frames per second: sample_rate / hop_length."""
    return header.sample_rate / header.hop_length


def bitrate(header: StreamHeader) -> float:
    """
    Raw bitrate of the stream.

    Args:
        header: Stream header

    Returns:
        float: num_codebooks * bits_per_index * sample_rate / hop_length bits per second
    """
    return header.num_codebooks * header.bits_per_index * token_rate(header)
