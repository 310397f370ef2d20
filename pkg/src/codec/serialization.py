"""
Binary container for codec models.

Layout::

    "SCMK" | version u8 | 5 sections, each  u32 length + body

Sections in order: configs, normalizer, projection, quantizer, synthesis.
Integers are little-endian unsigned, reals are little-endian float64.
"""
import logging
import struct
from typing import BinaryIO, List, Optional

import numpy as np

from src.codec.model import (
    MODEL_FORMAT_VERSION,
    AnalysisProjection,
    CodecModel,
    FeatureNormalizer,
    QuantizerVariant,
    SynthesisMap,
)
from src.dsp.spectral import MelConfig, SpectrogramConfig
from src.exceptions import ModelFormatError, ValidationError
from src.quantize.fsq import FsqSpec
from src.quantize.rvq import RvqCodebooks

logger = logging.getLogger(__name__)

MAGIC = b"SCMK"
SUPPORTED_VERSIONS = (MODEL_FORMAT_VERSION,)
FLOAT = np.dtype("<f8")

_VARIANT_CODES = {QuantizerVariant.NONE: 0, QuantizerVariant.FSQ: 1, QuantizerVariant.RVQ: 2}
_CODE_VARIANTS = {code: variant for variant, code in _VARIANT_CODES.items()}


class _Writer:
    def __init__(self):
        self.parts: List[bytes] = []

    def uint(self, value: int, fmt: str = "<I") -> None:
        self.parts.append(struct.pack(fmt, int(value)))

    def real(self, value: float) -> None:
        self.parts.append(struct.pack("<d", float(value)))

    def array(self, values: np.ndarray) -> None:
        self.parts.append(np.ascontiguousarray(values, dtype=FLOAT).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes, base: int = 0):
        self.data = data
        self.base = base
        self.pos = 0

    @property
    def offset(self) -> int:
        return self.base + self.pos

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise ModelFormatError(
                f"truncated model: need {size} bytes, {len(self.data) - self.pos} left", self.offset
            )
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def uint(self, fmt: str = "<I") -> int:
        return int(struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0])

    def real(self) -> float:
        return float(struct.unpack("<d", self.take(8))[0])

    def array(self, *shape: int) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 0
        return np.frombuffer(self.take(count * FLOAT.itemsize), dtype=FLOAT).reshape(shape).astype(np.float64)

    def section(self) -> "_Reader":
        length = self.uint()
        start = self.offset
        return _Reader(self.take(length), start)

    def finish(self, what: str) -> None:
        if self.pos != len(self.data):
            raise ModelFormatError(f"{len(self.data) - self.pos} unexpected bytes in {what}", self.offset)


def _configs(model: CodecModel) -> bytes:
    w = _Writer()
    spec, mel = model.spec_cfg, model.mel_cfg
    w.uint(model.sample_rate)
    w.uint(spec.n_fft)
    w.uint(spec.win_length)
    w.uint(spec.hop_length)
    w.uint(int(spec.centered), "<B")
    w.uint(mel.n_mels)
    w.real(mel.f_min)
    w.real(mel.f_max)
    w.real(mel.log_floor)
    return w.getvalue()


def _normalizer(model: CodecModel) -> bytes:
    w = _Writer()
    w.uint(model.normalizer.mean.shape[0])
    w.array(model.normalizer.mean)
    w.array(model.normalizer.std)
    return w.getvalue()


def _projection(model: CodecModel) -> bytes:
    w = _Writer()
    rows, cols = model.projection.matrix.shape
    w.uint(rows)
    w.uint(cols)
    w.array(model.projection.matrix)
    w.array(model.projection.bias)
    w.array(model.projection.scale)
    return w.getvalue()


def _quantizer(model: CodecModel) -> bytes:
    w = _Writer()
    w.uint(_VARIANT_CODES[model.variant], "<B")
    if model.fsq_spec is not None:
        spec = model.fsq_spec
        w.uint(spec.dims)
        for level in spec.levels:
            w.uint(level)
        w.uint(spec.num_codebooks)
        for group in spec.groups:
            w.uint(len(group))
            for d in group:
                w.uint(d)
    elif model.rvq_codebooks is not None:
        cb = model.rvq_codebooks
        w.uint(cb.num_stages)
        w.uint(cb.codebook_size)
        w.uint(cb.dim)
        for stage in cb.stages:
            w.array(stage)
    return w.getvalue()


def _synthesis(model: CodecModel) -> bytes:
    w = _Writer()
    rows, cols = model.synthesis.matrix.shape
    w.uint(rows)
    w.uint(cols)
    w.array(model.synthesis.matrix)
    w.array(model.synthesis.bias)
    w.real(model.ridge_lambda)
    return w.getvalue()


def save_model(model: CodecModel, sink: Optional[BinaryIO] = None) -> bytes:
    """
    Serialize a model.

    Args:
        model: Model to serialize
        sink: Optional binary stream the bytes are also written to

    Returns:
        bytes: The serialized model
    """
    w = _Writer()
    w.parts.append(MAGIC)
    w.uint(model.format_version, "<B")
    for section in (_configs, _normalizer, _projection, _quantizer, _synthesis):
        body = section(model)
        w.uint(len(body))
        w.parts.append(body)
    data = w.getvalue()
    if sink is not None:
        sink.write(data)
    return data


def load_model(data: bytes) -> CodecModel:
    """
    Parse a serialized model.

    Args:
        data: Bytes produced by ``save_model``

    Returns:
        CodecModel: Model whose serialization equals ``data``

    Raises:
        ModelFormatError: On bad magic, unknown version, truncation, trailing
            bytes or inconsistent contents, with the failing offset
    """
    reader = _Reader(bytes(data))
    if reader.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a codec model: bad magic", 0)
    version = reader.uint("<B")
    if version not in SUPPORTED_VERSIONS:
        raise ModelFormatError(f"unsupported model format version {version}", len(MAGIC))

    s = reader.section()
    sample_rate = s.uint()
    n_fft, win, hop = s.uint(), s.uint(), s.uint()
    centered = bool(s.uint("<B"))
    n_mels = s.uint()
    f_min, f_max, log_floor = s.real(), s.real(), s.real()
    s.finish("configs")

    s = reader.section()
    bins = s.uint()
    mean, std = s.array(bins), s.array(bins)
    s.finish("normalizer")

    s = reader.section()
    rows, cols = s.uint(), s.uint()
    matrix, bias, scale = s.array(rows, cols), s.array(rows), s.array(rows)
    s.finish("projection")

    s = reader.section()
    code_offset = s.offset
    code = s.uint("<B")
    if code not in _CODE_VARIANTS:
        raise ModelFormatError(f"unknown quantizer variant code {code}", code_offset)
    variant = _CODE_VARIANTS[code]
    fsq_spec = None
    codebooks = None
    if variant is QuantizerVariant.FSQ:
        dims = s.uint()
        levels = tuple(s.uint() for _ in range(dims))
        groups = []
        for _ in range(s.uint()):
            groups.append(tuple(s.uint() for _ in range(s.uint())))
        fsq_spec = (levels, tuple(groups))
    elif variant is QuantizerVariant.RVQ:
        stages, size, dim = s.uint(), s.uint(), s.uint()
        codebooks = tuple(s.array(size, dim) for _ in range(stages))
    s.finish("quantizer")

    s = reader.section()
    syn_rows, syn_cols = s.uint(), s.uint()
    syn_matrix, syn_bias = s.array(syn_rows, syn_cols), s.array(syn_rows)
    ridge_lambda = s.real()
    s.finish("synthesis")
    reader.finish("model")

    try:
        return CodecModel(
            variant=variant,
            sample_rate=sample_rate,
            spec_cfg=SpectrogramConfig(n_fft=n_fft, win_length=win, hop_length=hop, centered=centered),
            mel_cfg=MelConfig(n_mels=n_mels, f_min=f_min, f_max=f_max, log_floor=log_floor),
            normalizer=FeatureNormalizer(mean, std),
            projection=AnalysisProjection(matrix, bias, scale),
            synthesis=SynthesisMap(syn_matrix, syn_bias),
            fsq_spec=FsqSpec(*fsq_spec) if fsq_spec else None,
            rvq_codebooks=RvqCodebooks(codebooks) if codebooks else None,
            ridge_lambda=ridge_lambda,
            format_version=version,
        )
    except ModelFormatError:
        raise
    except (ValidationError, ValueError) as e:
        raise ModelFormatError(f"inconsistent model contents: {e}") from e
