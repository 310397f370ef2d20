from src.codec.model import (
    AnalysisProjection,
    CodecModel,
    CodecOptions,
    FeatureNormalizer,
    QuantizerVariant,
    SynthesisMap,
    compute_fit_stats,
    fit_codec,
    fit_codec_from_mels,
)
from src.codec.pipeline import (
    decode_audio,
    decode_frames,
    encode_audio,
    encode_frames,
    roundtrip_frames,
)
from src.codec.serialization import load_model, save_model

__all__ = [
    "AnalysisProjection",
    "CodecModel",
    "CodecOptions",
    "FeatureNormalizer",
    "QuantizerVariant",
    "SynthesisMap",
    "compute_fit_stats",
    "decode_audio",
    "decode_frames",
    "encode_audio",
    "encode_frames",
    "fit_codec",
    "fit_codec_from_mels",
    "load_model",
    "roundtrip_frames",
    "save_model",
]
