from src.bitstream.stream import (
    StreamHeader,
    TokenStream,
    bitrate,
    bits_for,
    pack,
    token_rate,
    unpack,
)

__all__ = ["StreamHeader", "TokenStream", "bitrate", "bits_for", "pack", "token_rate", "unpack"]
