"""
Quantizer variants a codec can be fitted with, and their option defaults.
"""
from typing import Any, Dict

VARIANTS: Dict[str, Dict[str, Any]] = {
    "fsq": {
        "name": "Finite Scalar Quantization",
        "description": "8 groups of 4 dims with levels (8, 5, 5, 5): 8 codebooks of 1000 codes",
        "num_codebooks": 8,
        "codebook_size": 1000,
        "options": {"fsq_levels": (8, 5, 5, 5)},
    },
    "rvq": {
        "name": "Residual Vector Quantization",
        "description": "8 k-means trained residual stages of 1024 codewords",
        "num_codebooks": 8,
        "codebook_size": 1024,
        "options": {"rvq_stages": 8, "rvq_size": 1024, "pin_zero": True},
    },
    "none": {
        "name": "Unquantized",
        "description": "Continuous bottleneck; fits the maps but emits no tokens",
        "num_codebooks": 0,
        "codebook_size": 0,
        "options": {},
    },
}


def get_available_variants() -> Dict[str, Dict[str, Any]]:
    """
    Registered quantizer variants

    Returns:
        dict: Variant key -> description dictionary
    """
    return VARIANTS


def get_variant_config(variant_name: str) -> Dict[str, Any]:
    """
    Configuration of one variant

    Args:
        variant_name: Variant key, case-insensitive

    Returns:
        dict: Variant description

    Raises:
        ValueError: If the variant is unknown
    """
    config = VARIANTS.get(variant_name.lower())
    if config is None:
        raise ValueError(
            f"unknown variant '{variant_name}', available: {', '.join(sorted(VARIANTS))}"
        )
    return config


def get_default_options(variant_name: str) -> Dict[str, Any]:
    """Option defaults a variant applies on top of the codec defaults."""
    return dict(get_variant_config(variant_name)["options"])
