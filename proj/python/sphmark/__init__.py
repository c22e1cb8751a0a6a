"""Rotation-invariant watermarking of equirectangular spherical images."""

from ._sphmark import (
    CodecConfig,
    EmbedMode,
    Error,
    FeatureFamily,
    IoError,
    NumericalError,
    SignatureSet,
    ValidationError,
    attack,
    bispectrum,
    bispectrum_cosine,
    embed,
    extract,
    payload_hex,
    psnr,
    random_payload,
    read_ppm,
    rotate,
    ssim,
    synthetic_cover,
    version,
    write_ppm,
)

__version__ = version()

__all__ = [
    "CodecConfig",
    "EmbedMode",
    "Error",
    "FeatureFamily",
    "IoError",
    "NumericalError",
    "SignatureSet",
    "ValidationError",
    "attack",
    "bispectrum",
    "bispectrum_cosine",
    "embed",
    "extract",
    "payload_hex",
    "psnr",
    "random_payload",
    "read_ppm",
    "rotate",
    "ssim",
    "synthetic_cover",
    "version",
    "write_ppm",
]
