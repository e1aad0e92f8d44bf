"""No-reference music quality assessment."""

from ._pmqa import (
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    Scorer,
    ShapeError,
    StatisticsError,
    WavError,
    degrade,
    intensity_to_param,
    mel_spectrogram,
    mse,
    read_wav,
    resample,
    spearman,
    spectral_flatness,
    synth_clip,
    write_wav,
)

__all__ = [
    "Error",
    "FormatError",
    "InvalidArgument",
    "IoError",
    "Scorer",
    "ShapeError",
    "StatisticsError",
    "WavError",
    "degrade",
    "intensity_to_param",
    "mel_spectrogram",
    "mse",
    "read_wav",
    "resample",
    "spearman",
    "spectral_flatness",
    "synth_clip",
    "write_wav",
]
