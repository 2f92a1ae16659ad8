"""Latent-space imaging toolkit: binary-mask measurement, latent encoding,
generative reconstruction, and a Fourier single-pixel baseline."""

from ._core import (
    ConfigError,
    DimensionError,
    IoError,
    System,
    autoencoder_psnr,
    fsi_full_budget,
    fsi_reconstruct,
    make_synthetic_faces,
    mse,
    psnr,
    read_image,
    sense,
    write_image,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "IoError",
    "System",
    "autoencoder_psnr",
    "fsi_full_budget",
    "fsi_reconstruct",
    "make_synthetic_faces",
    "mse",
    "psnr",
    "read_image",
    "sense",
    "write_image",
]

__version__ = "0.1.0"
