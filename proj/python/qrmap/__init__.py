"""Quantile regression mapping: solver, validation and raster prediction."""

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    QuantileFit,
    OlsFit,
    CvEntry,
    BootstrapEnsemble,
    Raster,
    __version__,
    pinball_loss,
    default_tau_grid,
    fit_quantile,
    fit_profile,
    fit_ols,
    loocv,
    in_sample_r1,
    bootstrap,
    summarize_bootstrap,
    resample_indices,
    brute_force_qr,
    read_ascii_grid,
    write_ascii_grid,
    downscale,
    downscale_to_cellsize,
    iqr_map,
    run,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
