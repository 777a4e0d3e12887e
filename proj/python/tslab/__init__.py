"""Typical-set noise analysis and adversarial attacks on a toy denoiser."""

from ._tslab import (
    ArgumentError,
    DegeneracyError,
    FileError,
    FormatError,
    Model,
    attack,
    b2_bound,
    binf_bound,
    differential_entropy_bits,
    gaussian_noise,
    init_model,
    l2_concentration_bounds,
    log_pdf,
    logpdf_shift_bounds,
    mae,
    psnr,
    read_pgm,
    run_command,
    ssim,
    synthetic_corpus,
    train,
    ts_sample,
    typical_set_miss_probability,
    typicality_radius,
    worst_case_linf_shift,
    write_pgm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
