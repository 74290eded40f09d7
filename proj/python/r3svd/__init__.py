"""Rank-revealing randomized SVD, fixed-rank and restarting RSVD, and SVT matrix completion."""

from ._r3svd import (
    DivergenceError,
    ParseError,
    block_svd,
    energy_percentage,
    gaussian_matrix,
    householder_qr,
    r3svd,
    read_matrix_market,
    read_pgm,
    restarting_rsvd,
    rsvd_fixed_rank,
    svt_complete,
    write_matrix_market,
    write_pgm,
)

__all__ = [
    "DivergenceError",
    "ParseError",
    "block_svd",
    "energy_percentage",
    "gaussian_matrix",
    "householder_qr",
    "r3svd",
    "read_matrix_market",
    "read_pgm",
    "restarting_rsvd",
    "rsvd_fixed_rank",
    "svt_complete",
    "write_matrix_market",
    "write_pgm",
]
