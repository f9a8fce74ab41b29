"""Congruences of multipartition functions modulo prime powers."""

from __future__ import annotations

from .congruence import (
    IdentityFailure,
    MultipartitionParams,
    ParameterError,
    compute_F,
    derive_params,
    detect_ramanujan,
    solve_phi,
    sturm_bound,
)
from .hecke import HeckeSystem, HypothesisError, certify
from .series import Modulus, QSeries

__version__ = "0.1.0"
