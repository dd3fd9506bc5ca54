"""Discrete holomorphicity toolkit for the Ising, Ashkin-Teller and loop O(n) models."""
import os as _os

# cap BLAS threads before numpy loads
_threads = _os.environ.get("HOLO_LATTICE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .lattice import (DomainGrid, DualInterval, build_dual_interval, build_hex_domain,  # noqa: E402
                      build_square_domain)
from .sholo import BETA_C, LAMBDA, EdgeField, HoloParams, make_relations, sholo_residuals  # noqa: E402
from .propagate import build_propagator, spectrum  # noqa: E402

__version__ = "0.1.0"
