"""LP decoding toolkit for LDPC and generalized LDPC codes.

Modules: codes (graphs, constituent/coset codes, I/O), trellis (partition
sums and dual minima), lpdecode (the iterative decoder), merge (relaxation
tightening), bounds (distance certification), polytope (double description),
harness (simulation and oracles), cli (command line).
"""

from .codes import (
    ConstituentCode,
    CosetSpec,
    LLRVector,
    TannerGraph,
    bec_renormalize,
    bsc_llrs,
    compute_eta,
    coset_syndrome,
    enumerate_codewords,
    gallager_ensemble,
    hamming74_code,
    parse_alist,
    parse_gldpc,
    spc_code,
)
from .lpdecode import DecodeResult, ScheduleParams, decode, primal_value
from .trellis import ABValues, compute_ab, dual_objective, local_dual_min

__all__ = [
    "ABValues",
    "ConstituentCode",
    "CosetSpec",
    "DecodeResult",
    "LLRVector",
    "ScheduleParams",
    "TannerGraph",
    "bec_renormalize",
    "bsc_llrs",
    "compute_ab",
    "compute_eta",
    "coset_syndrome",
    "decode",
    "dual_objective",
    "enumerate_codewords",
    "gallager_ensemble",
    "hamming74_code",
    "local_dual_min",
    "parse_alist",
    "parse_gldpc",
    "primal_value",
    "spc_code",
]
