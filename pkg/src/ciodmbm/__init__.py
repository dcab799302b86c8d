"""Link-level simulation and analysis of coordinate-interleaved media-based modulation."""

from .analysis import (
    PairDistance,
    RotationSearch,
    abep,
    abep_curve,
    coding_gain_distance,
    optimize_rotation,
    pair_distance,
    pep,
    pep_from_eigenvalues,
)
from .baselines import BaselineConfig, ciod_detect, ciod_encode, mbm_detect, mbm_encode
from .channel import CounterStream, draw_channel, ebn0_from_n0, n0_from_ebn0, stream, transmit
from .constellation import RotatedConstellation, build_rotated, nearest_symbol, symbol_from_bits
from .detector import (
    DetectionResult,
    EquivalentChannel,
    brute_force_ml,
    build_equivalent,
    fast_ml_scheme1,
    stack_real_observation,
)
from .encoder import (
    CodewordSelection,
    Scheme,
    SchemeConfig,
    SparseCodeword,
    decode_bits,
    encode,
    enumerate_codebook,
    spectral_efficiency,
)
from .montecarlo import BerCurve, BerPoint, SimPlan, diversity_slope, run

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig",
    "BerCurve",
    "BerPoint",
    "CodewordSelection",
    "CounterStream",
    "DetectionResult",
    "EquivalentChannel",
    "PairDistance",
    "RotatedConstellation",
    "RotationSearch",
    "Scheme",
    "SchemeConfig",
    "SimPlan",
    "SparseCodeword",
    "abep",
    "abep_curve",
    "brute_force_ml",
    "build_equivalent",
    "build_rotated",
    "ciod_detect",
    "ciod_encode",
    "coding_gain_distance",
    "decode_bits",
    "diversity_slope",
    "draw_channel",
    "ebn0_from_n0",
    "encode",
    "enumerate_codebook",
    "fast_ml_scheme1",
    "mbm_detect",
    "mbm_encode",
    "n0_from_ebn0",
    "nearest_symbol",
    "optimize_rotation",
    "pair_distance",
    "pep",
    "pep_from_eigenvalues",
    "run",
    "spectral_efficiency",
    "stack_real_observation",
    "stream",
    "symbol_from_bits",
    "transmit",
]
