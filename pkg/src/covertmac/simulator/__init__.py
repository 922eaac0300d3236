"""Finite-blocklength simulation of the covert random coding scheme."""
from .config import MultiplexSequence, OmegaRule, SimConfig, build_multiplex, theorem_log_sizes, theorem_sizes
from .montecarlo import (DeltaEstimate, ErrorEstimate, MixtureCapExceeded, SimResult, covertness_bound,
                         estimate_delta, run_trials, simulate, stream, theory_delta)
from .scheme import (BOTH, LEAD, SILENT, Codebook, DecodeOutcome, IntensityTooLarge, covert_scores, decode,
                     encode, generate_codebooks, transmit, typical_candidates)

__all__ = [
    "BOTH", "Codebook", "DecodeOutcome", "DeltaEstimate", "ErrorEstimate", "IntensityTooLarge", "LEAD",
    "MixtureCapExceeded", "MultiplexSequence", "OmegaRule", "SILENT", "SimConfig", "SimResult",
    "build_multiplex", "covert_scores", "covertness_bound", "decode", "encode", "estimate_delta",
    "generate_codebooks", "run_trials", "simulate", "stream", "theorem_log_sizes", "theorem_sizes",
    "theory_delta", "transmit", "typical_candidates",
]
