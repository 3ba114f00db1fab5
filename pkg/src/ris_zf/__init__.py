"""Zero-forcing user allocation and phase design for the RIS-aided MIMO downlink."""

from .alloc import (
    ALGORITHMS,
    AlgorithmResult,
    add_one_ris_lisa,
    greedy_ris_lisa,
    lisa_direct,
    random_phase_baseline,
    run_algorithm,
)
from .channel import ChannelRealization, ScenarioConfig, draw_realization
from .zf_core import SubspaceCache

__all__ = [
    "ALGORITHMS",
    "AlgorithmResult",
    "ChannelRealization",
    "ScenarioConfig",
    "SubspaceCache",
    "add_one_ris_lisa",
    "draw_realization",
    "greedy_ris_lisa",
    "lisa_direct",
    "random_phase_baseline",
    "run_algorithm",
]

__version__ = "0.1.0"
