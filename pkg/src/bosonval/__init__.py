"""Simulation and statistical validation of photonic boson sampling."""

__version__ = "0.1.0"

from .distributions import (
    EventLog,
    ModeConfig,
    NoCollisionDistribution,
    Source,
    bs_probability_raw,
    build_distribution,
    centered_input,
    dist_probability_raw,
    enumerate_no_collision,
    full_space_probability,
    sample_events,
    variation_distance,
)
from .errors import BosonValError
from .interferometer import (
    Circuit,
    Coupler,
    Interferometer,
    Phase,
    compose,
    haar_unitary,
    random_phase_network,
    reck_decompose,
    submatrix,
)
from .permanent import permanent, permanent_batch, permanent_naive
from .validators import (
    LRState,
    Verdict,
    aa_counting_walk,
    aa_decide_event,
    aa_majority,
    aa_statistic,
    lr_update,
    lr_verdict,
)
