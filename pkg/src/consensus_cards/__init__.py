"""Monte Carlo toolkit for the generalized common-card consensus task.

N agents hold overlapping N-card decks drawn from N+1 card types; exactly one
card is common to all decks.  In randomized pairwise interactions an observed
agent displays C of its cards (uniformly, top-C by confidence, or by a
temperature-controlled Gibbs rule) and the observer raises its confidence in
the shared ones.  The toolkit measures group failure probability over time,
fits its exponential tail, checks finite-size scaling laws, and estimates
individual-error rates on restricted topologies.
"""

from .analysis import (
    BetaFit,
    FitResult,
    estimate_p_infinity,
    fit_beta_decay,
    fit_exponential,
    scaling_check,
)
from .backend import active_backend, available_backends
from .dynamics import (
    RunOutcome,
    advance_round,
    agent_choice,
    group_decision,
    interaction_step,
    run_single,
)
from .ensemble import (
    EnsembleResult,
    EtaEstimate,
    FailureCurve,
    estimate_eta,
    read_curve_csv,
    run_ensemble,
    write_curve_csv,
    write_eta_csv,
)
from .model import (
    DeckSet,
    GroupState,
    SimConfig,
    StrategyConfig,
    Topology,
    build_decks,
    init_state,
    make_topology,
)
from .rng import BitStream
from .samplers import (
    SubsetDistribution,
    elementary_symmetric,
    enumerate_distribution,
    sample_energy,
    sample_subset_gibbs,
    sample_subset_top_c,
    sample_subset_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "BetaFit", "BitStream", "DeckSet", "EnsembleResult", "EtaEstimate",
    "FailureCurve", "FitResult", "GroupState", "RunOutcome", "SimConfig",
    "StrategyConfig", "SubsetDistribution", "Topology", "active_backend",
    "advance_round", "agent_choice", "available_backends", "build_decks",
    "elementary_symmetric", "enumerate_distribution", "estimate_eta",
    "estimate_p_infinity", "fit_beta_decay", "fit_exponential",
    "group_decision", "init_state", "interaction_step", "make_topology",
    "read_curve_csv", "run_ensemble", "run_single", "sample_energy",
    "sample_subset_gibbs", "sample_subset_top_c", "sample_subset_uniform",
    "scaling_check", "write_curve_csv", "write_eta_csv",
]
