"""Interaction micro-step, rounds, decisions, and single-run execution.

One interaction: an ordered (observer, observed) pair is drawn uniformly
from the topology's pair set, the observed agent displays a C-card sample
per the strategy, and the observer adds one unit of confidence to each
displayed card it also holds.  A round is N such interactions (pairs drawn
with replacement), after which tau advances by one.

Decisions are pure observations: agents name their argmax card (ties
uniform at random), the group takes the plurality (ties uniform at random).
Each run consumes two independent RNG streams, one for dynamics and one for
decisions, so evaluating decisions at checkpoints never perturbs the
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidConfigError
from .model import DeckSet, GroupState, SimConfig, StrategyConfig, Topology, card_at
from .rng import BitStream, run_bit_generators
from .samplers import (
    gibbs_positions,
    gibbs_weight_table,
    topc_positions,
    uniform_positions,
)


@dataclass(frozen=True)
class CheckpointRecord:
    tau: int
    group_choice: int
    group_correct: bool
    individual_errors: int


@dataclass(frozen=True)
class RunOutcome:
    """Decision results of one run at each checkpoint time."""

    run_index: int
    records: tuple[CheckpointRecord, ...]
    final_confidences: np.ndarray | None = None

    def record_at(self, tau: int) -> CheckpointRecord:
        for rec in self.records:
            if rec.tau == tau:
                return rec
        raise KeyError(f"no checkpoint at tau={tau}")


def _draw_sample_positions(rng: BitStream, strategy: StrategyConfig, frow, n: int) -> list[int]:
    if strategy.kind == "uniform":
        return uniform_positions(rng, n, strategy.c)
    if strategy.kind == "topc":
        return topc_positions(rng, frow, strategy.c)
    return gibbs_positions(rng, frow, strategy.c, strategy.beta)


def interaction_step(
    state: GroupState,
    decks: DeckSet,
    topology: Topology,
    strategy: StrategyConfig,
    rng: BitStream,
) -> GroupState:
    """One observer/observed exchange; only the observer's table changes."""
    n = state.n
    pair = rng.randbelow(len(topology.directed_pairs))
    obs, obd = topology.directed_pairs[pair]
    frow = state.confidences[obd - 1]
    for pos in _draw_sample_positions(rng, strategy, frow, n):
        card = card_at(obd, pos, n)
        if card == obs:
            continue
        state.confidences[obs - 1, card - 2 if card > obs else card - 1] += 1
    return state


def advance_round(
    state: GroupState,
    decks: DeckSet,
    topology: Topology,
    strategy: StrategyConfig,
    rng: BitStream,
) -> GroupState:
    """N interactions with independent pair draws, then tau += 1."""
    for _ in range(state.n):
        interaction_step(state, decks, topology, strategy, rng)
    state.tau += 1
    return state


def agent_choice(state: GroupState, agent: int, decision_rng: BitStream) -> int:
    """The 1-based card maximizing the agent's confidences; ties uniform."""
    frow = state.confidences[agent - 1]
    n = state.n
    best = frow[0]
    ties = 1
    for p in range(1, n):
        if frow[p] > best:
            best = frow[p]
            ties = 1
        elif frow[p] == best:
            ties += 1
    pick = decision_rng.randbelow(ties) if ties > 1 else 0
    seen = 0
    for p in range(n):
        if frow[p] == best:
            if seen == pick:
                return card_at(agent, p, n)
            seen += 1
    raise AssertionError("unreachable")


def group_decision(state: GroupState, decision_rng: BitStream) -> int:
    """Plurality card over all agents' choices; ties uniform at random."""
    n = state.n
    counts = [0] * (n + 1)
    for agent in range(1, n + 1):
        counts[agent_choice(state, agent, decision_rng) - 1] += 1
    best = max(counts)
    tied = [card for card in range(n + 1) if counts[card] == best]
    pick = decision_rng.randbelow(len(tied)) if len(tied) > 1 else 0
    return tied[pick] + 1


def run_single(config: SimConfig, run_index: int, capture_confidences: bool = False) -> RunOutcome:
    """Execute one run of `config`, seeded purely by (master_seed, run_index)."""
    if run_index < 0:
        raise InvalidConfigError("run_index must be >= 0")
    n = config.n
    observers, observeds = config.topology.pair_arrays()
    checkpoints = np.asarray(config.checkpoints, dtype=np.int64)
    choices = np.zeros(len(checkpoints), dtype=np.int32)
    errors = np.zeros(len(checkpoints), dtype=np.int32)
    final = np.zeros((n, n), dtype=np.int64) if capture_confidences else None
    dyn_bg, dec_bg = run_bit_generators(config.master_seed, run_index)
    table = gibbs_weight_table(config.beta) if config.strategy == "gibbs" else None
    backend.simulate_run(
        n, config.c, backend.STRATEGY_CODES[config.strategy],
        0.0 if config.beta is None else float(config.beta),
        observers, observeds, checkpoints, config.tau_max,
        dyn_bg, dec_bg, table, choices, errors, final,
    )
    common = n + 1
    records = tuple(
        CheckpointRecord(
            tau=int(t),
            group_choice=int(ch),
            group_correct=bool(ch == common),
            individual_errors=int(er),
        )
        for t, ch, er in zip(checkpoints, choices, errors)
    )
    return RunOutcome(run_index=run_index, records=records, final_confidences=final)
