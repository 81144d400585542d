"""Pure-Python simulation kernel.

Twin of the compiled kernel in `_kernel.pyx`: same inputs, same outputs,
and the same RNG consumption pattern draw for draw, so a run under a given
seed produces bit-identical trajectories on either kernel.  This one is the
readable reference (and the fallback when the extension is unavailable);
the compiled one is the fast path.
"""

from __future__ import annotations

import numpy as np

from .rng import BitStream
from .samplers import gibbs_positions, topc_positions, uniform_positions

BACKEND_NAME = "python"

STRATEGY_UNIFORM = 0
STRATEGY_TOPC = 1
STRATEGY_GIBBS = 2


def _draw_positions(bits: BitStream, strategy: int, frow, n: int, c: int, beta: float) -> list[int]:
    if strategy == STRATEGY_UNIFORM:
        return uniform_positions(bits, n, c)
    if strategy == STRATEGY_TOPC:
        return topc_positions(bits, frow, c)
    return gibbs_positions(bits, frow, c, beta)


def _agent_vote(bits: BitStream, frow, n: int, agent: int) -> int:
    """0-based card the agent names; uniform among tied maxima."""
    best = frow[0]
    ties = 1
    for p in range(1, n):
        v = frow[p]
        if v > best:
            best = v
            ties = 1
        elif v == best:
            ties += 1
    pick = bits.randbelow(ties) if ties > 1 else 0
    seen = 0
    for p in range(n):
        if frow[p] == best:
            if seen == pick:
                return p + 1 if p >= agent else p  # card_at, 0-based
            seen += 1
    raise AssertionError("unreachable")


def _evaluate(bits: BitStream, conf: np.ndarray, n: int) -> tuple[int, int]:
    """(group choice as 1-based card id, number of individually wrong agents)."""
    counts = [0] * (n + 1)
    errors = 0
    for agent in range(n):
        card = _agent_vote(bits, conf[agent], n, agent)
        counts[card] += 1
        if card != n:  # 0-based common card is n
            errors += 1
    best = max(counts)
    tied = [card for card in range(n + 1) if counts[card] == best]
    pick = bits.randbelow(len(tied)) if len(tied) > 1 else 0
    return tied[pick] + 1, errors


def simulate_run(
    n: int,
    c: int,
    strategy: int,
    beta: float,
    observers: np.ndarray,
    observeds: np.ndarray,
    checkpoints: np.ndarray,
    tau_max: int,
    dyn_bg: np.random.BitGenerator,
    dec_bg: np.random.BitGenerator,
    exp_table: np.ndarray | None,
    out_choices: np.ndarray,
    out_errors: np.ndarray,
    out_final_conf: np.ndarray | None = None,
) -> None:
    """One full run: tau_max rounds of N interactions, with group decisions
    and individual-error counts recorded at each checkpoint.

    `exp_table` is accepted for signature parity with the compiled kernel
    (which uses it as an exp() lookup); weights here are computed directly.
    """
    dyn = BitStream(dyn_bg)
    dec = BitStream(dec_bg)
    conf = np.zeros((n, n), dtype=np.int64)
    npairs = len(observers)

    cps = [int(t) for t in checkpoints]
    cp_idx = 0
    if cp_idx < len(cps) and cps[cp_idx] == 0:
        out_choices[cp_idx], out_errors[cp_idx] = _evaluate(dec, conf, n)
        cp_idx += 1

    for tau in range(1, tau_max + 1):
        for _ in range(n):
            pair = dyn.randbelow(npairs)
            obs = int(observers[pair])
            obd = int(observeds[pair])
            frow = conf[obd]
            for pos in _draw_positions(dyn, strategy, frow, n, c, beta):
                card = pos + 1 if pos >= obd else pos  # 0-based card id
                if card == obs:
                    continue
                conf[obs, card - 1 if card > obs else card] += 1
        while cp_idx < len(cps) and cps[cp_idx] == tau:
            out_choices[cp_idx], out_errors[cp_idx] = _evaluate(dec, conf, n)
            cp_idx += 1

    if out_final_conf is not None:
        out_final_conf[:, :] = conf


def draw_subset_counts(
    strategy: int,
    frow: np.ndarray,
    c: int,
    beta: float,
    n_draws: int,
    bit_gen: np.random.BitGenerator,
) -> np.ndarray:
    """Histogram of repeated draws, indexed by the position bitmask of the
    sampled subset.  Requires len(frow) <= 20; used by distribution tests
    and the backend benchmark."""
    n = len(frow)
    if n > 20:
        raise ValueError("bitmask histogram supports n <= 20")
    bits = BitStream(bit_gen)
    counts = np.zeros(1 << n, dtype=np.int64)
    frow = [int(v) for v in frow]
    for _ in range(n_draws):
        mask = 0
        for pos in _draw_positions(bits, strategy, frow, n, c, beta):
            mask |= 1 << pos
        counts[mask] += 1
    return counts
