"""Card-display strategies of the observed agent.

Three ways to pick the C cards shown in one interaction, given the observed
agent's confidence table F:

* uniform  - every C-subset equally likely (the infinite-noise limit),
* top-C    - the C highest-confidence cards, boundary ties broken uniformly
             at random (the zero-noise limit),
* gibbs    - a C-subset S with probability proportional to
             exp(beta * sum_{card in S} F[card]).

The gibbs draw uses sequential conditional-Poisson sampling: with per-card
weights w = exp(beta * F), the probability of including card j while k slots
remain among the cards j..n-1 is w_j * e_{k-1}(w_{j+1..}) / e_k(w_{j..}),
where e_k is the elementary symmetric polynomial.  This reproduces the
subset-Boltzmann distribution exactly in O(N*C) per draw, without touching
the binomial(N, C) subset list.  Weights are max-shifted; when the shifted
range would underflow the linear e-table the same pass runs in the log
domain, so the draw stays exact at any beta and confidence spread.
`enumerate_distribution` keeps the explicit enumeration as an independent
oracle for tests.

All draws consume randomness only through a `BitStream`, with an RNG
protocol (which primitive is called when) that the compiled kernel mirrors
call-for-call, so trajectories are bit-identical across kernels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EnumerationTooLargeError, ForeignCardError, InvalidSizeError
from .model import DEFAULT_ENUM_CAP
from .rng import BitStream

# Above this value of beta * (F_max - F_min) the smallest weight falls below
# exp(-500) and the full linear e-table would degenerate; the draw then
# splits the deck around the rank-C confidence instead (see
# `_gibbs_positions_banded`).
GIBBS_LOG_DOMAIN_THRESHOLD = 500.0

# Band half-width in beta * F units.  A card whose weight exceeds the rank-C
# weight by e^50 is included with probability 1 - O(N^2 e^-50), and one that
# far below is included with probability O(N^2 e^-50); both are beyond the
# 2^-53 resolution of the uniform draws, so forcing/excluding them leaves
# the sampled distribution unchanged at double precision.
_GIBBS_BAND_HALF_WIDTH = 50.0

# Linear-domain e-table guard; beyond this the log-domain pass takes over.
_ETABLE_MAX = 1e300

# Largest exp() lookup table worth precomputing for the compiled kernel.
_MAX_WEIGHT_TABLE = 2_000_000

CardSample = frozenset[int]


def gibbs_weight_table(beta: float | None) -> np.ndarray | None:
    """Lookup table exp(-beta * k) for the compiled kernel's weight gather.

    Covers every shifted exponent the linear-domain path can see; built with
    math.exp so entries equal the pure kernel's direct libm calls bit for
    bit.  None when no table applies (beta absent or zero, or a range too
    wide to tabulate; the kernel then calls exp() directly).
    """
    if not beta or beta <= 0.0:
        return None
    size = int(GIBBS_LOG_DOMAIN_THRESHOLD / beta) + 2
    if size > _MAX_WEIGHT_TABLE:
        return None
    return np.array([math.exp(-(beta * float(k))) for k in range(size)],
                    dtype=np.float64)


@dataclass(frozen=True)
class SubsetDistribution:
    """Exact Gibbs probabilities over all C-subsets of one deck."""

    entries: tuple[tuple[CardSample, float], ...]
    z: float  # normalization of the max-shifted Boltzmann weights


def sample_energy(sample: Iterable[int], confidences: Mapping[int, int]) -> int:
    """Energy of a displayed sample: minus the summed confidences."""
    total = 0
    for card in sample:
        if card not in confidences:
            raise ForeignCardError(f"card {card} not in the agent's deck")
        total += confidences[card]
    return -total


def elementary_symmetric(weights: Sequence[float], k: int) -> float:
    """e_k of the weights via e_k(1..j) = e_k(1..j-1) + w_j * e_{k-1}(1..j-1)."""
    if not 0 <= k <= len(weights):
        raise ValueError(f"k must be in [0, {len(weights)}], got {k}")
    e = [1.0] + [0.0] * k
    seen = 0
    for w in weights:
        seen += 1
        for i in range(min(k, seen), 0, -1):
            e[i] += w * e[i - 1]
    return e[k]


def enumerate_distribution(
    confidences: Mapping[int, int],
    c: int,
    beta: float,
    cap: int = DEFAULT_ENUM_CAP,
) -> SubsetDistribution:
    """Explicit Gibbs distribution over all binomial(N, C) subsets.

    Weights are stabilized by shifting with the maximal value of
    beta * sum(F); the shift cancels in the normalization.
    """
    n = len(confidences)
    if not 1 <= c <= n:
        raise InvalidSizeError(f"C must be in [1, N]; got C={c}, N={n}")
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    count = math.comb(n, c)
    if count > cap:
        raise EnumerationTooLargeError(
            f"binomial({n}, {c}) = {count} exceeds enumeration cap {cap}")
    cards = sorted(confidences)
    subsets = list(itertools.combinations(cards, c))
    scores = [beta * float(sum(confidences[card] for card in subset)) for subset in subsets]
    shift = max(scores)
    weights = [math.exp(s - shift) for s in scores]
    z = sum(weights)
    entries = tuple((frozenset(subset), w / z) for subset, w in zip(subsets, weights))
    return SubsetDistribution(entries=entries, z=z)


# ---------------------------------------------------------------------------
# Position-level draws.  These operate on 0-based deck positions and are the
# reference implementations the compiled kernel replicates.
# ---------------------------------------------------------------------------

def uniform_positions(bits: BitStream, n: int, c: int) -> list[int]:
    """Uniform C-subset of positions 0..n-1 (partial Fisher-Yates)."""
    if c == n:
        return list(range(n))
    idx = list(range(n))
    bits.shuffle_prefix(idx, c)
    return idx[:c]


def topc_positions(bits: BitStream, frow: Sequence[int], c: int) -> list[int]:
    """Positions of the C largest confidences; ties straddling the rank-C
    boundary are resolved by a uniform draw among the tied positions."""
    n = len(frow)
    if c == n:
        return list(range(n))
    arr = np.asarray(frow)
    thr = int(np.partition(arr, n - c)[n - c])  # value of the C-th largest
    above = [p for p in range(n) if frow[p] > thr]
    tied = [p for p in range(n) if frow[p] == thr]
    r = c - len(above)
    if r == len(tied):
        return above + tied
    bits.shuffle_prefix(tied, r)
    return above + tied[:r]


def gibbs_positions(bits: BitStream, frow: Sequence[int], c: int, beta: float) -> list[int]:
    """One exact Gibbs C-subset draw by the sequential method."""
    n = len(frow)
    if c == n:
        return list(range(n))
    fmax = max(frow)
    fmin = min(frow)
    if beta * float(fmax - fmin) > GIBBS_LOG_DOMAIN_THRESHOLD:
        return _gibbs_positions_banded(bits, frow, c, beta)
    return _sequential_draw(bits, frow, c, beta)


def _gibbs_positions_banded(bits: BitStream, frow: Sequence[int], c: int, beta: float) -> list[int]:
    """Wide-range draw: split the deck around the rank-C confidence.

    Cards far above it are included outright, cards far below are dropped,
    and only the boundary band runs the sequential pass.  "Far" means an
    e^50 weight ratio, so the correction is below the resolution of the
    53-bit uniform draws; within the band the shifted exponents span at
    most 100, which the linear e-table handles comfortably.
    """
    n = len(frow)
    arr = np.asarray(frow)
    fstar = int(np.partition(arr, n - c)[n - c])  # value of the C-th largest
    forced: list[int] = []
    band: list[int] = []
    for p in range(n):
        d = beta * float(frow[p] - fstar)
        if d > _GIBBS_BAND_HALF_WIDTH:
            forced.append(p)
        elif d >= -_GIBBS_BAND_HALF_WIDTH:
            band.append(p)
    need = c - len(forced)
    if need == len(band):
        return forced + band
    chosen = _sequential_draw(bits, [frow[p] for p in band], need, beta)
    return forced + [band[i] for i in chosen]


def _sequential_draw(bits: BitStream, values: Sequence[int], k: int, beta: float) -> list[int]:
    """Draw k of len(values) items with weights exp(beta * value); returns
    chosen local indices in scan order.  Linear-domain e-table with an exact
    log-domain retry when the table degenerates."""
    m = len(values)
    vmax = max(values)
    weights = [math.exp(-(beta * float(vmax - values[j]))) for j in range(m)]

    # Suffix e-table: etab[j][i] = e_i(w_j, ..., w_{m-1}).
    etab = [[0.0] * (k + 1) for _ in range(m + 1)]
    for j in range(m + 1):
        etab[j][0] = 1.0
    for j in range(m - 1, -1, -1):
        imax = min(k, m - j)
        for i in range(1, imax + 1):
            etab[j][i] = etab[j + 1][i] + weights[j] * etab[j + 1][i - 1]
    z = etab[0][k]
    if not 0.0 < z <= _ETABLE_MAX:
        return _sequential_log(bits, values, k, beta)

    chosen: list[int] = []
    need = k
    for j in range(m):
        if need == 0:
            break
        denom = etab[j][need]
        if denom == 0.0:
            # Underflow along this path; discard and redraw exactly in the
            # log domain with fresh randomness.
            return _sequential_log(bits, values, k, beta)
        p = weights[j] * etab[j + 1][need - 1] / denom
        if p != p:
            return _sequential_log(bits, values, k, beta)
        if bits.uniform() < p:
            chosen.append(j)
            need -= 1
    return chosen


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a >= b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _sequential_log(bits: BitStream, values: Sequence[int], k: int, beta: float) -> list[int]:
    """Log-domain twin of `_sequential_draw`, exact at any exponent range."""
    m = len(values)
    vmax = max(values)
    lw = [-(beta * float(vmax - values[j])) for j in range(m)]
    ninf = -math.inf
    letab = [[ninf] * (k + 1) for _ in range(m + 1)]
    for j in range(m + 1):
        letab[j][0] = 0.0
    for j in range(m - 1, -1, -1):
        imax = min(k, m - j)
        for i in range(1, imax + 1):
            letab[j][i] = _logaddexp(letab[j + 1][i], lw[j] + letab[j + 1][i - 1])
    chosen: list[int] = []
    need = k
    for j in range(m):
        if need == 0:
            break
        p = math.exp(lw[j] + letab[j + 1][need - 1] - letab[j][need])
        if bits.uniform() < p:
            chosen.append(j)
            need -= 1
    return chosen


# ---------------------------------------------------------------------------
# Card-level sampler API.
# ---------------------------------------------------------------------------

def _check_c(c: int, n: int) -> None:
    if not 1 <= c <= n:
        raise InvalidSizeError(f"C must be in [1, N]; got C={c}, N={n}")


def sample_subset_uniform(rng: BitStream, deck: Iterable[int], c: int) -> CardSample:
    """C cards drawn uniformly without replacement, blind to confidences."""
    cards = sorted(deck)
    _check_c(c, len(cards))
    return frozenset(cards[p] for p in uniform_positions(rng, len(cards), c))


def sample_subset_top_c(rng: BitStream, confidences: Mapping[int, int], c: int) -> CardSample:
    """The C highest-confidence cards, boundary ties broken at random."""
    cards = sorted(confidences)
    _check_c(c, len(cards))
    frow = [confidences[card] for card in cards]
    return frozenset(cards[p] for p in topc_positions(rng, frow, c))


def sample_subset_gibbs(rng: BitStream, confidences: Mapping[int, int], c: int, beta: float) -> CardSample:
    """One C-subset with exactly the subset-Boltzmann probability."""
    cards = sorted(confidences)
    _check_c(c, len(cards))
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    frow = [confidences[card] for card in cards]
    return frozenset(cards[p] for p in gibbs_positions(rng, frow, c, beta))
