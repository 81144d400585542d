"""Problem setup and group state for the common-card task.

A problem of size N uses N+1 card types.  Deck i holds every card except
card i, so card N+1 is the unique card common to all N decks, any two decks
overlap in exactly N-1 cards, and every other card appears in N-1 decks.
The canonical labeling (common card = N+1, deck i omits card i) is fixed so
that runs are reproducible; the structure is symmetric under relabeling.

Agents and cards are 1-based in this module.  The simulation kernels use
0-based dense arrays; the mapping helpers `card_at` / `position_of` convert
between a deck position and a card id in O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace


import numpy as np

from .errors import InvalidConfigError, InvalidSizeError, InvalidTopologyError

STRATEGIES = ("uniform", "topc", "gibbs")
TOPOLOGY_KINDS = ("complete", "cycle", "custom")

DEFAULT_ENUM_CAP = 200_000


@dataclass(frozen=True)
class DeckSet:
    """The N decks of a size-N problem, with the designated common card."""

    n: int
    decks: tuple[frozenset[int], ...]
    common_card: int

    def deck(self, agent: int) -> frozenset[int]:
        """Deck of 1-based agent id."""
        return self.decks[agent - 1]

    def validate(self) -> None:
        if self.n < 2:
            raise InvalidSizeError(f"need n >= 2, got {self.n}")
        if len(self.decks) != self.n:
            raise InvalidSizeError("one deck per agent required")
        all_cards = set(range(1, self.n + 2))
        for i, deck in enumerate(self.decks, start=1):
            if deck != all_cards - {i}:
                raise InvalidSizeError(f"deck {i} must hold every card except {i}")
        if self.common_card != self.n + 1:
            raise InvalidSizeError("common card must be N+1 under canonical labeling")


def build_decks(n: int) -> DeckSet:
    """Canonical deck construction: deck_i = {1..N+1} minus {i}."""
    if n < 2:
        raise InvalidSizeError(f"need n >= 2, got {n}")
    all_cards = frozenset(range(1, n + 2))
    decks = tuple(all_cards - {i} for i in range(1, n + 1))
    return DeckSet(n=n, decks=decks, common_card=n + 1)


def card_at(agent: int, position: int, n: int) -> int:
    """Card id at 0-based `position` of 1-based `agent`'s sorted deck."""
    card = position + 1
    return card + 1 if card >= agent else card


def position_of(agent: int, card: int, n: int) -> int:
    """Inverse of `card_at`; the card must belong to the agent's deck."""
    if card == agent or not 1 <= card <= n + 1:
        raise ValueError(f"card {card} not in deck of agent {agent}")
    return card - 2 if card > agent else card - 1


@dataclass(frozen=True)
class Topology:
    """Directed interaction structure as an explicit ordered-pair set."""

    n: int
    kind: str
    directed_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise InvalidTopologyError(f"unknown topology kind {self.kind!r}")
        seen = set()
        touched = set()
        for obs, obd in self.directed_pairs:
            if obs == obd:
                raise InvalidTopologyError(f"self-pair ({obs}, {obd}) not allowed")
            if not (1 <= obs <= self.n and 1 <= obd <= self.n):
                raise InvalidTopologyError(f"pair ({obs}, {obd}) out of range for n={self.n}")
            if (obs, obd) in seen:
                raise InvalidTopologyError(f"duplicate pair ({obs}, {obd})")
            seen.add((obs, obd))
            touched.update((obs, obd))
        if touched != set(range(1, self.n + 1)):
            raise InvalidTopologyError("every agent must appear in at least one pair")

    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based (observers, observeds) int32 arrays for the kernels."""
        obs = np.fromiter((p[0] - 1 for p in self.directed_pairs), dtype=np.int32)
        obd = np.fromiter((p[1] - 1 for p in self.directed_pairs), dtype=np.int32)
        return obs, obd


def make_topology(kind: str, n: int) -> Topology:
    """Complete graph or interaction ring on n agents."""
    if n < 2:
        raise InvalidSizeError(f"need n >= 2, got {n}")
    if kind == "complete":
        pairs = tuple((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j)
    elif kind == "cycle":
        if n < 3:
            raise InvalidTopologyError("cycle topology needs n >= 3")
        pairs = set()
        for i in range(1, n + 1):
            right = i % n + 1
            left = (i - 2) % n + 1
            pairs.add((i, right))
            pairs.add((i, left))
        pairs = tuple(sorted(pairs))
    else:
        raise InvalidTopologyError(f"unknown topology kind {kind!r}")
    return Topology(n=n, kind=kind, directed_pairs=pairs)


@dataclass
class GroupState:
    """Mutable per-agent confidence tables plus the round counter tau.

    Confidences are stored densely: `confidences[i - 1][p]` is agent i's
    confidence in the card at position p of its sorted deck.  Single-writer:
    one simulation run owns one state.
    """

    n: int
    tau: int
    confidences: np.ndarray

    def confidence_table(self, agent: int) -> dict[int, int]:
        """Agent's confidences keyed by card id."""
        row = self.confidences[agent - 1]
        return {card_at(agent, p, self.n): int(row[p]) for p in range(self.n)}

    def copy(self) -> "GroupState":
        return GroupState(n=self.n, tau=self.tau, confidences=self.confidences.copy())


def init_state(decks: DeckSet) -> GroupState:
    """All-zero confidences at tau = 0."""
    return GroupState(n=decks.n, tau=0, confidences=np.zeros((decks.n, decks.n), dtype=np.int64))


@dataclass(frozen=True)
class StrategyConfig:
    """How an observed agent picks the C cards it displays."""

    kind: str
    c: int
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise InvalidConfigError(f"unknown strategy {self.kind!r}")
        if self.kind == "gibbs":
            if self.beta is None:
                raise InvalidConfigError("gibbs strategy requires beta")
            if not np.isfinite(self.beta) or self.beta < 0:
                raise InvalidConfigError(f"beta must be finite and >= 0, got {self.beta}")
        elif self.beta is not None:
            raise InvalidConfigError(f"strategy {self.kind!r} takes no beta")


@dataclass(frozen=True)
class SimConfig:
    """Full description of one ensemble: problem, strategy, schedule, seeding."""

    n: int
    c: int
    strategy: str
    topology: Topology
    tau_max: int
    checkpoints: tuple[int, ...]
    master_seed: int
    runs: int
    beta: float | None = None
    enum_cap: int = DEFAULT_ENUM_CAP

    def __post_init__(self):
        if self.n < 2:
            raise InvalidConfigError(f"need n >= 2, got {self.n}")
        if not 1 <= self.c <= self.n:
            raise InvalidConfigError(f"C must be in [1, N]; got C={self.c}, N={self.n}")
        # Delegates strategy/beta consistency checks.
        self.strategy_config  # noqa: B018
        if self.topology.n != self.n:
            raise InvalidConfigError("topology size does not match n")
        if self.tau_max < 0:
            raise InvalidConfigError("tau_max must be >= 0")
        cps = tuple(int(t) for t in self.checkpoints)
        if list(cps) != sorted(set(cps)):
            raise InvalidConfigError("checkpoints must be strictly increasing")
        if cps and not (0 <= cps[0] and cps[-1] <= self.tau_max):
            raise InvalidConfigError("checkpoints must lie within [0, tau_max]")
        if self.runs < 1:
            raise InvalidConfigError("runs must be >= 1")
        if not (-(2**63) <= self.master_seed < 2**64):
            raise InvalidConfigError("seed must fit in 64 bits")

    @property
    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(kind=self.strategy, c=self.c, beta=self.beta)

    def with_updates(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)

    def to_mapping(self) -> dict[str, str]:
        """Flat key-value form; key names are the config-file contract."""
        return {
            "n": str(self.n),
            "c": str(self.c),
            "strategy": self.strategy,
            "beta": "" if self.beta is None else repr(float(self.beta)),
            "topology": self.topology.kind,
            "tau_max": str(self.tau_max),
            "checkpoints": format_checkpoints(self.checkpoints),
            "seed": str(self.master_seed),
            "runs": str(self.runs),
            "enum_cap": str(self.enum_cap),
        }

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "SimConfig":
        required = {"n", "c", "strategy", "topology", "tau_max", "checkpoints", "seed", "runs"}
        missing = required - set(mapping)
        if missing:
            raise InvalidConfigError(f"config missing keys: {sorted(missing)}")
        unknown = set(mapping) - required - {"beta", "enum_cap"}
        if unknown:
            raise InvalidConfigError(f"config has unknown keys: {sorted(unknown)}")
        n = int(mapping["n"])
        beta_text = mapping.get("beta", "").strip()
        topo_kind = mapping["topology"]
        if topo_kind not in ("complete", "cycle"):
            raise InvalidConfigError(f"config topology must be complete or cycle, got {topo_kind!r}")
        return cls(
            n=n,
            c=int(mapping["c"]),
            strategy=mapping["strategy"],
            beta=float(beta_text) if beta_text else None,
            topology=make_topology(topo_kind, n),
            tau_max=int(mapping["tau_max"]),
            checkpoints=parse_checkpoints(mapping["checkpoints"]),
            master_seed=int(mapping["seed"]),
            runs=int(mapping["runs"]),
            enum_cap=int(mapping.get("enum_cap", DEFAULT_ENUM_CAP)),
        )


def parse_checkpoints(text: str) -> tuple[int, ...]:
    """Parse the checkpoint mini-language: comma list of ints and/or
    inclusive `start:stop:step` ranges, e.g. ``0:400:10`` or ``0,43,91,144``."""
    times: list[int] = []
    text = text.strip()
    if not text:
        return ()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = token.split(":")
            if len(parts) != 3:
                raise InvalidConfigError(f"bad checkpoint range {token!r}, want start:stop:step")
            start, stop, step = (int(p) for p in parts)
            if step <= 0 or stop < start:
                raise InvalidConfigError(f"bad checkpoint range {token!r}")
            times.extend(range(start, stop + 1, step))
        else:
            times.append(int(token))
    out = tuple(sorted(set(times)))
    if any(t < 0 for t in out):
        raise InvalidConfigError("checkpoints must be >= 0")
    return out


def format_checkpoints(checkpoints: tuple[int, ...]) -> str:
    """Inverse of `parse_checkpoints`; emits start:stop:step when uniform."""
    cps = tuple(checkpoints)
    if not cps:
        return ""
    if len(cps) == 1:
        return str(cps[0])
    steps = {b - a for a, b in zip(cps, cps[1:])}
    if len(steps) == 1:
        return f"{cps[0]}:{cps[-1]}:{steps.pop()}"
    return ",".join(str(t) for t in cps)


