import numpy as np
import pytest

from consensus_cards.model import SimConfig, make_topology
from consensus_cards.rng import BitStream


@pytest.fixture
def bits():
    """Fresh deterministic bit stream."""
    return BitStream(12345)


def make_config(**overrides) -> SimConfig:
    """Small valid config; override freely per test."""
    params = dict(
        n=6, c=3, strategy="uniform", beta=None,
        topology=make_topology("complete", 6),
        tau_max=20, checkpoints=(0, 5, 10, 20), master_seed=99, runs=10,
    )
    params.update(overrides)
    if "topology" not in overrides and params["n"] != 6:
        params["topology"] = make_topology("complete", params["n"])
    return SimConfig(**params)


def empirical_counts_to_probs(counts: np.ndarray) -> dict[int, float]:
    total = counts.sum()
    return {mask: counts[mask] / total for mask in np.nonzero(counts)[0]}


def pooled_chisquare(counts, probs: dict[int, float], min_expected: float = 10.0) -> float:
    """Goodness-of-fit p-value with small-expectation cells pooled.

    `counts` is indexed by subset bitmask; `probs` maps each supported mask to
    its exact probability.  Cells whose expected count falls below
    `min_expected` are merged into one bucket so the chi-square approximation
    stays valid even for very concentrated distributions.
    """
    from scipy.stats import chisquare

    total = int(np.asarray(counts).sum())
    observed_masks = set(np.nonzero(counts)[0].tolist())
    unsupported = observed_masks - set(probs)
    assert not unsupported, f"draws outside the distribution support: {unsupported}"

    obs, exp = [], []
    pool_obs = 0.0
    pool_exp = 0.0
    for mask, p in sorted(probs.items(), key=lambda kv: kv[1], reverse=True):
        e = p * total
        o = int(counts[mask])
        if e < min_expected:
            pool_obs += o
            pool_exp += e
        else:
            obs.append(o)
            exp.append(e)
    if pool_exp > 0:
        obs.append(pool_obs)
        exp.append(pool_exp)
    if len(obs) < 2:
        return 1.0  # distribution effectively deterministic at this size
    obs = np.asarray(obs, dtype=float)
    exp = np.asarray(exp, dtype=float)
    exp *= obs.sum() / exp.sum()  # remove floating residue from pooling
    return float(chisquare(obs, exp).pvalue)
