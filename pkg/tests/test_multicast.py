import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnt.exceptions import MixedCircuits
from qnt.multicast import (
    SAMPLE_BLOCK,
    MeasurementDatabase,
    OutcomeDistribution,
    ghz_distribution,
    sample,
    z_distribution,
)
from qnt.network import BitFlip, Depolarizing, GeneralPauli, PauliProbs, StarNetwork, flip_probability
from qnt.oracle import oracle_distribution


def random_pauli_star(rng, n):
    links = []
    for _ in range(n):
        w = rng.dirichlet(np.ones(4))
        w[0] = 1 - w[1:].sum()
        links.append(GeneralPauli(PauliProbs(*w)))
    return StarNetwork(n, tuple(links))


def test_noiseless_z_is_point_mass():
    dist = z_distribution(StarNetwork.uniform(4, 0.0))
    assert dist.probs[0] == 1.0
    assert dist.probs[1:].sum() == 0


def test_root_flip_copies_to_every_leaf():
    star = StarNetwork.depolarizing([0.75, 0, 0, 0])
    table = z_distribution(star).as_dict()
    assert table["000"] == pytest.approx(0.5)
    assert table["111"] == pytest.approx(0.5)
    assert sum(v for k, v in table.items() if k not in ("000", "111")) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("variant", ["Z", "GHZ"])
def test_uniform_star_matches_density_matrix(variant):
    star = StarNetwork.uniform(4, 0.1)
    fast = z_distribution(star) if variant == "Z" else ghz_distribution(star)
    slow = oracle_distribution(star, variant)
    assert fast.probs.shape == slow.probs.shape == ((8,) if variant == "Z" else (16,))
    np.testing.assert_allclose(fast.probs, slow.probs, atol=1e-9, rtol=0)


def test_noiseless_ghz_is_point_mass():
    dist = ghz_distribution(StarNetwork.uniform(4, 0.0))
    assert dist.as_dict()["b=0,s=000"] == 1.0


def test_ghz_outcome_labels():
    labels = ghz_distribution(StarNetwork.uniform(3, 0.1)).labels()
    # sign bit is the high bit of the table index
    assert labels[0b101] == "b=1,s=01"
    assert len(labels) == 8


def test_sign_parity_is_product_of_link_factors():
    dist = ghz_distribution(StarNetwork.uniform(4, 0.1))
    sign_parity = dist.marginal_parities()[0]
    assert sign_parity == pytest.approx((13 / 15) ** 4, abs=1e-12)
    oracle = oracle_distribution(StarNetwork.uniform(4, 0.1), "GHZ")
    assert oracle.marginal_parities()[0] == pytest.approx((13 / 15) ** 4, abs=1e-9)


def test_sign_bit_is_not_independent_of_pattern():
    # conditional on s = 0...0 the sign is biased; elsewhere it is uniform
    dist = ghz_distribution(StarNetwork.uniform(4, 0.1))
    p = dist.probs.reshape(2, 8)
    assert p[0, 0] > p[1, 0]
    np.testing.assert_allclose(p[0, 1:], p[1, 1:], atol=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_matches_oracle_for_general_pauli_links(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(5):
        star = random_pauli_star(rng, n)
        for variant in ("Z", "GHZ"):
            fast = z_distribution(star) if variant == "Z" else ghz_distribution(star)
            np.testing.assert_allclose(fast.probs, oracle_distribution(star, variant).probs, atol=1e-9, rtol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**32 - 1))
def test_leaf_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    star = random_pauli_star(rng, n)
    perm = rng.permutation(n - 1)
    permuted = StarNetwork(n, (star.links[0],) + tuple(star.links[1 + i] for i in perm))

    z = z_distribution(star)
    zp = z_distribution(permuted)
    lookup = {tuple(row): p for row, p in zip(zp.bits, zp.probs)}
    for row, p in zip(z.bits, z.probs):
        # leaf j of the permuted star is leaf perm[j] of the original
        assert lookup[tuple(row[perm])] == pytest.approx(p, abs=1e-15)

    g = ghz_distribution(star)
    gp = ghz_distribution(permuted)
    lookup = {tuple(row): p for row, p in zip(gp.bits, gp.probs)}
    for row, p in zip(g.bits, g.probs):
        moved = np.concatenate([row[:1], row[1:][perm]])
        assert lookup[tuple(moved)] == pytest.approx(p, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_single_leaf_marginal(n, seed):
    rng = np.random.default_rng(seed)
    star = random_pauli_star(rng, n)
    dist = z_distribution(star)
    q = [flip_probability(link) for link in star.links]
    for i in range(1, n):
        marginal = dist.probs[dist.bits[:, i - 1] == 1].sum()
        assert marginal == pytest.approx(q[0] * (1 - q[i]) + (1 - q[0]) * q[i], abs=1e-12)


def test_distribution_validation():
    with pytest.raises(ValueError):
        OutcomeDistribution("Z", 3, np.array([0.5, 0.5, 0.1, 0.0]))
    with pytest.raises(ValueError):
        OutcomeDistribution("Z", 3, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        OutcomeDistribution("X", 3, np.array([1.0, 0, 0, 0]))


def test_sample_point_mass():
    db = sample(z_distribution(StarNetwork.uniform(4, 0.0)), 5, seed=3)
    assert len(db) == 5
    assert not db.outcomes.any()


def test_sample_is_deterministic():
    dist = ghz_distribution(StarNetwork.uniform(5, 0.2))
    a = sample(dist, 1000, seed=11)
    b = sample(dist, 1000, seed=11)
    c = sample(dist, 1000, seed=12)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert not np.array_equal(a.outcomes, c.outcomes)


def test_sample_blocks_are_prefix_stable():
    dist = z_distribution(StarNetwork.uniform(4, 0.3))
    short = sample(dist, SAMPLE_BLOCK, seed=5)
    long = sample(dist, 2 * SAMPLE_BLOCK + 17, seed=5)
    np.testing.assert_array_equal(long.outcomes[:SAMPLE_BLOCK], short.outcomes)


def test_sample_concentration_over_seeds():
    dist = z_distribution(StarNetwork.uniform(4, 0.1))
    count = 10**6
    p = dist.probs
    bound = 3 * np.sqrt(p * (1 - p) / count)
    within = []
    for seed in range(100):
        db = sample(dist, count, seed)
        idx = db.outcomes.astype(np.int64) @ np.array([4, 2, 1])
        freq = np.bincount(idx, minlength=8) / count
        within.append(np.abs(freq - p) <= bound)
    within = np.array(within)
    assert within.mean() >= 0.99
    assert within.mean(axis=0).min() >= 0.95


def test_jsonl_round_trip_and_schema():
    db = sample(ghz_distribution(StarNetwork.uniform(4, 0.2)), 20, seed=9)
    buf = io.StringIO()
    db.write_jsonl(buf)
    lines = buf.getvalue().splitlines()
    rec = json.loads(lines[3])
    assert set(rec) == {"circuit", "n", "basis", "outcome", "seed", "index"}
    assert rec["circuit"] == "multicast_ghz" and rec["basis"] == "GHZ"
    assert set(rec["outcome"]) == {"b", "s"} and len(rec["outcome"]["s"]) == 3
    assert rec["index"] == 3 and rec["seed"] == 9
    back = MeasurementDatabase.from_records(json.loads(line) for line in lines)
    np.testing.assert_array_equal(back.outcomes, db.outcomes)

    zdb = sample(z_distribution(StarNetwork.uniform(4, 0.2)), 3, seed=2)
    zrec = next(zdb.records())
    assert zrec["outcome"].keys() == {"bits"} and len(zrec["outcome"]["bits"]) == 3


def test_mixed_records_rejected():
    a = next(sample(z_distribution(StarNetwork.uniform(4, 0.2)), 1, 1).records())
    b = next(sample(ghz_distribution(StarNetwork.uniform(4, 0.2)), 1, 1).records())
    with pytest.raises(MixedCircuits):
        MeasurementDatabase.from_records([a, b])


def test_bitflip_links_never_flip_sign():
    star = StarNetwork.bitflip([0.2, 0.1, 0.3, 0.05])
    p = ghz_distribution(star).probs
    assert p[8:].sum() == 0
    assert Depolarizing(0.1) != BitFlip(0.1)
