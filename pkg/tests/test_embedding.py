from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainstrength.embedding import (
    ChainSamplingError,
    ChainSet,
    chain_term,
    composite_energy_of_lattice,
    decode,
    decode_batch,
    embed,
    extend_config,
    sample_chains,
    sample_chains_with_total,
    total_ground_energy,
)
from chainstrength.model import LatticeSpec, build_j1j2_lattice, energies, energy

BASE4 = build_j1j2_lattice(LatticeSpec(4, 1.0, 0.46))


def test_full_coverage_when_every_site_chained():
    cs = sample_chains(4, 16, 7)
    assert sorted(cs.sites) == list(range(16))


def test_mean_total_of_random_chains():
    totals = [sample_chains(4, 6, s).nc for s in range(10_000)]
    assert abs(np.mean(totals) - 15.0) < 0.15


@pytest.mark.parametrize("method", ["conditional", "rejection"])
def test_target_total_is_exact(method):
    for seed in range(20):
        assert sample_chains_with_total(4, 18, rng_seed=seed, method=method).nc == 18


def test_target_total_fig3_l6():
    cs = sample_chains_with_total(6, 51, rng_seed=1)
    assert cs.nc == 51
    cs.validate(6)


def test_maximum_total_has_unique_solution():
    cs = sample_chains_with_total(4, 64, rng_seed=3)
    assert cs.chains == tuple((s, 4) for s in range(16))


def test_rejection_exhaustion_is_reported():
    with pytest.raises(ChainSamplingError):
        sample_chains_with_total(4, 3, max_tries=1, rng_seed=0, method="rejection")
    with pytest.raises(ChainSamplingError):
        sample_chains_with_total(4, 65)


def test_conditional_matches_rejection_distribution():
    # L=2, total 3: k=2 chains has weight 2/4, k=3 has 1/8, so P(k=2) = 0.8
    for method in ("conditional", "rejection"):
        ks = Counter(len(sample_chains_with_total(2, 3, rng_seed=s, method=method).chains) for s in range(3000))
        assert set(ks) == {2, 3}
        assert abs(ks[2] / 3000 - 0.8) < 0.03


def test_chainset_validation_and_json():
    with pytest.raises(ValueError):
        ChainSet(((1, 2), (1, 3)))
    with pytest.raises(ValueError):
        ChainSet(((1, 0),))
    with pytest.raises(ValueError):
        ChainSet(((3, 5),)).validate(4)
    cs = ChainSet(((5, 2), (1, 3)))
    assert cs.sites == (1, 5)
    assert ChainSet.from_json(cs.to_json()) == cs


def test_layout_of_composite():
    cs = ChainSet(((2, 2), (7, 3)))
    emb = embed(BASE4, cs, 1.0)
    assert emb.composite.num_qubits == 16 + 5
    assert [g.tolist() for g in emb.groups] == [[2, 16, 17], [7, 18, 19, 20]]
    assert emb.composite.kind_mask("chain").sum() == 5
    assert emb.composite.labels[:16] == ("lattice",) * 16
    # diagonal bonds of chained sites land on the chain's far end
    diag = emb.composite.edges[emb.composite.kind_mask("diag")]
    assert not np.any(diag == 2) and np.any(diag == 17)
    nn = emb.composite.edges[emb.composite.kind_mask("nn")]
    assert np.any(nn == 2) and not np.any(nn == 17)


def test_route_none_keeps_lattice_bonds():
    emb = embed(BASE4, ChainSet(((2, 2),)), 1.0, route="none")
    lattice_edges = emb.composite.edges[~emb.composite.kind_mask("chain")]
    assert lattice_edges.max() < 16


def test_jc_zero_route_none_reproduces_base_for_any_config():
    emb = embed(BASE4, ChainSet(((0, 3), (9, 1))), 0.0, route="none")
    rng = np.random.default_rng(0)
    cfgs = rng.choice(np.array([-1, 1], dtype=np.int8), size=(50, emb.composite.num_qubits))
    assert np.allclose(energies(emb.composite, cfgs), energies(BASE4, cfgs[:, :16]))


def test_jc_zero_diagonal_route_reproduces_base_for_extended_configs():
    emb = embed(BASE4, ChainSet(((0, 3), (9, 1))), 0.0)
    rng = np.random.default_rng(1)
    lat = rng.choice(np.array([-1, 1], dtype=np.int8), size=(50, 16))
    assert np.allclose(energies(emb.composite, extend_config(lat, emb)), energies(BASE4, lat))


def test_one_chain_all_up_contribution():
    emb = embed(BASE4, ChainSet(((0, 2),)), 1.5)
    up = np.ones(emb.composite.num_qubits, dtype=np.int8)
    assert chain_term(up, emb) == pytest.approx(-3.0)
    assert energy(emb.composite, up) == pytest.approx(energy(BASE4, np.ones(16)) - 3.0)


def test_decode_examples():
    emb = embed(BASE4, ChainSet(((0, 3),)), 1.0)
    up = np.ones(19, dtype=np.int8)
    lat, broken = decode(up, emb)
    assert broken == 0 and np.all(lat == 1)

    cfg = up.copy()
    cfg[16:19] = [-1, -1, -1]  # lattice qubit +1, chain -1 -1 -1
    strict, b = decode(cfg, emb, "strict")
    major, b2 = decode(cfg, emb, "majority")
    assert b == b2 == 1
    assert strict[0] == 1 and major[0] == -1

    tie = up.copy()
    tie[17:19] = [-1, -1]  # +1 +1 -1 -1: ties go to the lattice qubit
    major, b = decode(tie, emb, "majority")
    assert b == 1 and major[0] == 1

    lat, broken = decode(-up, emb)
    assert broken == 0 and np.all(lat == -1)


def test_decode_rejects_wrong_length():
    emb = embed(BASE4, ChainSet(((0, 3),)), 1.0)
    with pytest.raises(ValueError):
        decode(np.ones(16), emb)


def test_total_ground_energy_examples():
    emb = embed(BASE4, sample_chains_with_total(4, 9, rng_seed=0), 2.0)
    assert total_ground_energy(emb, -2.92) == pytest.approx(-64.72)
    emb0 = embed(BASE4, sample_chains_with_total(4, 9, rng_seed=0), 0.0)
    assert total_ground_energy(emb0, -2.92) == pytest.approx(16 * -2.92)


chain_sets = st.integers(0, 2**31 - 1).flatmap(
    lambda seed: st.integers(1, 16).map(lambda k: sample_chains(4, k, seed))
)
lattice_cfgs = st.lists(st.sampled_from([-1, 1]), min_size=16, max_size=16).map(lambda v: np.array(v, np.int8))


@settings(max_examples=100)
@given(chain_sets, lattice_cfgs, st.floats(0, 5), st.sampled_from(["diagonal", "none"]))
def test_extended_configs_decode_back_and_pay_full_chain_energy(cs, lat, jc, route):
    emb = embed(BASE4, cs, jc, route)
    full = extend_config(lat, emb)
    for policy in ("strict", "majority"):
        back, broken = decode(full, emb, policy)
        assert broken == 0 and np.array_equal(back, lat)
    assert chain_term(full, emb) == pytest.approx(-cs.nc * jc)
    assert composite_energy_of_lattice(lat, emb) == pytest.approx(energy(BASE4, lat) - cs.nc * jc)


@settings(max_examples=50)
@given(chain_sets, st.integers(0, 2**31 - 1))
def test_broken_count_flip_invariant(cs, seed):
    emb = embed(BASE4, cs, 1.0)
    cfgs = np.random.default_rng(seed).choice(np.array([-1, 1], np.int8), size=(20, emb.composite.num_qubits))
    _, b1 = decode_batch(cfgs, emb)
    _, b2 = decode_batch(-cfgs, emb)
    assert np.array_equal(b1, b2)
    counted = [sum(len(set(c[g].tolist())) > 1 for g in emb.groups) for c in cfgs]
    assert b1.tolist() == counted
