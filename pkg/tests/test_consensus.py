from dataclasses import replace
from fractions import Fraction

import pytest

from firesim import consensus as cs
from firesim.chain import Authority
from firesim.emission import base_reward
from firesim.errors import AdmissionError, ConsensusHalt, SlashingError
from firesim.governance import ElectionTally
from firesim.scenario import parse_scenario
from firesim.settlement import Campaign, ComputeShare
from firesim.simulation import build_genesis

COIN = 10**10


def chain(n_auth=7, stake=1000 * COIN, **cfg):
    raw = {
        "horizon": 0,
        "config": {
            "premine_coins": 1_000_000,
            "authorities": [{"id": f"s{i}", "stake": stake} for i in range(1, n_auth + 1)],
            **cfg,
        },
    }
    state = build_genesis(parse_scenario(raw))
    state.campaigns["c1"] = Campaign("c1", "foundation", 10**17, 50)
    return state


SHARES = (ComputeShare("foundation", "c1", 3),)


def test_proposer_rotation():
    assert cs.proposer_for_height(["s1", "s2", "s3"], 0) == "s1"
    assert cs.proposer_for_height(["s3", "s1", "s2"], 4) == "s2"
    assert all(cs.proposer_for_height(["x"], h) == "x" for h in range(5))
    with pytest.raises(ConsensusHalt):
        cs.proposer_for_height([], 1)


@pytest.mark.parametrize("n,q", [(1, 1), (3, 2), (7, 5), (4, 3), (6, 4)])
def test_quorum(n, q):
    assert cs.quorum(n) == q


def test_quorum_bounds():
    for n in range(1, 1001):
        q = cs.quorum(n)
        assert Fraction(q, n) >= Fraction(2, 3) > Fraction(q - 1, n)


def test_split_compute():
    assert cs.split_compute(100, ["a", "b", "c", "d"]) == dict.fromkeys("abcd", 25)
    assert cs.split_compute(10, ["a", "b", "c"], 0) == {"a": 4, "b": 3, "c": 3}
    assert cs.split_compute(10, ["a", "b", "c"], 1) == {"a": 3, "b": 4, "c": 3}
    assert cs.split_compute(0, ["a", "b"]) == {"a": 0, "b": 0}


def test_split_compute_rotation_evens_out():
    totals = dict.fromkeys("abc", 0)
    for h in range(300):
        for k, v in cs.split_compute(10, list("abc"), h).items():
            totals[k] += v
    assert totals == dict.fromkeys("abc", 1000)


def test_honest_block_valid_and_finalizes():
    state = chain()
    block = cs.honest_block(state, SHARES, 1000)
    assert cs.validate_block(state, block) == cs.VALID
    res = cs.finalize_block(state, block, {"s1", "s2", "s3", "s4", "s5"})
    assert res.finalized and state.height == 1
    assert state.campaigns["c1"].cpu_donations == block.declared_mint
    state.check_supply()


def test_four_of_seven_rejected():
    state = chain()
    block = cs.honest_block(state, SHARES, 1000)
    res = cs.finalize_block(state, block, {"s1", "s2", "s3", "s4"})
    assert not res.finalized and state.height == 0 and res.slashed == []


@pytest.mark.parametrize("mutate,reason", [
    (lambda b, s: replace(b, declared_mint=b.declared_mint + 1), cs.BAD_MINT),
    (lambda b, s: replace(b, size_bytes=2 * s.median() + 1), cs.OVERSIZE),
    (lambda b, s: replace(b, proposer="s7"), cs.BAD_PROPOSER),
    (lambda b, s: replace(b, allocation={}), cs.BAD_ALLOCATION),
])
def test_invalid_blocks(mutate, reason):
    state = chain()
    block = mutate(cs.honest_block(state, SHARES, 1000), state)
    assert cs.validate_block(state, block) == cs.ValidationVerdict(False, reason)


def test_quorum_on_invalid_block_slashes_voters():
    state = chain()
    before = state.emission.circulating
    reward_before = base_reward(state.emission)
    honest = cs.honest_block(state, SHARES, 1000)
    bad = replace(honest, declared_mint=honest.declared_mint + 1)
    voters = {bad.proposer, "s3", "s4", "s5", "s6"}
    res = cs.finalize_block(state, bad, voters)
    assert not res.finalized and state.height == 0
    assert sorted(res.slashed) == sorted(voters)
    assert before - state.emission.circulating == 5 * 1000 * COIN
    assert base_reward(state.emission) > reward_before
    assert len(state.active_authorities()) == 2
    state.check_supply()


def test_invalid_without_quorum_slashes_proposer_only():
    state = chain()
    bad = replace(cs.honest_block(state, SHARES, 1000), declared_mint=1)
    res = cs.finalize_block(state, bad, {bad.proposer, "s5"})
    assert res.slashed == [bad.proposer]


def test_slash_authority():
    state = chain(stake=500)
    r0 = base_reward(state.emission)
    cs.slash_authority(state, "s1")
    assert state.emission.vaporized == 500
    assert not state.authorities["s1"].active
    assert base_reward(state.emission) >= r0
    with pytest.raises(SlashingError):
        cs.slash_authority(state, "s1")
    state.check_supply()


def test_admission():
    state = chain(min_authority_stake=100)
    state.account("newbie").balance = 100
    state.accounts["foundation"].balance -= 100
    assert not cs.admit_authority(state, "newbie", ElectionTally("newbie", 5, 3, 8))
    assert cs.admit_authority(state, "newbie", ElectionTally("newbie", 6, 2, 8))
    assert state.authorities["newbie"] == Authority("newbie", 100)
    assert state.account("newbie").balance == 0
    state.check_supply()
    with pytest.raises(AdmissionError):
        cs.admit_authority(state, "newbie", ElectionTally("newbie", 8, 0, 8))


def test_admission_needs_stake():
    state = chain(min_authority_stake=100)
    with pytest.raises(AdmissionError):
        cs.admit_authority(state, "poor", ElectionTally("poor", 4, 0, 4))


def test_slashed_cannot_return():
    state = chain()
    cs.slash_authority(state, "s2")
    with pytest.raises(AdmissionError):
        cs.admit_authority(state, "s2", ElectionTally("s2", 4, 0, 4))
