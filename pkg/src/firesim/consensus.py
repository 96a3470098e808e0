"""Proof-of-Authority state machine: rotation, validation, quorum, slashing."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .allocation import ceil_share
from .chain import Authority, ChainState
from .emission import base_reward, mint, penalized_reward
from .errors import AdmissionError, ConsensusHalt, SlashingError
from .governance import ElectionTally
from .settlement import Accrual, ComputeShare, accrue_capped, settle_campaign, settlement_record

BAD_MINT, BAD_ALLOCATION, OVERSIZE, BAD_PROPOSER = "bad_mint", "bad_allocation", "oversize", "bad_proposer"


@dataclass
class Block:
    height: int
    proposer: str
    size_bytes: int
    shares: tuple[ComputeShare, ...]
    declared_mint: int
    allocation: dict[str, Accrual]
    votes: set[str] = field(default_factory=set)
    finalized: bool = False

    @property
    def allocated(self) -> int:
        return sum(a.amount for a in self.allocation.values())


@dataclass(frozen=True)
class ValidationVerdict:
    valid: bool
    reason: str | None = None


VALID = ValidationVerdict(True)


def proposer_for_height(active_authorities: Sequence[str], height: int) -> str:
    if not active_authorities:
        raise ConsensusHalt("no active authority left")
    ordered = sorted(active_authorities)
    return ordered[height % len(ordered)]


def quorum(active_count: int, fraction: Fraction = Fraction(2, 3)) -> int:
    if active_count < 1:
        raise ValueError("quorum needs at least one authority")
    return ceil_share(active_count, fraction)


def split_compute(total_units: int, senators: Sequence[str], height: int = 0) -> dict[str, int]:
    """Equal split; the remainder rotates with height so nobody is favoured long-run."""
    if not senators:
        raise ConsensusHalt("no senator to receive compute")
    n = len(senators)
    each, extra = divmod(total_units, n)
    out = {s: each for s in senators}
    for i in range(extra):
        out[senators[(height + i) % n]] += 1
    return out


def expected_mint(state: ChainState, size_bytes: int) -> int:
    return penalized_reward(base_reward(state.emission), size_bytes, state.median())


def expected_allocation(state: ChainState, shares, declared_mint: int) -> dict[str, Accrual]:
    room = {c.id: c.room for c in state.campaigns.values() if c.is_open}
    return accrue_capped(shares, declared_mint, room)[0]


def honest_block(state: ChainState, shares, size_bytes: int) -> Block:
    """The block an honest proposer builds for the next height."""
    height = state.height + 1
    size = min(size_bytes, 2 * state.median())
    declared = expected_mint(state, size)
    return Block(
        height=height,
        proposer=proposer_for_height(state.active_authorities(), height),
        size_bytes=size,
        shares=tuple(shares),
        declared_mint=declared,
        allocation=expected_allocation(state, shares, declared),
    )


def validate_block(state: ChainState, block: Block) -> ValidationVerdict:
    """Re-execute the block against ``state`` and report the first mismatch."""
    if block.height != state.height + 1:
        raise ValueError(f"block height {block.height} does not extend chain at {state.height}")
    if block.proposer != proposer_for_height(state.active_authorities(), block.height):
        return ValidationVerdict(False, BAD_PROPOSER)
    if block.size_bytes > 2 * state.median():
        return ValidationVerdict(False, OVERSIZE)
    if block.declared_mint != expected_mint(state, block.size_bytes):
        return ValidationVerdict(False, BAD_MINT)
    if block.allocation != expected_allocation(state, block.shares, block.declared_mint):
        return ValidationVerdict(False, BAD_ALLOCATION)
    return VALID


@dataclass
class FinalizeResult:
    block: Block
    verdict: ValidationVerdict
    finalized: bool
    slashed: list[str]
    settlements: list[dict]

    def record(self) -> dict:
        return {
            "height": self.block.height,
            "proposer": self.block.proposer,
            "size": self.block.size_bytes,
            "mint": self.block.declared_mint,
            "votes": sorted(self.block.votes),
            "finalized": self.finalized,
            "slashed": self.slashed,
        }


def slash_authority(state: ChainState, authority_id: str) -> ChainState:
    auth = state.authorities.get(authority_id)
    if auth is None or not auth.active:
        raise SlashingError(f"{authority_id} is not an active authority")
    stake = auth.stake
    auth.stake = 0
    auth.active = False
    auth.slashed = True
    state.vaporize(stake)
    return state


def settle_due(state: ChainState, height: int) -> list[dict]:
    """Settle every open campaign that is full or past its deadline."""
    records = []
    for cid in sorted(state.campaigns):
        c = state.campaigns[cid]
        if not c.is_open or (c.balance != c.required_amount and height < c.deadline_height):
            continue
        outcome = settle_campaign(c)
        state.account(c.orator).credit(outcome.campaign_payout)
        for backer, amount in outcome.backer_payouts.items():
            state.account(backer).credit(amount)
        state.pool.balance += outcome.surplus_allocation
        state.vaporize(outcome.circulation_reduction)
        records.append(settlement_record(height, cid, outcome))
    return records


def apply_block(state: ChainState, block: Block) -> list[dict]:
    state.emission = mint(state.emission, block.allocated)
    for cid, accrual in block.allocation.items():
        state.campaigns[cid].credit_cpu(accrual.amount, accrual.per_backer)
    settlements = settle_due(state, block.height)
    state.block_sizes.append(block.size_bytes)
    units = sum(s.units for s in block.shares)
    senators = state.active_authorities()
    for s, u in split_compute(units, senators, block.height).items():
        state.compute_received[s] = state.compute_received.get(s, 0) + u
    state.height = block.height
    block.finalized = True
    return settlements


def finalize_block(
    state: ChainState, block: Block, votes, verdict: ValidationVerdict | None = None
) -> FinalizeResult:
    """Count votes and either extend the chain, discard the block, or slash.

    A valid block with a quorum is applied.  An invalid block slashes every
    voter when it gathered a quorum, and its proposer in any case.  Either
    way an invalid block is discarded and the height stays put.
    """
    if verdict is None:
        verdict = validate_block(state, block)
    active = set(state.active_authorities())
    block.votes = set(votes) & active
    reached = len(block.votes) >= quorum(len(active), state.config.consensus_quorum)

    if verdict.valid:
        if not reached:
            return FinalizeResult(block, verdict, False, [], [])
        return FinalizeResult(block, verdict, True, [], apply_block(state, block))

    offenders = set(block.votes) if reached else set()
    if block.proposer in active:
        offenders.add(block.proposer)
    slashed = sorted(offenders)
    for a in slashed:
        slash_authority(state, a)
    return FinalizeResult(block, verdict, False, slashed, [])


def admit_authority(state: ChainState, candidate: str, result: ElectionTally) -> bool:
    """Seat ``candidate`` if the election passed; its stake moves from its account."""
    existing = state.authorities.get(candidate)
    if existing is not None and (existing.active or existing.slashed):
        raise AdmissionError(f"{candidate} is already an authority or was slashed")
    need = state.config.min_authority_stake
    acct = state.account(candidate)
    if acct.balance < need:
        raise AdmissionError(f"{candidate} cannot post the minimum stake {need}")
    if not result.passes(state.config.election_majority):
        return False
    acct.debit(need)
    state.authorities[candidate] = Authority(candidate, need)
    return True
