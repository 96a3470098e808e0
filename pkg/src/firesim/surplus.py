"""Redistribution of retained settlement funds to vote-ranked campaigns."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .emission import FireAmount
from .errors import GovernanceError
from .governance import Ballot, SurplusTally, tally_ballot


@dataclass(frozen=True)
class RankedCampaign:
    campaign: str
    votes: int
    left_to_fill: FireAmount

    def __post_init__(self):
        if self.left_to_fill <= 0:
            raise ValueError(f"{self.campaign}: fully funded campaigns are not candidates")
        if self.votes < 0:
            raise ValueError("votes must be non-negative")


@dataclass
class SurplusPool:
    balance: FireAmount = 0
    sufficiency_coefficient: Fraction = Fraction(1)


def rank(votes: Mapping[str, int], left_to_fill: Mapping[str, FireAmount]) -> list[RankedCampaign]:
    """Most votes first; equal votes go to the lowest campaign id."""
    ranked = [
        RankedCampaign(c, votes.get(c, 0), left_to_fill[c])
        for c in left_to_fill
        if left_to_fill[c] > 0
    ]
    ranked.sort(key=lambda r: (-r.votes, r.campaign))
    return ranked


def select_funded_count(ranked: Sequence[RankedCampaign], pool: SurplusPool) -> int:
    """Largest n whose leading deficits fit in balance * sufficiency_coefficient."""
    budget = Fraction(pool.balance) * Fraction(pool.sufficiency_coefficient)
    total = 0
    for n, rc in enumerate(ranked):
        total += rc.left_to_fill
        if total > budget:
            return n
    return len(ranked)


def distribute_surplus(
    pool_balance: FireAmount, selected: Sequence[RankedCampaign]
) -> dict[str, FireAmount]:
    """Fill the small deficits first, then split what is left equally.

    Each pass computes the floor average of what remains; every campaign
    needing no more than that is paid in full.  When a pass fills nobody the
    rest each get the average and the loop ends.  Flooring dust is not paid.
    """
    payouts: dict[str, FireAmount] = {}
    remaining = pool_balance
    waiting = list(selected)
    while waiting:
        avg = remaining // len(waiting)
        filled = [rc for rc in waiting if rc.left_to_fill <= avg]
        if not filled:
            for rc in waiting:
                payouts[rc.campaign] = avg
            remaining -= avg * len(waiting)
            break
        for rc in filled:
            payouts[rc.campaign] = rc.left_to_fill
            remaining -= rc.left_to_fill
        waiting = [rc for rc in waiting if rc.left_to_fill > avg]
    return payouts


@dataclass(frozen=True)
class SurplusRound:
    round: int
    pool_before: FireAmount
    n_selected: int
    payouts: dict[str, FireAmount]
    pool_after: FireAmount

    def record(self) -> dict:
        return {
            "round": self.round,
            "pool_before": self.pool_before,
            "n_selected": self.n_selected,
            "payouts": [[c, a] for c, a in self.payouts.items()],
            "pool_after": self.pool_after,
        }


def run_surplus_round(
    pool: SurplusPool,
    ballot_result: Ballot | SurplusTally,
    left_to_fill: Mapping[str, FireAmount],
    round_no: int = 0,
) -> SurplusRound:
    """Rank, select and pay; debits ``pool`` in place.

    ``left_to_fill`` holds the current deficit of every candidate still able
    to receive funds.  Crediting the campaigns is left to the caller.
    """
    if isinstance(ballot_result, Ballot):
        ballot_result = tally_ballot(ballot_result)
    if not isinstance(ballot_result, SurplusTally):
        raise GovernanceError("surplus rounds need a surplus ballot")
    before = pool.balance
    ranked = rank(ballot_result.as_dict(), left_to_fill)
    n = select_funded_count(ranked, pool)
    payouts = distribute_surplus(pool.balance, ranked[:n])
    pool.balance -= sum(payouts.values())
    return SurplusRound(round_no, before, n, payouts, pool.balance)
