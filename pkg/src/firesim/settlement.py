"""Per-block mint accrual to campaigns and end-of-campaign settlement."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .allocation import largest_remainder, sorted_by_id
from .emission import FireAmount, checked
from .errors import SettlementError

FULL, PARTIAL, FAILED = "full", "partial", "failed"


@dataclass(frozen=True)
class ComputeShare:
    backer: str
    campaign: str
    units: int

    def __post_init__(self):
        if isinstance(self.units, bool) or not isinstance(self.units, int) or self.units <= 0:
            raise ValueError("compute share units must be a positive int")


@dataclass
class Campaign:
    id: str
    orator: str
    required_amount: FireAmount
    deadline_height: int
    cpu_donations: FireAmount = 0
    direct_donations: FireAmount = 0
    per_backer_credit: dict[str, FireAmount] = field(default_factory=dict)
    status: str = "open"
    # portion of direct_donations that came from surplus rounds
    surplus_received: FireAmount = 0

    def __post_init__(self):
        checked(self.required_amount, "required_amount")
        if self.required_amount == 0:
            raise ValueError("required_amount must be positive")

    @property
    def balance(self) -> FireAmount:
        return self.direct_donations + self.cpu_donations

    @property
    def room(self) -> FireAmount:
        """How much more the campaign may accrue before hitting its goal."""
        if self.status != "open":
            return 0
        return self.required_amount - self.balance

    @property
    def is_open(self) -> bool:
        return self.status == "open"

    def credit_cpu(self, amount: FireAmount, per_backer: Mapping[str, FireAmount]) -> None:
        if sum(per_backer.values()) != amount:
            raise SettlementError("backer attribution does not sum to the campaign credit")
        if amount > self.room:
            raise SettlementError(f"credit {amount} exceeds remaining room {self.room}")
        self.cpu_donations += amount
        for backer, v in per_backer.items():
            if v:
                self.per_backer_credit[backer] = self.per_backer_credit.get(backer, 0) + v

    def credit_direct(self, amount: FireAmount, from_surplus: bool = False) -> None:
        if amount > self.room:
            raise SettlementError(f"donation {amount} exceeds remaining room {self.room}")
        self.direct_donations += amount
        if from_surplus:
            self.surplus_received += amount


@dataclass(frozen=True)
class Accrual:
    amount: FireAmount
    per_backer: dict[str, FireAmount]


def _units_by_campaign(shares: Iterable[ComputeShare]) -> dict[str, dict[str, int]]:
    units: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for s in shares:
        units[s.campaign][s.backer] += s.units
    return units


def accrue_capped(
    shares: Iterable[ComputeShare],
    mint: FireAmount,
    room: Mapping[str, FireAmount] | None = None,
) -> tuple[dict[str, Accrual], FireAmount]:
    """Split ``mint`` across campaigns by compute units, honouring funding caps.

    Campaigns absent from ``room`` (or with zero room) take no part.  A
    campaign whose pro-rata credit overflows its room is capped and the
    overflow re-split among the remaining campaigns until nothing overflows
    or nobody is left.  Returns the accruals and the unallocated remainder,
    which the caller must not mint.
    """
    units = _units_by_campaign(shares)
    if room is not None:
        units = {c: b for c, b in units.items() if room.get(c, 0) > 0}
    credit = {c: 0 for c in units}
    left = dict(room) if room is not None else None
    active = sorted(units)
    remaining = mint if units else 0

    while remaining and active:
        campaign_units = [(c, sum(units[c].values())) for c in active]
        split = largest_remainder(remaining, campaign_units)
        overflow = 0
        still_open = []
        for c in active:
            give = split[c] if left is None else min(split[c], left[c])
            credit[c] += give
            overflow += split[c] - give
            if left is not None:
                left[c] -= give
                if left[c] > 0:
                    still_open.append(c)
            else:
                still_open.append(c)
        remaining = overflow
        active = still_open

    result = {
        c: Accrual(amt, largest_remainder(amt, sorted_by_id(dict(units[c]))))
        for c, amt in sorted(credit.items())
    }
    unallocated = mint - sum(credit.values()) if units else mint
    return result, unallocated


def accrue_block_funds(shares: Iterable[ComputeShare], mint: FireAmount) -> dict[str, Accrual]:
    """fund_contr = campaign units / network units * mint, in exact integers."""
    return accrue_capped(shares, mint)[0]


def relative_contribution(backer_credit: FireAmount, campaign_cpu: FireAmount) -> Fraction:
    if campaign_cpu == 0:
        raise ZeroDivisionError("campaign has no cpu donations")
    return Fraction(backer_credit, campaign_cpu)


def branch_for(balance: FireAmount, required: FireAmount) -> str:
    if balance == required:
        return FULL
    if 2 * balance > required:
        return PARTIAL
    return FAILED


@dataclass(frozen=True)
class SettlementOutcome:
    branch: str
    campaign_payout: FireAmount
    backer_payouts: dict[str, FireAmount]
    surplus_allocation: FireAmount
    circulation_reduction: FireAmount

    @property
    def backer_total(self) -> FireAmount:
        return sum(self.backer_payouts.values())

    @property
    def total(self) -> FireAmount:
        return (
            self.campaign_payout + self.backer_total
            + self.surplus_allocation + self.circulation_reduction
        )


def settlement_split(direct: FireAmount, cpu: FireAmount, branch: str) -> tuple[int, int, int, int]:
    """(campaign, backer_pool, surplus, reduction) for a branch.

    Reduction is floored first, then surplus, then the backer pool; whatever
    flooring leaves over stays with the campaign.
    """
    if branch == FULL:
        reduction, surplus, pool = 0, 0, cpu // 2
    elif branch == PARTIAL:
        reduction = cpu // 4
        surplus = cpu // 4
        pool = cpu // 4
    elif branch == FAILED:
        reduction = cpu // 2
        surplus = cpu // 2
        pool = 0
    else:
        raise ValueError(branch)
    return direct + cpu - reduction - surplus - pool, pool, surplus, reduction


def settle_campaign(campaign: Campaign) -> SettlementOutcome:
    """Close ``campaign`` and compute who gets what.

    The caller moves the funds: campaign payout to the orator, backer payouts
    to backers, surplus to the pool and the reduction to vaporization.
    """
    if campaign.status != "open":
        raise SettlementError(f"campaign {campaign.id} already settled")
    branch = branch_for(campaign.balance, campaign.required_amount)
    payout, pool, surplus, reduction = settlement_split(
        campaign.direct_donations, campaign.cpu_donations, branch
    )
    backers = largest_remainder(pool, sorted_by_id(campaign.per_backer_credit)) if pool else {}
    campaign.status = "settled"
    return SettlementOutcome(branch, payout, backers, surplus, reduction)


def settlement_record(height: int, campaign_id: str, outcome: SettlementOutcome) -> dict:
    return {
        "height": height,
        "campaign_id": campaign_id,
        "branch": outcome.branch,
        "campaign_payout": outcome.campaign_payout,
        "backer_payout_total": outcome.backer_total,
        "surplus": outcome.surplus_allocation,
        "reduction": outcome.circulation_reduction,
    }
