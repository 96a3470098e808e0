"""Whole-ledger state shared by the consensus loop."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .emission import EmissionState, FireAmount, Tranche, rolling_median, vaporize
from .errors import InvariantViolation
from .governance import Account, Ballot, RankConfig, sha256_digest
from .settlement import Campaign
from .surplus import SurplusPool

DEFAULT_FULL_REWARD_ZONE = 20_000
DEFAULT_BLOCK_SIZE = 1_000


@dataclass
class Authority:
    id: str
    stake: FireAmount
    active: bool = True
    slashed: bool = False


@dataclass
class ChainConfig:
    full_reward_zone: int = DEFAULT_FULL_REWARD_ZONE
    default_block_size: int = DEFAULT_BLOCK_SIZE
    consensus_quorum: Fraction = Fraction(2, 3)
    election_majority: Fraction = Fraction(3, 4)
    min_authority_stake: FireAmount = 0
    ranks: RankConfig = field(default_factory=RankConfig)
    digest: object = sha256_digest


@dataclass
class ChainState:
    config: ChainConfig
    emission: EmissionState
    accounts: dict[str, Account] = field(default_factory=dict)
    campaigns: dict[str, Campaign] = field(default_factory=dict)
    pool: SurplusPool = field(default_factory=SurplusPool)
    authorities: dict[str, Authority] = field(default_factory=dict)
    ballots: dict[str, Ballot] = field(default_factory=dict)
    height: int = 0
    block_sizes: list[int] = field(default_factory=list)
    compute_received: dict[str, int] = field(default_factory=dict)
    surplus_rounds: int = 0

    @classmethod
    def genesis(cls, config: ChainConfig, emission: EmissionState, tranches: list[Tranche]):
        state = cls(config=config, emission=emission)
        for t in tranches:
            acct = Account(t.account)
            if t.locked:
                acct.locked = t.amount
            else:
                acct.balance = t.amount
            state.accounts[t.account] = acct
        return state

    def account(self, account_id: str) -> Account:
        return self.accounts.setdefault(account_id, Account(account_id))

    def active_authorities(self) -> list[str]:
        return sorted(a.id for a in self.authorities.values() if a.active)

    def median(self) -> int:
        """M_N, never below the full-reward zone (also covers an empty history)."""
        recent = rolling_median(self.block_sizes, self.emission.median_window) if self.block_sizes else 0
        return max(recent, self.config.full_reward_zone)

    def vaporize(self, amount: FireAmount) -> None:
        self.emission = vaporize(self.emission, amount)

    def ledger_total(self) -> FireAmount:
        return (
            sum(a.total for a in self.accounts.values())
            + sum(c.balance for c in self.campaigns.values() if c.is_open)
            + self.pool.balance
            + sum(a.stake for a in self.authorities.values() if a.active)
        )

    def check_supply(self) -> None:
        total = self.ledger_total()
        if total != self.emission.circulating:
            raise InvariantViolation(
                "circulating supply equals ledger total",
                f"height {self.height}: minted-vaporized={self.emission.circulating}, ledger={total}",
            )

    def snapshot(self) -> dict:
        e = self.emission
        return {
            "height": self.height,
            "emission": [e.msupply, e.minted, e.vaporized, e.speed_factor, e.median_window],
            "accounts": {
                k: [a.balance, a.locked, a.contribution_points] for k, a in sorted(self.accounts.items())
            },
            "campaigns": {
                k: [c.orator, c.required_amount, c.deadline_height, c.cpu_donations,
                    c.direct_donations, c.surplus_received, c.status, sorted(c.per_backer_credit.items())]
                for k, c in sorted(self.campaigns.items())
            },
            "pool": self.pool.balance,
            "authorities": {
                k: [a.stake, a.active, a.slashed] for k, a in sorted(self.authorities.items())
            },
            "ballots": {
                k: [b.status, sorted(b.commits.items()), sorted(b.reveals.items()), sorted(b.invalid_reveals)]
                for k, b in sorted(self.ballots.items())
            },
            "block_sizes": self.block_sizes[-self.emission.median_window:],
            "compute_received": sorted(self.compute_received.items()),
            "surplus_rounds": self.surplus_rounds,
        }

    def digest(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
