"""Accounts, rank ladder, Citizen stake locks and commit-reveal ballots."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .allocation import ceil_share
from .emission import FireAmount, checked
from .errors import ConfigError, GovernanceError

TITLES = ("Tourist", "Craftsman", "Citizen", "Hero")
LOCK_TITLES = frozenset({"Citizen", "Hero"})
ELECTION_MAJORITY = Fraction(3, 4)


@dataclass(frozen=True)
class Rank:
    title: str
    level: int
    min_points: int


DEFAULT_RANK_TABLE = (
    Rank("Tourist", 1, 0),
    Rank("Tourist", 2, 10),
    Rank("Tourist", 3, 25),
    Rank("Craftsman", 1, 50),
    Rank("Craftsman", 2, 100),
    Rank("Citizen", 1, 200),
    Rank("Citizen", 2, 400),
    Rank("Hero", 1, 1000),
)


def validate_rank_table(table: Sequence[Rank]) -> None:
    if not table:
        raise ConfigError("rank table is empty")
    first = table[0]
    if (first.title, first.level, first.min_points) != ("Tourist", 1, 0):
        raise ConfigError("rank table must start at Tourist level 1 with 0 points")
    for prev, cur in zip(table, table[1:]):
        if cur.title not in TITLES:
            raise ConfigError(f"unknown title {cur.title!r}")
        if cur.min_points <= prev.min_points:
            raise ConfigError("rank thresholds must be strictly ascending")
        pi, ci = TITLES.index(prev.title), TITLES.index(cur.title)
        if ci < pi or (ci == pi and cur.level != prev.level + 1) or (ci > pi and cur.level != 1):
            raise ConfigError(f"rank ladder out of order at {cur.title} {cur.level}")


@dataclass
class RankConfig:
    table: tuple[Rank, ...] = DEFAULT_RANK_TABLE
    citizen_lock_threshold: FireAmount = 0

    def __post_init__(self):
        self.table = tuple(self.table)
        validate_rank_table(self.table)


@dataclass
class Account:
    id: str
    balance: FireAmount = 0
    locked: FireAmount = 0
    contribution_points: int = 0

    @property
    def total(self) -> FireAmount:
        return self.balance + self.locked

    def debit(self, amount: FireAmount) -> None:
        checked(amount)
        if amount > self.balance:
            raise GovernanceError(
                f"account {self.id}: insufficient balance ({self.balance} < {amount})"
            )
        self.balance -= amount

    def credit(self, amount: FireAmount) -> None:
        self.balance = checked(self.balance + checked(amount), f"{self.id}.balance")


def title_of(account: Account, ranks: RankConfig) -> tuple[str, int]:
    """Highest rank the account's points reach; Citizen and up also need the lock."""
    locked_ok = account.locked > 0 and account.locked >= ranks.citizen_lock_threshold
    best = ranks.table[0]
    for r in ranks.table:
        if r.min_points > account.contribution_points:
            break
        if r.title in LOCK_TITLES and not locked_ok:
            break
        best = r
    return best.title, best.level


def is_citizen(account: Account, ranks: RankConfig) -> bool:
    return title_of(account, ranks)[0] in LOCK_TITLES


def is_orator_eligible(account: Account, ranks: RankConfig) -> bool:
    return title_of(account, ranks) != ("Tourist", 1)


def sha256_digest(choice: str, nonce: str) -> str:
    return hashlib.sha256(choice.encode() + b"\x00" + nonce.encode()).hexdigest()


DigestFn = Callable[[str, str], str]

OPEN, REVEAL, CLOSED, PENDING = "open", "reveal", "closed", "pending"


@dataclass
class Ballot:
    """A ballot whose phases are scheduled by block height.

    Commits are accepted in ``[opens, reveal_at)``, reveals in
    ``[reveal_at, closes)``; at ``closes`` the ballot is tallied.
    """

    id: str
    kind: str  # "election" | "surplus"
    opens: int
    reveal_at: int
    closes: int
    candidates: tuple[str, ...] = ()
    commits: dict[str, str] = field(default_factory=dict)
    reveals: dict[str, str] = field(default_factory=dict)
    invalid_reveals: list[str] = field(default_factory=list)
    status: str = PENDING
    transitions: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("election", "surplus"):
            raise ConfigError(f"unknown ballot kind {self.kind!r}")
        if not self.opens < self.reveal_at < self.closes:
            raise ConfigError("ballot heights must satisfy opens < reveal_at < closes")
        if self.kind == "election" and len(self.candidates) != 1:
            raise ConfigError("an election ballot names exactly one candidate")
        self.candidates = tuple(self.candidates)

    @property
    def choices(self) -> tuple[str, ...]:
        return ("yes", "no") if self.kind == "election" else self.candidates

    def advance(self, height: int) -> list[str]:
        """Move to the phase due at ``height``; returns phases entered."""
        entered = []
        for phase, at in ((OPEN, self.opens), (REVEAL, self.reveal_at), (CLOSED, self.closes)):
            if height >= at and phase not in self.transitions:
                self.transitions[phase] = at
                self.status = phase
                entered.append(phase)
        return entered


def has_outstanding_commit(account_id: str, ballots: Iterable[Ballot]) -> bool:
    return any(b.status != CLOSED and account_id in b.commits for b in ballots)


def lock_stake(account: Account, amount: FireAmount, ballots: Iterable[Ballot] = ()) -> Account:
    checked(amount)
    if amount == 0:
        return account
    if has_outstanding_commit(account.id, ballots):
        raise GovernanceError(f"{account.id}: stake is frozen while a committed ballot is open")
    account.debit(amount)
    account.locked += amount
    return account


def unlock_stake(account: Account, amount: FireAmount, ballots: Iterable[Ballot] = ()) -> Account:
    checked(amount)
    if amount == 0:
        return account
    if has_outstanding_commit(account.id, ballots):
        raise GovernanceError(f"{account.id}: stake is frozen while a committed ballot is open")
    if amount > account.locked:
        raise GovernanceError(f"{account.id}: cannot unlock {amount}, only {account.locked} locked")
    account.locked -= amount
    account.balance += amount
    return account


def commit_vote(ballot: Ballot, voter: Account, digest: str, ranks: RankConfig) -> Ballot:
    if ballot.status != OPEN:
        raise GovernanceError(f"ballot {ballot.id} is not accepting commits ({ballot.status})")
    if not is_citizen(voter, ranks):
        raise GovernanceError(f"{voter.id} is not a Citizen")
    if voter.id in ballot.commits:
        raise GovernanceError(f"{voter.id} already committed on {ballot.id}")
    ballot.commits[voter.id] = digest
    return ballot


def reveal_vote(
    ballot: Ballot, voter_id: str, choice: str, nonce: str, digest: DigestFn = sha256_digest
) -> bool:
    """Record a reveal; returns whether it was counted.

    A reveal that does not match its commit (or names a choice the ballot
    does not offer) is discarded and remembered in ``invalid_reveals``.
    """
    if ballot.status != REVEAL:
        raise GovernanceError(f"ballot {ballot.id} is not in its reveal phase ({ballot.status})")
    if voter_id not in ballot.commits:
        raise GovernanceError(f"{voter_id} has no commit on {ballot.id}")
    if voter_id in ballot.reveals:
        raise GovernanceError(f"{voter_id} already revealed on {ballot.id}")
    if digest(choice, nonce) != ballot.commits[voter_id] or choice not in ballot.choices:
        ballot.invalid_reveals.append(voter_id)
        return False
    ballot.reveals[voter_id] = choice
    return True


@dataclass(frozen=True)
class ElectionTally:
    candidate: str
    yes: int
    no: int
    citizen_count: int

    def passes(self, majority: Fraction = ELECTION_MAJORITY) -> bool:
        return self.citizen_count > 0 and self.yes >= ceil_share(self.citizen_count, majority)

    def summary(self) -> dict:
        return {"yes": self.yes, "no": self.no, "citizen_count": self.citizen_count}


@dataclass(frozen=True)
class SurplusTally:
    votes: tuple[tuple[str, int], ...]

    def as_dict(self) -> dict[str, int]:
        return dict(self.votes)

    def summary(self) -> dict:
        return {"votes": [list(v) for v in self.votes]}


def tally_ballot(ballot: Ballot) -> ElectionTally | SurplusTally:
    """Count revealed votes; unrevealed commits are abstentions."""
    if ballot.status != CLOSED:
        raise GovernanceError(f"ballot {ballot.id} is not closed")
    chosen = list(ballot.reveals.values())
    if ballot.kind == "election":
        return ElectionTally(
            ballot.candidates[0], chosen.count("yes"), chosen.count("no"), len(ballot.commits)
        )
    if not ballot.commits:
        return SurplusTally(())
    counts = {c: chosen.count(c) for c in ballot.candidates}
    return SurplusTally(tuple(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))))


def ballot_record(ballot: Ballot, result) -> dict:
    return {
        "ballot_id": ballot.id,
        "kind": ballot.kind,
        "phase_transitions": dict(ballot.transitions),
        "commits_n": len(ballot.commits),
        "reveals_n": len(ballot.reveals),
        "result": result,
    }
