"""Supply arithmetic: block reward, vaporization, premine and size penalty.

All quantities are atomic units held in plain Python ints.  Python ints
never wrap, so the 64-bit bound is enforced explicitly by :func:`checked`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, Sequence

from .allocation import largest_remainder
from .errors import AccountingViolation, AmountOverflow, BlockRejected, ConfigError

MSUPPLY = 2**64 - 1
DISPLAY_DECIMALS = 10
COIN = 10**DISPLAY_DECIMALS

DEFAULT_SPEED_FACTOR = 23
DEFAULT_BLOCK_INTERVAL_S = 10
DEFAULT_MEDIAN_WINDOW = 100

PREMINE_COINS = 368_934_881

EMISSION_CSV_HEADER = "height,reward_atomic,minted_atomic,vaporized_atomic,circulating_atomic"

FireAmount = int


def checked(amount: int, what: str = "amount") -> FireAmount:
    """Return ``amount`` if it is a valid atomic quantity, else raise."""
    if isinstance(amount, bool) or not isinstance(amount, int):
        raise TypeError(f"{what} must be an int, got {type(amount).__name__}")
    if amount < 0 or amount > MSUPPLY:
        raise AmountOverflow(f"{what}={amount} outside [0, 2^64-1]")
    return amount


def to_display(amount: FireAmount) -> int:
    """Whole display coins in ``amount`` (floored)."""
    return amount // COIN


@dataclass(frozen=True)
class EmissionState:
    msupply: FireAmount = MSUPPLY
    minted: FireAmount = 0
    vaporized: FireAmount = 0
    speed_factor: int = DEFAULT_SPEED_FACTOR
    block_interval_s: int = DEFAULT_BLOCK_INTERVAL_S
    median_window: int = DEFAULT_MEDIAN_WINDOW

    def __post_init__(self):
        checked(self.msupply, "msupply")
        checked(self.minted, "minted")
        checked(self.vaporized, "vaporized")
        if self.minted > self.msupply:
            raise AccountingViolation("minted exceeds msupply")
        if self.vaporized > self.minted:
            raise AccountingViolation("vaporized exceeds minted")
        if self.speed_factor < 0 or self.median_window < 1 or self.block_interval_s < 1:
            raise ConfigError("speed_factor >= 0, median_window >= 1, block_interval_s >= 1")

    @property
    def circulating(self) -> FireAmount:
        return self.minted - self.vaporized


def base_reward(state: EmissionState) -> FireAmount:
    """(MSupply - (A - R)) >> speed_factor."""
    return (state.msupply - (state.minted - state.vaporized)) >> state.speed_factor


def mint(state: EmissionState, amount: FireAmount) -> EmissionState:
    checked(amount)
    if state.minted + amount > state.msupply:
        raise AmountOverflow("minting past msupply")
    if amount == 0:
        return state
    return replace(state, minted=state.minted + amount)


def vaporize(state: EmissionState, amount: FireAmount) -> EmissionState:
    """Return ``amount`` (already debited by the caller) to the mintable pool."""
    checked(amount)
    if amount > state.circulating:
        raise AccountingViolation(
            f"cannot vaporize {amount}: only {state.circulating} in circulation"
        )
    if amount == 0:
        return state
    return replace(state, vaporized=state.vaporized + amount)


def penalty_factor(block_size: int, median: int) -> Fraction:
    """Exact reward multiplier ``1 - (size/median - 1)^2`` for an over-median block."""
    if median <= 0:
        raise ValueError("median must be positive")
    if block_size < 0:
        raise ValueError("block size must be non-negative")
    if block_size > 2 * median:
        raise BlockRejected(f"block of {block_size} bytes exceeds 2*median={2 * median}")
    if block_size <= median:
        return Fraction(1)
    excess = Fraction(block_size - median, median)
    return 1 - excess * excess


def penalized_reward(base: FireAmount, block_size: int, median: int) -> FireAmount:
    factor = penalty_factor(block_size, median)
    # base * num // den on ints; avoids any float on the 128-bit product
    return base * factor.numerator // factor.denominator


def rolling_median(last_sizes: Sequence[int], window: int) -> int:
    """Median of the trailing ``window`` sizes; lower middle for even counts."""
    if not last_sizes:
        raise ValueError("no block sizes recorded")
    if window < 1:
        raise ValueError("window must be >= 1")
    tail = sorted(last_sizes[-window:])
    return tail[(len(tail) - 1) // 2]


@dataclass(frozen=True)
class PremineSplit:
    """Permille shares of the premine, in tie-break order."""

    development: int = 600
    developers_locked: int = 120
    foundation: int = 100
    team: int = 100
    community: int = 50
    advisors: int = 30

    def items(self) -> list[tuple[str, int]]:
        return [(name, getattr(self, name)) for name in TRANCHES]


TRANCHES = ("development", "developers_locked", "foundation", "team", "community", "advisors")
LOCKED_TRANCHES = frozenset({"developers_locked"})


@dataclass(frozen=True)
class Tranche:
    account: str
    amount: FireAmount
    locked: bool


def genesis_premine(
    split: PremineSplit, premine_coins: int, msupply: FireAmount = MSUPPLY
) -> list[Tranche]:
    items = split.items()
    if any(p < 0 for _, p in items) or sum(p for _, p in items) != 1000:
        raise ConfigError("premine permilles must be non-negative and sum to 1000")
    if premine_coins < 0:
        raise ConfigError("premine_coins must be non-negative")
    total = premine_coins * COIN
    if total > msupply:
        raise AmountOverflow("premine exceeds msupply")
    shares = largest_remainder(total, items)
    return [Tranche(name, shares[name], name in LOCKED_TRANCHES) for name, _ in items]


def genesis_state(
    premine_coins: int = 0, split: PremineSplit | None = None, **params
) -> tuple[EmissionState, list[Tranche]]:
    """Fresh emission state with the premine already minted."""
    state = EmissionState(**params)
    tranches = genesis_premine(split or PremineSplit(), premine_coins, state.msupply)
    return mint(state, sum(t.amount for t in tranches)), tranches


@dataclass(frozen=True, slots=True)
class EmissionRow:
    height: int
    reward: FireAmount
    minted: FireAmount
    vaporized: FireAmount = 0

    @property
    def circulating(self) -> FireAmount:
        return self.minted - self.vaporized

    def csv(self) -> str:
        return f"{self.height},{self.reward},{self.minted},{self.vaporized},{self.circulating}"


def iter_emission(state: EmissionState, blocks: int, start_height: int = 1) -> Iterator[EmissionRow]:
    if blocks < 0:
        raise ValueError("blocks must be >= 0")
    remaining = state.msupply - state.circulating
    minted, vap, shift = state.minted, state.vaporized, state.speed_factor
    for height in range(start_height, start_height + blocks):
        reward = remaining >> shift
        remaining -= reward
        minted += reward
        yield EmissionRow(height, reward, minted, vap)


def simulate_emission(state: EmissionState, blocks: int) -> tuple[list[EmissionRow], EmissionState]:
    """Mint the base reward ``blocks`` times; returns the series and final state."""
    rows = list(iter_emission(state, blocks))
    if rows:
        state = replace(state, minted=rows[-1].minted)
    return rows, state


def write_emission_csv(rows, fh) -> None:
    fh.write(EMISSION_CSV_HEADER + "\n")
    for row in rows:
        fh.write(row.csv() + "\n")
