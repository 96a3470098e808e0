"""Exact integer pro-rata splitting (largest-remainder / Hamilton method)."""

from __future__ import annotations

from typing import Hashable, Sequence, TypeVar

K = TypeVar("K", bound=Hashable)


def largest_remainder(total: int, weighted: Sequence[tuple[K, int]]) -> dict[K, int]:
    """Split ``total`` over ``weighted`` in proportion to each weight.

    Every entry first gets ``floor(total * w / W)``; the leftover units go one
    each to the entries with the largest remainders.  Equal remainders are
    resolved by position in ``weighted``, so callers control tie-breaking by
    ordering their input.  The result always sums to ``total`` exactly.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    weight_sum = 0
    for key, w in weighted:
        if w < 0:
            raise ValueError(f"negative weight for {key!r}")
        weight_sum += w
    if weight_sum == 0:
        if total:
            raise ValueError("cannot split a non-zero total over zero weight")
        return {key: 0 for key, _ in weighted}

    shares: dict[K, int] = {}
    remainders = []
    handed_out = 0
    for pos, (key, w) in enumerate(weighted):
        q, r = divmod(total * w, weight_sum)
        shares[key] = shares.get(key, 0) + q
        handed_out += q
        remainders.append((-r, pos, key))

    leftover = total - handed_out
    # leftover < len(weighted) by construction
    for _, _, key in sorted(remainders)[:leftover]:
        shares[key] += 1
    return shares


def sorted_by_id(weights: dict[K, int]) -> list[tuple[K, int]]:
    """Order a weight map by key so ties go to the lowest identifier."""
    return sorted(weights.items(), key=lambda kv: kv[0])


def ceil_share(count: int, fraction) -> int:
    """Smallest integer k with k >= count * fraction (fraction a Fraction)."""
    return -(-count * fraction.numerator // fraction.denominator)
