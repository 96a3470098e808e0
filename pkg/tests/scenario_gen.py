"""Seeded generator of random but valid scenarios for invariant sweeps."""

import random

COIN = 10**10


def random_scenario(seed: int, horizon: int = 40) -> dict:
    rng = random.Random(seed)
    n_auth = rng.randint(1, 7)
    backers = ["b1", "b2", "b3", "b4"]
    events = []

    def add(h, etype, **kw):
        events.append({"height": h, "type": etype, **kw})

    citizens = []
    for b in backers:
        add(1, "transfer", **{"from": "community", "to": b, "amount": 10_000 * COIN})
        if rng.random() < 0.7:
            add(1, "lock_stake", account=b, amount=1_000 * COIN)
            citizens.append(b)
    campaigns = []
    for i in range(rng.randint(1, 5)):
        cid = f"c{i}"
        h = rng.randint(1, horizon // 2)
        add(h, "create_campaign", id=cid, orator="orator",
            required_amount=rng.randint(1, 3_000) * COIN, deadline=rng.randint(h, horizon))
        campaigns.append((h, cid))
        # donations only on the creation height, before it can have settled
        if rng.random() < 0.5:
            add(h, "direct_donation", donor=rng.choice(backers), campaign=cid,
                amount=rng.randint(0, 2_000) * COIN)
    ballots = []
    if citizens and rng.random() < 0.8:
        closes = rng.randint(horizon // 2 + 3, horizon)
        ballots.append({"id": "pool", "kind": "surplus", "opens": horizon // 2,
                        "reveal_at": horizon // 2 + 1, "closes": closes,
                        "candidates": [c for _, c in campaigns]})
        for b in citizens:
            choice = rng.choice(campaigns)[1]
            add(horizon // 2, "commit", ballot="pool", voter=b, choice=choice, nonce=f"{seed}-{b}")
            if rng.random() < 0.8:
                add(horizon // 2 + 1, "reveal", ballot="pool", voter=b, choice=choice, nonce=f"{seed}-{b}")
    fault_at = None
    for h in range(1, horizon + 1):
        for created, cid in campaigns:
            if created <= h and rng.random() < 0.6:
                add(h, "compute_share", backer=rng.choice(backers), campaign=cid, units=rng.randint(1, 9))
        if rng.random() < 0.2:
            add(h, "block_size", bytes=rng.randint(0, 60_000))
        # at most one fault, and never enough colluders to slash every authority
        if fault_at is None and n_auth >= 3 and h > 2 and rng.random() < 0.1:
            fault_at = h
            ids = [f"s{i}" for i in range(n_auth)]
            kind = rng.choice(["bad_mint", "bad_allocation", "oversize", "bad_proposer", "withhold"])
            add(h, "fault", kind=kind, colluders=rng.sample(ids, rng.randint(0, n_auth - 2)),
                abstain=rng.sample(ids, rng.randint(0, n_auth // 2)))
    events.sort(key=lambda e: e["height"])
    return {
        "horizon": horizon,
        "seed": seed,
        "config": {
            "premine_coins": rng.choice([0, 1_000_000, 368_934_881]) or 1_000_000,
            "authorities": [{"id": f"s{i}", "stake": rng.randint(1, 5_000) * COIN} for i in range(n_auth)],
            "citizen_lock_threshold": 1_000 * COIN,
            "sufficiency_coefficient": rng.choice(["1", "3/2", "2"]),
            "accounts": [{"id": "orator", "points": 60}] + [{"id": b, "points": 300} for b in backers],
        },
        "ballots": ballots,
        "events": events,
    }
