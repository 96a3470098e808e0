"""Scenario files: JSON schema, validation and cross-referencing.

A scenario looks like::

    {
      "horizon": 10,
      "seed": 0,
      "config": {"premine_coins": 368934881,
                 "authorities": [{"id": "s1", "stake": 10000000000000}],
                 "accounts": [{"id": "alice", "points": 60}]},
      "ballots": [],
      "events": [
        {"height": 1, "type": "create_campaign", "id": "c1", "orator": "alice",
         "required_amount": 1000000000000, "deadline": 5},
        {"height": 1, "type": "compute_share", "backer": "alice", "campaign": "c1", "units": 3}
      ]
    }

All amounts are atomic units.  Unknown keys are rejected.  See README.md for
every event type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import emission as em
from .errors import ConfigError, ScenarioError
from .governance import DEFAULT_RANK_TABLE, Rank, validate_rank_table

# field kinds: int (>=0), posint (>0), height, str, account, campaign,
# authority, authorities (list), fraction, choice
EVENT_SCHEMAS: dict[str, dict[str, tuple[str, bool]]] = {
    "create_campaign": {
        "id": ("str", True), "orator": ("account", True),
        "required_amount": ("posint", True), "deadline": ("height", True),
    },
    "compute_share": {"backer": ("account", True), "campaign": ("campaign", True), "units": ("posint", True)},
    "direct_donation": {"donor": ("account", True), "campaign": ("campaign", True), "amount": ("int", True)},
    "transfer": {"from": ("account", True), "to": ("account", True), "amount": ("int", True)},
    "lock_stake": {"account": ("account", True), "amount": ("int", True)},
    "unlock_stake": {"account": ("account", True), "amount": ("int", True)},
    "award_points": {"account": ("account", True), "points": ("int", True)},
    "commit": {
        "ballot": ("ballot", True), "voter": ("account", True),
        "digest": ("str", False), "choice": ("str", False), "nonce": ("str", False),
    },
    "reveal": {"ballot": ("ballot", True), "voter": ("account", True), "choice": ("str", True), "nonce": ("str", True)},
    "block_size": {"bytes": ("int", True)},
    "fault": {
        "kind": ("fault_kind", True), "colluders": ("authorities", False),
        "abstain": ("authorities", False), "delta": ("posint", False), "proposer": ("authority", False),
    },
}
FAULT_KINDS = ("bad_mint", "bad_allocation", "oversize", "bad_proposer", "withhold")
ONCE_PER_HEIGHT = ("block_size", "fault")

CONFIG_FIELDS = {
    "msupply", "speed_factor", "block_interval_s", "median_window", "full_reward_zone",
    "default_block_size", "premine_coins", "premine_split", "authorities", "min_authority_stake",
    "consensus_quorum", "election_majority", "citizen_lock_threshold", "sufficiency_coefficient",
    "rank_table", "accounts",
}
TOP_FIELDS = {"horizon", "seed", "config", "ballots", "events"}


@dataclass(frozen=True)
class Event:
    height: int
    type: str
    args: dict[str, Any]
    index: int


@dataclass(frozen=True)
class AuthoritySpec:
    id: str
    stake: int
    source: str


@dataclass(frozen=True)
class BallotSpec:
    id: str
    kind: str
    opens: int
    reveal_at: int
    closes: int
    candidates: tuple[str, ...]


@dataclass
class ScenarioConfig:
    msupply: int = em.MSUPPLY
    speed_factor: int = em.DEFAULT_SPEED_FACTOR
    block_interval_s: int = em.DEFAULT_BLOCK_INTERVAL_S
    median_window: int = em.DEFAULT_MEDIAN_WINDOW
    full_reward_zone: int = 20_000
    default_block_size: int = 1_000
    premine_coins: int = 0
    premine_split: em.PremineSplit = field(default_factory=em.PremineSplit)
    authorities: list[AuthoritySpec] = field(default_factory=list)
    min_authority_stake: int = 0
    consensus_quorum: Fraction = Fraction(2, 3)
    election_majority: Fraction = Fraction(3, 4)
    citizen_lock_threshold: int = 0
    sufficiency_coefficient: Fraction = Fraction(1)
    rank_table: tuple[Rank, ...] = DEFAULT_RANK_TABLE
    accounts: dict[str, int] = field(default_factory=dict)  # id -> starting points


@dataclass
class Scenario:
    config: ScenarioConfig
    events: list[Event]
    ballots: list[BallotSpec]
    horizon: int
    seed: int = 0

    def events_at(self, height: int) -> list[Event]:
        return [e for e in self.events if e.height == height]


def _fail(kind, loc, msg):
    raise ScenarioError(kind, loc, msg)


def _check_keys(obj, allowed, required, loc):
    if not isinstance(obj, dict):
        _fail("invalid_value", loc, "expected an object")
    for k in obj:
        if k not in allowed:
            _fail("unknown_field", f"{loc}.{k}" if loc else k, "unknown field")
    for k in required:
        if k not in obj:
            _fail("missing_field", f"{loc}.{k}" if loc else k, "required field missing")


def _int(value, loc, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail("invalid_value", loc, f"expected an integer, got {value!r}")
    if value < minimum:
        _fail("invalid_value", loc, f"must be >= {minimum}, got {value}")
    return value


def _str(value, loc):
    if not isinstance(value, str) or not value:
        _fail("invalid_value", loc, f"expected a non-empty string, got {value!r}")
    return value


def _fraction(value, loc):
    try:
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ValueError
        f = Fraction(value)
    except (ValueError, ZeroDivisionError):
        _fail("invalid_value", loc, f"expected a fraction like '2/3', got {value!r}")
    if f <= 0:
        _fail("invalid_value", loc, "must be positive")
    return f


def _list(value, loc):
    if not isinstance(value, list):
        _fail("invalid_value", loc, "expected a list")
    return value


def _parse_config(raw, loc="config") -> ScenarioConfig:
    _check_keys(raw, CONFIG_FIELDS, (), loc)
    cfg = ScenarioConfig()
    for key in ("msupply", "speed_factor", "full_reward_zone", "default_block_size",
                "premine_coins", "min_authority_stake", "citizen_lock_threshold"):
        if key in raw:
            setattr(cfg, key, _int(raw[key], f"{loc}.{key}"))
    for key in ("block_interval_s", "median_window"):
        if key in raw:
            setattr(cfg, key, _int(raw[key], f"{loc}.{key}", 1))
    if cfg.msupply > em.MSUPPLY or cfg.msupply == 0:
        _fail("invalid_value", f"{loc}.msupply", "must be in [1, 2^64-1]")
    for key in ("consensus_quorum", "election_majority", "sufficiency_coefficient"):
        if key in raw:
            setattr(cfg, key, _fraction(raw[key], f"{loc}.{key}"))
    for key in ("consensus_quorum", "election_majority"):
        if getattr(cfg, key) > 1:
            _fail("invalid_value", f"{loc}.{key}", "must not exceed 1")

    if "premine_split" in raw:
        sloc = f"{loc}.premine_split"
        _check_keys(raw["premine_split"], set(em.TRANCHES), em.TRANCHES, sloc)
        cfg.premine_split = em.PremineSplit(
            **{k: _int(v, f"{sloc}.{k}") for k, v in raw["premine_split"].items()}
        )
        if sum(p for _, p in cfg.premine_split.items()) != 1000:
            _fail("invalid_value", sloc, "permilles must sum to 1000")
    if cfg.premine_coins * em.COIN > cfg.msupply:
        _fail("invalid_value", f"{loc}.premine_coins", "premine exceeds msupply")

    if "rank_table" in raw:
        rows = []
        for i, r in enumerate(_list(raw["rank_table"], f"{loc}.rank_table")):
            rloc = f"{loc}.rank_table[{i}]"
            _check_keys(r, {"title", "level", "min_points"}, ("title", "level", "min_points"), rloc)
            rows.append(Rank(_str(r["title"], f"{rloc}.title"), _int(r["level"], f"{rloc}.level", 1),
                             _int(r["min_points"], f"{rloc}.min_points")))
        try:
            validate_rank_table(rows)
        except ConfigError as exc:
            _fail("invalid_value", f"{loc}.rank_table", str(exc))
        cfg.rank_table = tuple(rows)

    reserved = set(em.TRANCHES)
    for i, a in enumerate(_list(raw.get("accounts", []), f"{loc}.accounts")):
        aloc = f"{loc}.accounts[{i}]"
        _check_keys(a, {"id", "points"}, ("id",), aloc)
        aid = _str(a["id"], f"{aloc}.id")
        if aid in cfg.accounts or aid in reserved:
            _fail("invalid_value", f"{aloc}.id", f"duplicate or reserved account id {aid!r}")
        cfg.accounts[aid] = _int(a.get("points", 0), f"{aloc}.points")

    seen = set()
    for i, a in enumerate(_list(raw.get("authorities", []), f"{loc}.authorities")):
        aloc = f"{loc}.authorities[{i}]"
        _check_keys(a, {"id", "stake", "source"}, ("id", "stake"), aloc)
        aid = _str(a["id"], f"{aloc}.id")
        if aid in seen or aid in reserved:
            _fail("invalid_value", f"{aloc}.id", f"duplicate or reserved authority id {aid!r}")
        seen.add(aid)
        stake = _int(a["stake"], f"{aloc}.stake")
        if stake < cfg.min_authority_stake:
            _fail("invalid_value", f"{aloc}.stake", "below min_authority_stake")
        cfg.authorities.append(AuthoritySpec(aid, stake, _str(a.get("source", "foundation"), f"{aloc}.source")))
    return cfg


def _parse_ballot(raw, loc, horizon) -> BallotSpec:
    _check_keys(raw, {"id", "kind", "opens", "reveal_at", "closes", "candidate", "candidates"},
                ("id", "kind", "opens", "reveal_at", "closes"), loc)
    kind = raw["kind"]
    if kind not in ("election", "surplus"):
        _fail("invalid_value", f"{loc}.kind", "must be 'election' or 'surplus'")
    opens, reveal_at, closes = (_int(raw[k], f"{loc}.{k}", 1) for k in ("opens", "reveal_at", "closes"))
    if not opens < reveal_at < closes:
        _fail("invalid_value", loc, "need opens < reveal_at < closes")
    if closes > horizon:
        _fail("invalid_value", f"{loc}.closes", "ballot closes after the horizon")
    if kind == "election":
        if "candidate" not in raw or "candidates" in raw:
            _fail("missing_field", f"{loc}.candidate", "an election names one 'candidate'")
        cands = (_str(raw["candidate"], f"{loc}.candidate"),)
    else:
        if "candidates" not in raw or "candidate" in raw:
            _fail("missing_field", f"{loc}.candidates", "a surplus ballot lists 'candidates'")
        cands = tuple(_str(c, f"{loc}.candidates[{j}]")
                      for j, c in enumerate(_list(raw["candidates"], f"{loc}.candidates")))
        if len(set(cands)) != len(cands):
            _fail("invalid_value", f"{loc}.candidates", "duplicate candidate")
    return BallotSpec(_str(raw["id"], f"{loc}.id"), kind, opens, reveal_at, closes, cands)


def parse_scenario(raw: Any) -> Scenario:
    _check_keys(raw, TOP_FIELDS, ("horizon",), "")
    horizon = _int(raw["horizon"], "horizon")
    seed = _int(raw.get("seed", 0), "seed")
    cfg = _parse_config(raw.get("config", {}))

    ballots: list[BallotSpec] = []
    for i, b in enumerate(_list(raw.get("ballots", []), "ballots")):
        spec = _parse_ballot(b, f"ballots[{i}]", horizon)
        if any(o.id == spec.id for o in ballots):
            _fail("invalid_value", f"ballots[{i}].id", f"duplicate ballot id {spec.id!r}")
        ballots.append(spec)
    ballot_ids = {b.id for b in ballots}

    accounts = set(cfg.accounts) | set(em.TRANCHES) | {a.id for a in cfg.authorities}
    authorities = {a.id for a in cfg.authorities} | {b.candidates[0] for b in ballots if b.kind == "election"}
    for i, a in enumerate(cfg.authorities):
        if a.source not in accounts:
            _fail("dangling_id", f"config.authorities[{i}].source", f"undeclared account {a.source!r}")
    campaigns_created: dict[str, int] = {}

    events: list[Event] = []
    last_height = 0
    per_height_once: set[tuple[int, str]] = set()
    for i, ev in enumerate(_list(raw.get("events", []), "events")):
        loc = f"events[{i}]"
        if not isinstance(ev, dict):
            _fail("invalid_value", loc, "expected an object")
        if "type" not in ev:
            _fail("missing_field", f"{loc}.type", "required field missing")
        etype = ev["type"]
        if etype not in EVENT_SCHEMAS:
            _fail("invalid_value", f"{loc}.type", f"unknown event type {etype!r}")
        schema = EVENT_SCHEMAS[etype]
        _check_keys(ev, set(schema) | {"height", "type"},
                    ["height"] + [k for k, (_, req) in schema.items() if req], loc)
        height = _int(ev["height"], f"{loc}.height", 1)
        if height > horizon:
            _fail("invalid_value", f"{loc}.height", f"height {height} beyond horizon {horizon}")
        if height < last_height:
            _fail("unsorted_events", f"{loc}.height", f"height {height} after {last_height}")
        last_height = height
        if etype in ONCE_PER_HEIGHT:
            if (height, etype) in per_height_once:
                _fail("invalid_value", loc, f"more than one {etype} event at height {height}")
            per_height_once.add((height, etype))

        args: dict[str, Any] = {}
        for key, (kind, _) in schema.items():
            if key not in ev:
                continue
            floc, v = f"{loc}.{key}", ev[key]
            if kind == "int":
                args[key] = _int(v, floc)
            elif kind == "posint":
                args[key] = _int(v, floc, 1)
            elif kind == "height":
                args[key] = _int(v, floc, height)
            elif kind == "str":
                args[key] = _str(v, floc)
            elif kind == "fault_kind":
                if v not in FAULT_KINDS:
                    _fail("invalid_value", floc, f"fault kind must be one of {FAULT_KINDS}")
                args[key] = v
            elif kind == "account":
                if _str(v, floc) not in accounts:
                    _fail("dangling_id", floc, f"undeclared account {v!r}")
                args[key] = v
            elif kind == "campaign":
                if _str(v, floc) not in campaigns_created:
                    _fail("dangling_id", floc, f"campaign {v!r} not created at or before height {height}")
                args[key] = v
            elif kind == "ballot":
                if _str(v, floc) not in ballot_ids:
                    _fail("dangling_id", floc, f"undeclared ballot {v!r}")
                args[key] = v
            elif kind == "authority":
                if _str(v, floc) not in authorities:
                    _fail("dangling_id", floc, f"undeclared authority {v!r}")
                args[key] = v
            elif kind == "authorities":
                ids = [_str(x, f"{floc}[{j}]") for j, x in enumerate(_list(v, floc))]
                for j, x in enumerate(ids):
                    if x not in authorities:
                        _fail("dangling_id", f"{floc}[{j}]", f"undeclared authority {x!r}")
                args[key] = tuple(ids)

        if etype == "create_campaign":
            if args["id"] in campaigns_created:
                _fail("invalid_value", f"{loc}.id", f"campaign {args['id']!r} created twice")
            if args["required_amount"] > cfg.msupply:
                _fail("invalid_value", f"{loc}.required_amount", "exceeds msupply")
            campaigns_created[args["id"]] = height
        if etype == "commit":
            has_digest = "digest" in args
            has_plain = "choice" in args and "nonce" in args
            if has_digest == has_plain or (has_digest and ("choice" in args or "nonce" in args)):
                _fail("invalid_value", loc, "commit needs either 'digest' or both 'choice' and 'nonce'")
        events.append(Event(height, etype, args, i))

    for i, b in enumerate(ballots):
        if b.kind == "surplus":
            for j, c in enumerate(b.candidates):
                if c not in campaigns_created:
                    _fail("dangling_id", f"ballots[{i}].candidates[{j}]", f"campaign {c!r} is never created")
        elif b.candidates[0] not in accounts:
            _fail("dangling_id", f"ballots[{i}].candidate", f"undeclared account {b.candidates[0]!r}")
    return Scenario(cfg, events, ballots, horizon, seed)


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("syntax", f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_scenario(raw)
