"""Deterministic end-to-end scenario runs and their report files."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from . import consensus as cs
from . import governance as gov
from .chain import Authority, ChainConfig, ChainState
from .emission import COIN, EmissionRow, EmissionState, base_reward, genesis_premine, mint, write_emission_csv
from .errors import FireError, InvariantViolation, ProtocolError
from .scenario import Event, Scenario
from .settlement import Accrual, Campaign, ComputeShare
from .surplus import run_surplus_round

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    state: ChainState
    emission_rows: list[EmissionRow] = field(default_factory=list)
    block_log: list[dict] = field(default_factory=list)
    settlement_log: list[dict] = field(default_factory=list)
    ballot_log: list[dict] = field(default_factory=list)
    surplus_log: list[dict] = field(default_factory=list)
    supply_checks: int = 0

    @property
    def digest(self) -> str:
        return self.state.digest()

    def summary(self) -> dict:
        e = self.state.emission
        return {
            "final_height": self.state.height,
            "minted_atomic": e.minted,
            "vaporized_atomic": e.vaporized,
            "circulating_atomic": e.circulating,
            "total_supply_display": e.msupply // COIN,
            "digest": self.digest,
        }


def build_genesis(scenario: Scenario) -> ChainState:
    cfg = scenario.config
    emission = EmissionState(
        msupply=cfg.msupply,
        speed_factor=cfg.speed_factor,
        block_interval_s=cfg.block_interval_s,
        median_window=cfg.median_window,
    )
    tranches = genesis_premine(cfg.premine_split, cfg.premine_coins, cfg.msupply)
    emission = mint(emission, sum(t.amount for t in tranches))
    chain_cfg = ChainConfig(
        full_reward_zone=cfg.full_reward_zone,
        default_block_size=cfg.default_block_size,
        consensus_quorum=cfg.consensus_quorum,
        election_majority=cfg.election_majority,
        min_authority_stake=cfg.min_authority_stake,
        ranks=gov.RankConfig(cfg.rank_table, cfg.citizen_lock_threshold),
    )
    state = ChainState.genesis(chain_cfg, emission, tranches)
    state.pool.sufficiency_coefficient = cfg.sufficiency_coefficient
    for aid, points in cfg.accounts.items():
        state.account(aid).contribution_points = points
    for spec in cfg.authorities:
        try:
            state.account(spec.source).debit(spec.stake)
        except gov.GovernanceError as exc:
            raise ProtocolError(f"genesis: cannot fund stake of {spec.id}: {exc}") from None
        state.account(spec.id)
        state.authorities[spec.id] = Authority(spec.id, spec.stake)
    for b in scenario.ballots:
        state.ballots[b.id] = gov.Ballot(b.id, b.kind, b.opens, b.reveal_at, b.closes, b.candidates)
    return state


# -- per-height event handling ------------------------------------------------

def _apply_event(state: ChainState, ev: Event) -> None:
    a = ev.args
    ranks = state.config.ranks
    if ev.type == "create_campaign":
        orator = state.account(a["orator"])
        if not gov.is_orator_eligible(orator, ranks):
            raise ProtocolError(f"{orator.id} has not advanced beyond Level 1 Tourist")
        state.campaigns[a["id"]] = Campaign(a["id"], a["orator"], a["required_amount"], a["deadline"])
    elif ev.type == "direct_donation":
        campaign = state.campaigns[a["campaign"]]
        if not campaign.is_open:
            raise ProtocolError(f"campaign {campaign.id} is already settled")
        accepted = min(a["amount"], campaign.room)
        state.account(a["donor"]).debit(accepted)
        campaign.credit_direct(accepted)
    elif ev.type == "transfer":
        state.account(a["from"]).debit(a["amount"])
        state.account(a["to"]).credit(a["amount"])
    elif ev.type == "lock_stake":
        gov.lock_stake(state.account(a["account"]), a["amount"], state.ballots.values())
    elif ev.type == "unlock_stake":
        gov.unlock_stake(state.account(a["account"]), a["amount"], state.ballots.values())
    elif ev.type == "award_points":
        state.account(a["account"]).contribution_points += a["points"]
    elif ev.type == "commit":
        digest = a.get("digest") or state.config.digest(a["choice"], a["nonce"])
        gov.commit_vote(state.ballots[a["ballot"]], state.account(a["voter"]), digest, ranks)
    elif ev.type == "reveal":
        gov.reveal_vote(state.ballots[a["ballot"]], a["voter"], a["choice"], a["nonce"], state.config.digest)
    else:
        raise AssertionError(ev.type)


def _close_ballots(state: ChainState, height: int, result: RunResult) -> None:
    for bid in sorted(state.ballots):
        ballot = state.ballots[bid]
        if gov.CLOSED not in ballot.advance(height):
            continue
        tally = gov.tally_ballot(ballot)
        outcome = tally.summary()
        if ballot.kind == "election":
            try:
                outcome["admitted"] = cs.admit_authority(state, tally.candidate, tally)
            except FireError as exc:
                outcome["admitted"] = False
                outcome["error"] = str(exc)
        else:
            left = {
                c: state.campaigns[c].room
                for c in ballot.candidates
                if c in state.campaigns and state.campaigns[c].room > 0
            }
            rnd = run_surplus_round(state.pool, tally, left, state.surplus_rounds)
            state.surplus_rounds += 1
            for cid, amount in rnd.payouts.items():
                state.campaigns[cid].credit_direct(amount, from_surplus=True)
            result.surplus_log.append(rnd.record())
            outcome["payouts"] = [[c, v] for c, v in rnd.payouts.items()]
        result.ballot_log.append(gov.ballot_record(ballot, outcome))


# -- block production ---------------------------------------------------------

def _faulty_block(state: ChainState, fault: dict, shares, size: int) -> cs.Block:
    block = cs.honest_block(state, shares, size)
    kind = fault["kind"]
    if kind == "bad_mint":
        declared = block.declared_mint + fault.get("delta", 1)
        return replace(block, declared_mint=declared,
                       allocation=cs.expected_allocation(state, shares, declared))
    if kind == "bad_allocation":
        alloc = dict(block.allocation)
        if alloc:
            cid = next(iter(alloc))
            alloc[cid] = Accrual(alloc[cid].amount + 1, alloc[cid].per_backer)
        else:
            alloc["<forged>"] = Accrual(1, {})
        return replace(block, allocation=alloc)
    if kind == "oversize":
        oversize = 2 * state.median() + 1
        declared = base_reward(state.emission)
        return replace(block, size_bytes=oversize, declared_mint=declared,
                       allocation=cs.expected_allocation(state, shares, declared))
    if kind == "bad_proposer":
        active = state.active_authorities()
        claimed = fault.get("proposer")
        if claimed is None:
            others = [x for x in active if x != block.proposer]
            if not others:
                raise ProtocolError("bad_proposer fault needs a second authority")
            claimed = others[0]
        return replace(block, proposer=claimed)
    return block  # withhold: a valid block some authorities refuse to sign


class LiveDriver:
    """Honest validators plus scenario-injected faults."""

    def produce(self, state, height, shares, size, fault, result):
        attempt = 0
        while True:
            if fault and attempt == 0:
                block = _faulty_block(state, fault, shares, size)
                verdict = cs.validate_block(state, block)
                colluders = set(fault.get("colluders", ())) | {block.proposer}
                abstain = set(fault.get("abstain", ()))
                votes = {
                    a for a in state.active_authorities()
                    if a not in abstain and (a in colluders or verdict.valid)
                }
            else:
                block = cs.honest_block(state, shares, size)
                verdict = cs.validate_block(state, block)
                votes = set(state.active_authorities()) if verdict.valid else set()
            res = cs.finalize_block(state, block, votes, verdict)
            _record_block(state, res, result)
            if res.finalized:
                return
            attempt += 1


class ReplayDriver:
    """Re-drive a run from its block log instead of from validator behaviour."""

    def __init__(self, records: Iterable[dict]):
        self.by_height: dict[int, list[dict]] = defaultdict(list)
        for r in records:
            self.by_height[r["height"]].append(r)

    def produce(self, state, height, shares, size, fault, result):
        for rec in self.by_height.get(height, []):
            if not rec["finalized"]:
                for a in rec["slashed"]:
                    cs.slash_authority(state, a)
                result.block_log.append(dict(rec))
                continue
            block = cs.Block(
                height=height,
                proposer=rec["proposer"],
                size_bytes=rec["size"],
                shares=tuple(shares),
                declared_mint=rec["mint"],
                allocation=cs.expected_allocation(state, shares, rec["mint"]),
            )
            res = cs.finalize_block(state, block, rec["votes"])
            if not res.finalized:
                raise InvariantViolation("block log replays", f"height {height}: {res.verdict.reason}")
            _record_block(state, res, result)
        if state.height != height:
            raise InvariantViolation("block log replays", f"no finalized block at height {height}")


def _record_block(state: ChainState, res: cs.FinalizeResult, result: RunResult) -> None:
    result.block_log.append(res.record())
    result.settlement_log.extend(res.settlements)
    if res.finalized:
        e = state.emission
        result.emission_rows.append(EmissionRow(res.block.height, res.block.declared_mint, e.minted, e.vaporized))
    if res.slashed:
        log.info("height %d: slashed %s (%s)", res.block.height, res.slashed, res.verdict.reason)


def _check(state: ChainState, result: RunResult, enabled: bool) -> None:
    if enabled:
        state.check_supply()
        result.supply_checks += 1


def run_scenario(scenario: Scenario, *, driver=None, check_invariants: bool = True) -> RunResult:
    """Advance the chain from genesis to the scenario horizon.

    Each height: ballots change phase (closing ones are tallied and acted
    on), the height's events apply in file order, then a block is proposed,
    voted on and finalized.  The supply invariant is checked after every
    step when ``check_invariants`` is set.
    """
    driver = driver or LiveDriver()
    state = build_genesis(scenario)
    result = RunResult(state)
    _check(state, result, check_invariants)

    by_height: dict[int, list[Event]] = defaultdict(list)
    for ev in scenario.events:
        by_height[ev.height].append(ev)

    for height in range(1, scenario.horizon + 1):
        _close_ballots(state, height, result)
        shares: list[ComputeShare] = []
        size = state.config.default_block_size
        fault = None
        for ev in by_height.get(height, []):
            if ev.type == "compute_share":
                shares.append(ComputeShare(ev.args["backer"], ev.args["campaign"], ev.args["units"]))
            elif ev.type == "block_size":
                size = ev.args["bytes"]
            elif ev.type == "fault":
                fault = ev.args
            else:
                try:
                    _apply_event(state, ev)
                except InvariantViolation:
                    raise
                except FireError as exc:
                    raise ProtocolError(f"events[{ev.index}] ({ev.type} at height {height}): {exc}") from exc
        _check(state, result, check_invariants)
        driver.produce(state, height, shares, size, fault, result)
        _check(state, result, check_invariants)
    return result


def replay_block_log(scenario: Scenario, records: Iterable[dict]) -> RunResult:
    return run_scenario(scenario, driver=ReplayDriver(records))


# -- reports ------------------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    emission_csv: Path
    settlement_log: Path
    block_log: Path
    ballot_log: Path
    surplus_log: Path
    summary: Path
    digest: str


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with path.open("w", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def emit_reports(result: RunResult, out_dir: str | Path) -> RunReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(
        emission_csv=out / "emission.csv",
        settlement_log=out / "settlements.jsonl",
        block_log=out / "blocks.jsonl",
        ballot_log=out / "ballots.jsonl",
        surplus_log=out / "surplus.jsonl",
        summary=out / "summary.json",
        digest=result.digest,
    )
    with report.emission_csv.open("w", newline="\n") as fh:
        write_emission_csv(result.emission_rows, fh)
    _write_jsonl(report.settlement_log, result.settlement_log)
    _write_jsonl(report.block_log, result.block_log)
    _write_jsonl(report.ballot_log, result.ballot_log)
    _write_jsonl(report.surplus_log, result.surplus_log)
    report.summary.write_text(json.dumps(result.summary(), indent=2) + "\n")
    return report
