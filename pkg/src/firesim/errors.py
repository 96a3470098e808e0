"""Exception hierarchy for the simulator."""


class FireError(Exception):
    """Base class for every error raised by firesim."""


class AmountOverflow(FireError, OverflowError):
    """An atomic amount left the range [0, MSUPPLY]."""


class AccountingViolation(FireError):
    """A ledger operation would break supply accounting."""


class BlockRejected(FireError):
    """A block is structurally unacceptable (e.g. larger than twice the median)."""


class ConfigError(FireError, ValueError):
    pass


class SettlementError(FireError):
    pass


class ConsensusHalt(FireError):
    """No active authority is left to propose blocks."""


class SlashingError(FireError):
    pass


class AdmissionError(FireError):
    pass


class GovernanceError(FireError):
    """Ballot, stake lock or rank rule violated."""


class ProtocolError(FireError):
    """A scenario event broke a protocol rule while the chain was running."""


class InvariantViolation(FireError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ScenarioError(FireError, ValueError):
    """Scenario file failed validation.

    ``kind`` is one of ``syntax``, ``unknown_field``, ``missing_field``,
    ``invalid_value``, ``dangling_id``, ``unsorted_events``.
    """

    def __init__(self, kind: str, location: str, message: str):
        self.kind = kind
        self.location = location
        super().__init__(f"{location}: {kind}: {message}")
