"""Quorum counting for federation decisions (2f+1 confirmations out of 3f+1)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Vote(str, enum.Enum):
    CONFIRM = "confirm"
    REJECT = "reject"


class Decision(str, enum.Enum):
    COMMITTED = "committed"
    DISCARDED = "discarded"


def fault_budget(n: int) -> int:
    if n < 1:
        raise ValueError("federation size must be at least 1")
    return (n - 1) // 3


def quorum_size(n: int) -> int:
    return 2 * fault_budget(n) + 1


@dataclass
class VoteRound:
    proposal_id: str
    proposer: str
    n: int
    votes: dict[str, Vote] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("federation size must be at least 1")
        # a member proposer confirms its own proposal; "" marks an outside submission
        if self.proposer:
            self.votes.setdefault(self.proposer, Vote.CONFIRM)

    def cast(self, voter: str, vote: Vote) -> bool:
        """Record a vote; a second vote from the same voter is ignored."""
        if voter in self.votes:
            return False
        self.votes[voter] = Vote(vote)
        return True

    @property
    def confirms(self) -> int:
        return sum(v is Vote.CONFIRM for v in self.votes.values())

    @property
    def complete(self) -> bool:
        return len(self.votes) >= self.n


def decide(round: VoteRound) -> Decision:
    """Committed iff confirmations reach the quorum; absent votes count as rejections."""
    if round.confirms >= quorum_size(round.n):
        return Decision.COMMITTED
    return Decision.DISCARDED
