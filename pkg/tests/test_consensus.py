import itertools

import pytest

from fogfed.consensus import Decision, Vote, VoteRound, decide, fault_budget, quorum_size


@pytest.mark.parametrize("n,f,q", [(1, 0, 1), (2, 0, 1), (3, 0, 1), (4, 1, 3), (6, 1, 3), (7, 2, 5), (10, 3, 7)])
def test_budget_and_quorum(n, f, q):
    assert fault_budget(n) == f
    assert quorum_size(n) == q


def test_invalid_sizes():
    with pytest.raises(ValueError):
        fault_budget(0)
    with pytest.raises(ValueError):
        VoteRound("r", "a", 0)


def test_proposer_confirms_implicitly():
    rnd = VoteRound("r", "FN1", 4)
    assert rnd.votes == {"FN1": Vote.CONFIRM}
    assert not rnd.cast("FN1", Vote.REJECT)
    assert rnd.confirms == 1


def test_outside_submission_has_no_implicit_vote():
    assert VoteRound("r", "", 4).votes == {}


def test_duplicate_votes_ignored():
    rnd = VoteRound("r", "FN1", 4)
    assert rnd.cast("FN2", Vote.CONFIRM)
    assert not rnd.cast("FN2", Vote.REJECT)
    assert rnd.votes["FN2"] is Vote.CONFIRM


@pytest.mark.parametrize("n", range(1, 8))
def test_exhaustive_vote_vectors(n):
    voters = [f"FN{i}" for i in range(n)]
    for pattern in itertools.product([None, Vote.CONFIRM, Vote.REJECT], repeat=n - 1):
        rnd = VoteRound("r", voters[0], n)
        for voter, vote in zip(voters[1:], pattern):
            if vote is not None:
                rnd.cast(voter, vote)
        confirms = 1 + sum(v is Vote.CONFIRM for v in pattern)
        expected = Decision.COMMITTED if confirms >= quorum_size(n) else Decision.DISCARDED
        assert decide(rnd) is expected
        assert rnd.complete == all(v is not None for v in pattern)
