"""Fog node state machine: ledger replica, share store, off-chain cache, voting."""

from __future__ import annotations

import itertools
import logging
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional

from .. import cpabe
from ..chain import Block, ChainError, Ledger, Transaction, TxKind, validate_chain
from ..consensus import Decision, Vote, VoteRound, decide
from ..encoding import derive_seed, digest, encode_fields
from ..fieldmath import lagrange_coefficient
from ..policy import AccessTree, PolicyNotSatisfied, parse_policy
from ..primitives import (
    FileDecryptionError,
    SigningKey,
    attribute_message,
    decrypt_file,
    encrypt_file,
    verify_signature,
)
from ..shares import (
    KeyShare,
    MixedShares,
    VfChunk,
    chunk_vf,
    generate_vf,
    majority_threshold,
    reconstruct_key,
    split_key,
)
from ..simnet import Behavior
from .cmi import CMI, certificate_message
from .csp import CSP
from . import messages as m

log = logging.getLogger(__name__)

# Rejection reasons that mark the proposer or requester as rogue.
ROGUE_CAUSES = frozenset({"bad-signature", "ledger-mismatch", "falsified-row"})


@dataclass
class StoredShare:
    """One row of the node's cryptographic share store."""

    ef_id: str
    index: int
    n: int
    chunk: VfChunk
    wrapped: cpabe.CpabeCiphertext


@dataclass
class CacheEntry:
    blob: bytes
    last_access: int
    hits: int = 0


@dataclass
class Round:
    round_id: str
    kind: str  # "tx" or "retrieval"
    votes: VoteRound
    voters: frozenset[str]
    accused: str
    start: int
    tx: Optional[Transaction] = None
    ef_id: str = ""
    reasons: dict[str, str] = field(default_factory=dict)
    decision: Optional[Decision] = None

    @property
    def order_key(self):
        return (self.tx.tick if self.tx else self.start, self.round_id)


@dataclass
class Retrieval:
    round_id: str
    ef_id: str
    start: int
    label: str = ""
    responses: dict[int, tuple[VfChunk, cpabe.CpabeCiphertext, str]] = field(default_factory=dict)
    holders: set[str] = field(default_factory=set)
    stage: str = "voting"
    path: str = ""
    status: str = ""
    reason: str = ""
    peer: str = ""
    end: Optional[int] = None
    plaintext: Optional[bytes] = None

    @property
    def done(self) -> bool:
        return self.end is not None

    @property
    def latency(self) -> Optional[int]:
        return None if self.end is None else self.end - self.start


@dataclass
class PendingPublish:
    ef_id: str
    label: str
    members: list[str]
    blob: bytes
    vf: object
    chunks: list[VfChunk]
    wrapped: list[cpabe.CpabeCiphertext]
    status: str = "proposed"


@dataclass
class Timeouts:
    vote: int = 30
    retrieval: int = 600
    join: int = 300
    peer: int = 60


class FogNode:
    def __init__(self, sim, name: str, attributes, params, seed: int,
                 timeouts: Timeouts = Timeouts(), verified: bool = True):
        self.sim = sim
        self.name = name
        self.attributes = tuple(sorted(set(attributes)))
        self.params = params
        self.timeouts = timeouts
        self.verified = verified
        self.rng = random.Random(derive_seed(seed, "node", name))
        self.fn_id: Optional[str] = None
        self.ff_id: Optional[str] = None
        self.fnsk: Optional[cpabe.FnSecretKey] = None
        self.signing_key: Optional[SigningKey] = None
        self.ffpk: Optional[cpabe.PublicKey] = None
        self.issuer_key: bytes = b""
        self.join_status = "new"
        self.ledger = Ledger()
        self.synced = False
        self.shares: dict[str, StoredShare] = {}
        self.cache: dict[str, CacheEntry] = {}
        self.rounds: dict[str, Round] = {}
        self.early_votes: dict[str, list[tuple[str, m.Vote]]] = {}
        self.commit_queue: list[Round] = []
        self.suspicions: dict[str, str] = {}
        self.authorized: set[tuple[str, str]] = set()
        self.publishes: dict[str, PendingPublish] = {}
        self.retrievals: dict[str, Retrieval] = {}
        self.decisions: list[tuple[int, str, str, str]] = []
        self.rogue_detections: list[tuple[int, str, str]] = []
        self.problem: str = ""
        self._roster: tuple[str, ...] = ()
        self._sync_copies: dict[str, tuple[Block, ...]] = {}
        self._counter = itertools.count(1)
        self._reporting: set[str] = set()
        self._forged_key = SigningKey.generate(random.Random(derive_seed(seed, "forged", name)))

    # -- identity ----------------------------------------------------------------

    @property
    def address(self) -> str:
        return self.fn_id or self.name

    @property
    def table(self):
        return self.ledger.table

    @property
    def ousted(self) -> bool:
        return self.fn_id is not None and self.fn_id in self.table.ousted

    @property
    def active(self) -> bool:
        return self.synced and self.fn_id in self.table.rows

    def fault(self) -> Optional[Behavior]:
        return self.sim.fault(self.address)

    def signer(self) -> SigningKey:
        if self.fault() is Behavior.FORGE_SIGNATURE:
            return self._forged_key
        return self.signing_key

    def _send(self, dst: str, msg) -> None:
        self.sim.send(self.address, dst, msg)

    def _peers(self) -> list[str]:
        return [p for p in self.table.active_members if p != self.fn_id]

    def _next_id(self, prefix: str) -> str:
        return f"{prefix}-{self.fn_id}-{self.sim.now}-{next(self._counter)}"

    # -- join ----------------------------------------------------------------------

    def start_join(self) -> None:
        self.join_status = "requested"
        self._send(CMI, m.JoinRequest(self.attributes, self.verified))

    def _on_grant(self, msg: m.JoinGrant) -> None:
        self.fn_id, self.ff_id = msg.fn_id, msg.ff_id
        self.fnsk, self.signing_key, self.ffpk = msg.fnsk, msg.signing_key, msg.ffpk
        self.issuer_key = msg.issuer_key
        self.sim.register(self.fn_id, self)
        self._roster = tuple(msg.roster)
        if msg.founder:
            self.synced = True
            self.join_status = "founding"
            self._propose(TxKind.JOIN_ANNOUNCE, payload={
                "member": self.fn_id,
                "attributes": list(self.attributes),
                "verify_key": self.signing_key.verify_key,
                "att_sig": msg.att_sig,
                "certificate": msg.certificate,
            })
        else:
            self.join_status = "syncing"
            self.sim.after(self.timeouts.join, self._finish_sync)

    def _on_ledger_sync(self, src: str, msg: m.LedgerSync) -> None:
        if self.join_status != "syncing" or src not in self._roster:
            return
        self._sync_copies[src] = tuple(msg.blocks)
        if len(self._sync_copies) == len(self._roster):
            self._finish_sync()

    def _finish_sync(self) -> None:
        if self.join_status != "syncing":
            return
        copies = []
        for blocks in self._sync_copies.values():
            try:
                copies.append(Ledger.from_blocks(blocks))
            except ChainError:
                continue
        chosen = select_majority_ledger(copies, len(self._roster))
        if chosen is None:
            self.join_status = "problem"
            self.problem = f"{len(self._sync_copies)} ledger copies without a majority of {len(self._roster)}"
            self._send(CMI, m.ProblemReport(self.fn_id, "ledger-disagreement"))
            return
        self.ledger = chosen
        self.synced = True
        self.join_status = "joined"
        self.sim.note(self.address, f"joined|{self.fn_id}")

    # -- consensus rounds -------------------------------------------------------------

    def _voters(self) -> frozenset[str]:
        active = self.table.active_members
        return frozenset(active) if active else frozenset({self.fn_id})

    def _federation_size(self) -> int:
        return max(1, len(self.table.members))

    def _open_round(self, round_id: str, kind: str, proposer: str, accused: str,
                    tx: Optional[Transaction] = None, ef_id: str = "") -> Round:
        voters = self._voters()
        rnd = Round(round_id, kind, VoteRound(round_id, proposer, self._federation_size()),
                    voters, accused, self.sim.now, tx, ef_id)
        self.rounds[round_id] = rnd
        for voter, vote in self.early_votes.pop(round_id, []):
            self._count_vote(rnd, voter, vote)
        self.sim.after(self.timeouts.vote, lambda: self._decide(round_id, timer=True))
        return rnd

    def _count_vote(self, rnd: Round, voter: str, vote: m.Vote) -> None:
        if voter not in rnd.voters or rnd.decision is not None:
            return
        if rnd.votes.cast(voter, Vote(vote.vote)):
            rnd.reasons[voter] = vote.reason

    def _cast_own(self, rnd: Round, vote: Vote, reason: str) -> None:
        if self.fn_id != rnd.votes.proposer:
            rnd.votes.cast(self.fn_id, vote)
            rnd.reasons[self.fn_id] = reason
            if vote is Vote.REJECT and reason in ROGUE_CAUSES:
                self.suspicions[rnd.accused] = reason
            self.sim.broadcast(self.address, rnd.voters, m.Vote(rnd.round_id, self.fn_id, vote.value, reason))
        self._maybe_decide(rnd)

    def _maybe_decide(self, rnd: Round) -> None:
        if rnd.decision is None and rnd.voters <= set(rnd.votes.votes):
            self._decide(rnd.round_id)

    def _on_vote(self, src: str, msg: m.Vote) -> None:
        rnd = self.rounds.get(msg.round_id)
        if rnd is None:
            self.early_votes.setdefault(msg.round_id, []).append((src, msg))
            return
        self._count_vote(rnd, src, msg)
        self._maybe_decide(rnd)

    def _decide(self, round_id: str, timer: bool = False) -> None:
        rnd = self.rounds[round_id]
        if rnd.decision is not None:
            return
        if timer:
            self.sim.note(self.address, f"timer|vote|{self.timeouts.vote}")
        rnd.decision = decide(rnd.votes)
        self.decisions.append((self.sim.now, round_id, rnd.kind, rnd.decision.value))
        self.sim.note(self.address, f"decide|{round_id}|{rnd.decision.value}")
        if rnd.decision is Decision.COMMITTED:
            if rnd.kind == "tx":
                self.commit_queue.append(rnd)
            else:
                self._on_retrieval_authorized(rnd)
        else:
            self._on_discarded(rnd)
        self._drain_commits()

    def _drain_commits(self) -> None:
        # Apply committed transactions in proposal order so every replica
        # builds the same chain even when rounds overlap.
        undecided = [r.order_key for r in self.rounds.values() if r.kind == "tx" and r.decision is None]
        horizon = min(undecided) if undecided else None
        self.commit_queue.sort(key=lambda r: r.order_key)
        while self.commit_queue and (horizon is None or self.commit_queue[0].order_key < horizon):
            self._apply_commit(self.commit_queue.pop(0))

    def _apply_commit(self, rnd: Round) -> None:
        tx = rnd.tx
        try:
            self.ledger.append_block([tx])
        except ChainError as exc:
            self.sim.note(self.address, f"stale|{rnd.round_id}")
            log.debug("%s skipped stale commit %s: %s", self.address, rnd.round_id, exc)
            if tx.fn_id == self.fn_id and tx.kind is TxKind.ADD_ROW:
                self.publishes[tx.ef_id].status = "rejected"
            return
        kind = TxKind(tx.kind)
        if kind is TxKind.JOIN_ANNOUNCE:
            member = tx.payload["member"]
            if member == self.fn_id:
                self.join_status = "joined"
                self.sim.note(self.address, f"joined|{self.fn_id}")
            elif self.synced and self.fn_id in self.table.rows:
                self._send(member, m.LedgerSync(self.fn_id, tuple(self.ledger.blocks)))
        elif kind is TxKind.ADD_ROW and tx.fn_id == self.fn_id:
            self._complete_publish(tx.ef_id)
        elif kind is TxKind.REMOVE_ROGUE:
            target, cause = tx.payload["target"], tx.payload["cause"]
            self.suspicions.pop(target, None)
            if tx.fn_id == self.fn_id:
                self.rogue_detections.append((self.sim.now, target, cause))
                self.sim.note(self.address, f"rogue|{target}|{cause}")
                report = m.RogueReport(self.ff_id, target, self.fn_id, cause)
                self._send(CSP, report)
                self._send(CMI, report)

    def _on_discarded(self, rnd: Round) -> None:
        if rnd.kind == "tx" and rnd.tx.fn_id == self.fn_id and rnd.tx.kind is TxKind.ADD_ROW:
            self.publishes[rnd.tx.ef_id].status = "rejected"
        if rnd.kind == "retrieval" and rnd.accused == self.fn_id:
            state = self.retrievals.get(rnd.round_id)
            if state is not None:
                self._finish(state, "denied", "not-authorized")
        accusers = sorted(
            voter for voter, reason in rnd.reasons.items()
            if reason in ROGUE_CAUSES and rnd.votes.votes.get(voter) is Vote.REJECT and voter != rnd.accused
        )
        if (accusers and accusers[0] == self.fn_id and rnd.accused in self.table.rows
                and rnd.accused not in self._reporting):
            self._reporting.add(rnd.accused)
            self._propose(TxKind.REMOVE_ROGUE, payload={"target": rnd.accused, "cause": rnd.reasons[self.fn_id]})

    # -- proposals ----------------------------------------------------------------------

    def _propose(self, kind: TxKind, ef_id: str = "", payload=None) -> Optional[str]:
        if self.fault() is Behavior.UNRESPONSIVE:
            return None
        tx = Transaction(kind, self.fn_id, self.sim.now, ef_id, dict(payload or {}))
        tx = tx.signed(self.signer().sign(tx.signing_bytes()))
        round_id = self._next_id("T")
        rnd = self._open_round(round_id, "tx", self.fn_id, self.fn_id, tx=tx)
        self.sim.broadcast(self.address, rnd.voters,
                           m.Proposal(round_id, tx, self.ledger.height, self.ledger.head_hash))
        self._maybe_decide(rnd)
        return round_id

    def _on_proposal(self, src: str, msg: m.Proposal) -> None:
        tx = msg.tx
        if not self.active or msg.round_id in self.rounds or src != tx.fn_id:
            return
        rnd = self._open_round(msg.round_id, "tx", tx.fn_id, tx.fn_id, tx=tx)
        vote, reason = self._evaluate_proposal(msg)
        self._cast_own(rnd, vote, reason)

    def _evaluate_proposal(self, msg: m.Proposal) -> tuple[Vote, str]:
        tx = msg.tx
        table = self.table
        if tx.fn_id not in table.rows:
            return Vote.REJECT, "unknown-proposer"
        if self._ledger_conflict(msg.height, msg.head_hash):
            return Vote.REJECT, "ledger-mismatch"
        if not verify_signature(table.verifiers[tx.fn_id], tx.signing_bytes(), tx.signature):
            return Vote.REJECT, "bad-signature"
        kind = TxKind(tx.kind)
        p = tx.payload
        if kind is TxKind.JOIN_ANNOUNCE:
            cert_msg = certificate_message(p["member"], self.ff_id, p["attributes"], p["verify_key"])
            if not verify_signature(self.issuer_key, cert_msg, p["certificate"]):
                return Vote.REJECT, "bad-certificate"
        elif kind is TxKind.UPDATE_OFFCHAIN:
            before = set(table.rows[tx.fn_id].offchain_db)
            for ef in p["offchain"]:
                if ef in before:
                    continue
                owner = table.files.get(ef, {}).get("owner")
                if owner != tx.fn_id and (tx.fn_id, ef) not in self.authorized:
                    return Vote.REJECT, "falsified-row"
        elif kind is TxKind.REMOVE_ROGUE:
            if p["target"] not in self.suspicions:
                return Vote.REJECT, "unfounded-report"
        try:
            self.ledger.preview([tx])
        except ChainError:
            return Vote.REJECT, "invalid-transaction"
        return Vote.CONFIRM, ""

    def _ledger_conflict(self, height: int, head: bytes) -> bool:
        """True when the proposer's chain head contradicts this replica's history."""
        if height == 0 or height > self.ledger.height:
            return False
        return self.ledger.blocks[height - 1].current_hash != head

    # -- publishing ---------------------------------------------------------------------

    def publish(self, plaintext: bytes, policy: AccessTree, label: str = "") -> Optional[str]:
        if self.fault() is Behavior.UNRESPONSIVE or not self.active:
            return None
        members = list(self.table.active_members)
        n = len(members)
        t = majority_threshold(n)
        nonce = self.rng.randbytes(12)
        ef_id = "EF-" + digest(encode_fields([self.fn_id, digest(plaintext), nonce])).hex()[:16]
        sk = self.params.random_scalar(self.rng)
        blob = encrypt_file(plaintext, sk, ef_id, nonce)
        vf = generate_vf(ef_id, n, self.rng)
        chunks = chunk_vf(vf, n)
        shares = split_key(sk, n, t, p=self.params.p, ef_id=ef_id, seed=self.rng)
        wrapped = [cpabe.encrypt(self.ffpk, self.params.gt_from_int(s.value), policy, self.rng) for s in shares]
        self.publishes[ef_id] = PendingPublish(ef_id, label, members, blob, vf, chunks, wrapped)
        self.sim.note(self.address, f"publish|{self.fn_id}|{ef_id}")
        self._propose(TxKind.ADD_ROW, ef_id, {"policy": policy.to_expr(), "n": n})
        return ef_id

    def _complete_publish(self, ef_id: str) -> None:
        pub = self.publishes[ef_id]
        n = len(pub.members)
        for i, member in enumerate(pub.members):
            if member == self.fn_id:
                self.shares[ef_id] = StoredShare(ef_id, i + 1, n, pub.chunks[i], pub.wrapped[i])
            else:
                self._send(member, m.ShareDelivery(ef_id, self.fn_id, i + 1, n, pub.chunks[i], pub.wrapped[i]))
        att_sig = self.signer().sign(attribute_message(self.attributes, "upload", self.fn_id, ef_id))
        self._send(CSP, m.PublishUpload(ef_id, self.fn_id, pub.blob, pub.vf, att_sig))
        pub.status = "published"

    def _on_share_delivery(self, src: str, msg: m.ShareDelivery) -> None:
        record = self.table.files.get(msg.ef_id)
        if record is None or record["owner"] != src or msg.ef_id in self.shares:
            return
        self.shares[msg.ef_id] = StoredShare(msg.ef_id, msg.index, msg.n, msg.chunk, msg.wrapped_share)

    # -- retrieval (requester side) ----------------------------------------------------------

    def request_file(self, ef_id: str, label: str = "") -> Optional[str]:
        if self.fault() is Behavior.UNRESPONSIVE:
            return None
        round_id = self._next_id("R")
        state = Retrieval(round_id, ef_id, self.sim.now, label)
        self.retrievals[round_id] = state
        self.sim.note(self.address, f"retrieve-start|{round_id}|{ef_id}")
        if not self.active:
            self._finish(state, "denied", "not-a-member")
            return round_id
        if ef_id not in self.table.files:
            self._finish(state, "denied", "unknown-file")
            return round_id
        own = self.shares.get(ef_id)
        if own is not None:
            state.responses[own.index] = (own.chunk, own.wrapped, self.fn_id)
        att_sig = self.signer().sign(attribute_message(self.attributes, "retrieve", self.fn_id, ef_id, round_id))
        rnd = self._open_round(round_id, "retrieval", self.fn_id, self.fn_id, ef_id=ef_id)
        self.sim.broadcast(self.address, rnd.voters, m.RetrievalRequest(round_id, self.fn_id, ef_id, att_sig))
        self.sim.after(self.timeouts.retrieval, lambda: self._finish(state, "denied", "timeout"))
        self._maybe_decide(rnd)
        return round_id

    def _on_share_response(self, src: str, msg: m.ShareResponse) -> None:
        state = self.retrievals.get(msg.round_id)
        if state is None or state.done or state.stage not in ("voting", "collecting"):
            return
        state.stage = "collecting"
        state.holders.update(msg.holders)
        if msg.index and msg.index not in state.responses:
            state.responses[msg.index] = (msg.chunk, msg.wrapped_share, src)
        if len(state.responses) >= self._threshold_for(state.ef_id):
            # let same-tick responses land before fetching
            self.sim.after(0, lambda: self._fetch(state))

    def _threshold_for(self, ef_id: str) -> int:
        return majority_threshold(self.table.files[ef_id]["n"])

    def _fetch(self, state: Retrieval) -> None:
        if state.done or state.stage != "collecting":
            return
        active = set(self.table.active_members)
        holders = sorted(h for h in state.holders if h != self.fn_id and h in active)
        if holders:
            state.stage, state.path, state.peer = "peer", "peer", holders[0]
            self._send(holders[0], m.PeerFetch(state.round_id, state.ef_id, self.fn_id))
            self.sim.after(self.timeouts.peer, lambda: self._peer_timeout(state))
        else:
            self._fetch_from_csp(state)

    def _peer_timeout(self, state: Retrieval) -> None:
        if not state.done and state.stage == "peer":
            self.sim.note(self.address, f"timer|peer|{self.timeouts.peer}")
            self._fetch_from_csp(state)

    def _fetch_from_csp(self, state: Retrieval) -> None:
        state.stage, state.path = "csp", "csp"
        chunks = tuple(chunk for _, (chunk, _, _) in sorted(state.responses.items()))
        self._send(CSP, self._csp_request(state.ef_id, chunks))

    def _csp_request(self, ef_id: str, chunks) -> m.CspRequest:
        att_sig = self.signer().sign(attribute_message(self.attributes, "csp", self.fn_id, ef_id))
        return m.CspRequest(self.fn_id, self.ff_id, ef_id, tuple(chunks), self.attributes, att_sig)

    def request_from_csp(self, ef_id: str) -> None:
        """Contact the CSP directly with whatever chunk this node holds."""
        if self.fault() is Behavior.UNRESPONSIVE:
            return
        own = self.shares.get(ef_id)
        chunks = (own.chunk,) if own else ()
        self.sim.note(self.address, f"csp-direct|{ef_id}")
        self._send(CSP, self._csp_request(ef_id, chunks))

    def _on_peer_file(self, src: str, msg: m.PeerFile) -> None:
        state = next((s for s in self.retrievals.values()
                      if s.ef_id == msg.ef_id and s.stage == "peer" and s.peer == src and not s.done), None)
        if state is None:
            return
        if not msg.blob or not self._open(state, msg.blob):
            if not state.done:
                self._fetch_from_csp(state)

    def _on_csp_response(self, msg: m.CspResponse) -> None:
        state = next((s for s in self.retrievals.values()
                      if s.ef_id == msg.ef_id and s.stage == "csp" and not s.done), None)
        if state is None:
            return
        if msg.refused:
            self._finish(state, "denied", msg.refused)
        elif not self._open(state, msg.blob) and not state.done:
            self._finish(state, "denied", "decryption-failed")

    def _open(self, state: Retrieval, blob: bytes) -> bool:
        """Unwrap key shares with the node key, rebuild SK and decrypt the file."""
        t = self._threshold_for(state.ef_id)
        unwrapped: dict[int, KeyShare] = {}
        senders: dict[int, str] = {}
        for index, (_, wrapped, sender) in sorted(state.responses.items()):
            try:
                value = cpabe.decrypt(self.fnsk, wrapped).to_int()
            except PolicyNotSatisfied:
                self._finish(state, "denied", "policy-not-satisfied")
                return False
            except cpabe.CpabeError:
                continue
            unwrapped[index] = KeyShare(state.ef_id, index, value, t, self.params.p)
            senders[index] = sender
        for combo in itertools.combinations(sorted(unwrapped), t):
            try:
                sk = reconstruct_key([unwrapped[i] for i in combo])
                plaintext = decrypt_file(blob, sk, state.ef_id)
            except (MixedShares, FileDecryptionError):
                continue
            self._flag_bad_shares(unwrapped, senders, combo)
            self._store_in_cache(state.ef_id, blob)
            state.plaintext = plaintext
            self._finish(state, "ok", "")
            return True
        return False

    def _flag_bad_shares(self, shares: dict[int, KeyShare], senders: dict[int, str], good) -> None:
        p = self.params.p
        for index, share in shares.items():
            if index in good:
                continue
            expected = sum(lagrange_coefficient(i, good, p, x=index) * shares[i].value for i in good) % p
            if expected != share.value:
                self.sim.note(self.address, f"bad-share|{senders[index]}")

    def _finish(self, state: Retrieval, status: str, reason: str) -> None:
        if state.done:
            return
        state.status, state.reason, state.end = status, reason, self.sim.now
        self.sim.note(self.address, f"retrieve-done|{state.round_id}|{status}|{state.path or '-'}")

    # -- retrieval (member side) ----------------------------------------------------------------

    def _on_retrieval_request(self, src: str, msg: m.RetrievalRequest) -> None:
        if not self.active or msg.round_id in self.rounds or src != msg.requester:
            return
        rnd = self._open_round(msg.round_id, "retrieval", msg.requester, msg.requester, ef_id=msg.ef_id)
        vote, reason = self._evaluate_request(msg)
        self._cast_own(rnd, vote, reason)

    def _evaluate_request(self, msg: m.RetrievalRequest) -> tuple[Vote, str]:
        row = self.table.rows.get(msg.requester)
        if row is None:
            return Vote.REJECT, "unknown-requester"
        message = attribute_message(row.attributes, "retrieve", msg.requester, msg.ef_id, msg.round_id)
        if not verify_signature(self.table.verifiers[msg.requester], message, msg.att_sig):
            return Vote.REJECT, "bad-signature"
        if msg.ef_id not in self.table.files:
            return Vote.REJECT, "unknown-file"
        return Vote.CONFIRM, ""

    def _on_retrieval_authorized(self, rnd: Round) -> None:
        requester = rnd.accused
        self.authorized.add((requester, rnd.ef_id))
        if requester == self.fn_id:
            state = self.retrievals.get(rnd.round_id)
            if state is not None and not state.done and state.stage == "voting":
                state.stage = "collecting"
                state.holders.update(self.table.holders_of(rnd.ef_id))
                if len(state.responses) >= self._threshold_for(state.ef_id):
                    self.sim.after(0, lambda: self._fetch(state))
            return
        holders = tuple(h for h in self.table.holders_of(rnd.ef_id) if h != requester)
        stored = self.shares.get(rnd.ef_id)
        if stored is None:
            reply = m.ShareResponse(rnd.round_id, rnd.ef_id, self.fn_id, 0, None, None, holders)
        else:
            chunk, wrapped = stored.chunk, stored.wrapped
            if self.fault() is Behavior.WRONG_SHARES:
                chunk = replace(chunk, data=bytes(b ^ 0xFF for b in chunk.data))
                wrapped = replace(wrapped, c_tilde=wrapped.c_tilde * self.params.gt_generator)
            reply = m.ShareResponse(rnd.round_id, rnd.ef_id, self.fn_id, stored.index, chunk, wrapped, holders)
        self._send(requester, reply)

    def _on_peer_fetch(self, src: str, msg: m.PeerFetch) -> None:
        entry = self.cache.get(msg.ef_id)
        if entry is None or src != msg.requester or (src, msg.ef_id) not in self.authorized:
            self._send(src, m.PeerFile(msg.ef_id, self.fn_id, b""))
            return
        entry.last_access = self.sim.now
        entry.hits += 1
        self._send(src, m.PeerFile(msg.ef_id, self.fn_id, entry.blob))

    # -- off-chain cache ------------------------------------------------------------------------

    def _store_in_cache(self, ef_id: str, blob: bytes) -> None:
        self.cache[ef_id] = CacheEntry(blob, self.sim.now)
        self._announce_cache()

    def _announce_cache(self, column=None) -> Optional[str]:
        if self.fn_id not in self.table.rows:
            return None
        column = sorted(self.cache) if column is None else sorted(column)
        if tuple(column) == self.table.rows[self.fn_id].offchain_db:
            return None
        return self._propose(TxKind.UPDATE_OFFCHAIN, payload={"offchain": column})

    def flush_cache(self, max_age: int) -> int:
        """Evict entries at least ``max_age`` ticks old and publish the new column."""
        if self.fault() is Behavior.UNRESPONSIVE:
            return 0
        stale = [ef for ef, e in self.cache.items() if self.sim.now - e.last_access >= max_age]
        for ef in stale:
            del self.cache[ef]
        self.sim.note(self.address, f"flush|{len(stale)}")
        if stale:
            self._announce_cache()
        return len(stale)

    # -- faults ---------------------------------------------------------------------------------

    def on_fault_activated(self, spec) -> None:
        behavior = Behavior(spec.behavior)
        self.sim.note(self.address, f"fault|{behavior.value}")
        if behavior is Behavior.TAMPER_LEDGER and self.ledger.blocks:
            self._tamper_ledger()
            self._propose(TxKind.UPDATE_OFFCHAIN, payload={"offchain": sorted(self.cache)})
        elif behavior is Behavior.FALSIFY_TRACKING_ROW and self.fn_id in self.table.rows:
            lacking = sorted(ef for ef in self.table.files if ef not in self.cache)
            if lacking:
                self._announce_cache(set(self.cache) | {lacking[0]})

    def _tamper_ledger(self) -> None:
        last = self.ledger.blocks[-1]
        forged = Transaction(TxKind.UPDATE_OFFCHAIN, self.fn_id, self.sim.now, "",
                             {"offchain": sorted(self.table.files)}, b"")
        txs = last.transactions + [forged]
        self.ledger.blocks[-1] = Block.build(last.height, last.prev_hash, txs)
        self.ledger.table = self.ledger.replay()

    # -- dispatch -------------------------------------------------------------------------------

    def receive(self, src: str, msg) -> None:
        if isinstance(msg, m.JoinGrant):
            self._on_grant(msg)
        elif isinstance(msg, m.JoinDeclined):
            self.join_status = "declined"
            self.problem = msg.reason
        elif isinstance(msg, m.Admit):
            if src == CMI and self.active:
                self._propose(TxKind.JOIN_ANNOUNCE, payload={
                    "member": msg.member,
                    "attributes": list(msg.attributes),
                    "verify_key": msg.verify_key,
                    "att_sig": msg.att_sig,
                    "certificate": msg.certificate,
                })
        elif isinstance(msg, m.LedgerSync):
            self._on_ledger_sync(src, msg)
        elif isinstance(msg, m.Proposal):
            self._on_proposal(src, msg)
        elif isinstance(msg, m.Vote):
            self._on_vote(src, msg)
        elif isinstance(msg, m.ShareDelivery):
            self._on_share_delivery(src, msg)
        elif isinstance(msg, m.RetrievalRequest):
            self._on_retrieval_request(src, msg)
        elif isinstance(msg, m.ShareResponse):
            self._on_share_response(src, msg)
        elif isinstance(msg, m.PeerFetch):
            self._on_peer_fetch(src, msg)
        elif isinstance(msg, m.PeerFile):
            self._on_peer_file(src, msg)
        elif isinstance(msg, m.CspResponse):
            self._on_csp_response(msg)
        elif isinstance(msg, m.RogueNotice):
            if src == CMI and msg.target in self.table.rows:
                self.suspicions[msg.target] = msg.cause
                reporters = sorted(p for p in self.table.active_members if p != msg.target)
                if reporters and reporters[0] == self.fn_id and msg.target not in self._reporting:
                    self._reporting.add(msg.target)
                    self._propose(TxKind.REMOVE_ROGUE, payload={"target": msg.target, "cause": msg.cause})


def select_majority_ledger(copies: list[Ledger], expected: int) -> Optional[Ledger]:
    """Adopt the ledger version held by a majority of the ``expected`` peers, if any."""
    if expected < 1:
        return None
    counts = Counter((c.height, c.head_hash) for c in copies)
    if not counts:
        return None
    (height, head), votes = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    if votes < majority_threshold(expected):
        return None
    return next(c for c in copies if (c.height, c.head_hash) == (height, head))
