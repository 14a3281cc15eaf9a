"""Hash-linked federation ledger whose replicated state is the file tracking table.

Canonical encodings (all via :func:`fogfed.encoding.encode_fields`):

* transaction: ``["tx", kind, fn_id, ef_id, [[key, value], ...sorted by key], tick, signature]``;
  the signed bytes are the same list without the trailing signature
* block payload: ``encode_fields([tx_bytes, ...])``
* block hash: ``sha256(encode_fields(["block", height, prev_hash, payload]))``

The genesis block has height 0 and ``prev_hash`` of 32 zero bytes.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional

from .encoding import decode_fields, digest, encode_fields

ZERO_HASH = bytes(32)


class ChainError(ValueError):
    pass


class InvalidTransaction(ChainError):
    pass


class TxKind(str, enum.Enum):
    ADD_ROW = "AddRow"
    UPDATE_OFFCHAIN = "UpdateOffchain"
    REMOVE_ROGUE = "RemoveRogue"
    JOIN_ANNOUNCE = "JoinAnnounce"


def _canonical_payload(payload: Mapping[str, Any]) -> list:
    out = []
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, (list, tuple)):
            value = list(value)
        out.append([key, value])
    return out


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    fn_id: str
    tick: int
    ef_id: str = ""
    payload: Mapping[str, Any] = field(default_factory=dict)
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        return encode_fields(self._fields())

    def to_bytes(self) -> bytes:
        return encode_fields(self._fields() + [self.signature])

    def _fields(self) -> list:
        return ["tx", TxKind(self.kind).value, self.fn_id, self.ef_id, _canonical_payload(self.payload), self.tick]

    def signed(self, signature: bytes) -> "Transaction":
        return replace(self, signature=signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transaction":
        try:
            tag, kind, fn_id, ef_id, payload, tick, signature = decode_fields(data)
            if tag != "tx":
                raise ValueError("not a transaction")
            return cls(TxKind(kind), fn_id, tick, ef_id, {k: v for k, v in payload}, signature)
        except (ValueError, TypeError) as exc:
            raise ChainError(f"undecodable transaction: {exc}") from exc


def block_hash(height: int, prev_hash: bytes, payload: bytes) -> bytes:
    return digest(encode_fields(["block", height, prev_hash, payload]))


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    payload: bytes
    current_hash: bytes

    @classmethod
    def build(cls, height: int, prev_hash: bytes, txs: Iterable[Transaction]) -> "Block":
        payload = encode_fields([tx.to_bytes() for tx in txs])
        return cls(height, prev_hash, payload, block_hash(height, prev_hash, payload))

    @property
    def transactions(self) -> list[Transaction]:
        try:
            raw = decode_fields(self.payload)
        except ValueError as exc:
            raise ChainError(f"undecodable block payload: {exc}") from exc
        return [Transaction.from_bytes(item) for item in raw]

    def to_bytes(self) -> bytes:
        return encode_fields([self.height, self.prev_hash, self.payload, self.current_hash])

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        height, prev_hash, payload, current_hash = decode_fields(data)
        return cls(height, prev_hash, payload, current_hash)


@dataclass(frozen=True)
class TrackingRow:
    fn_id: str
    ef_ids: tuple[str, ...]
    sign_att: bytes
    attributes: tuple[str, ...]
    offchain_db: tuple[str, ...]

    def to_fields(self) -> list:
        return [self.fn_id, list(self.ef_ids), self.sign_att, list(self.attributes), list(self.offchain_db)]


@dataclass
class TrackingTable:
    """On-chain tracking table plus the registries derived from the same transactions."""

    rows: dict[str, TrackingRow] = field(default_factory=dict)
    files: dict[str, dict] = field(default_factory=dict)
    verifiers: dict[str, bytes] = field(default_factory=dict)
    members: list[str] = field(default_factory=list)
    ousted: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "TrackingTable":
        return copy.deepcopy(self)

    @property
    def active_members(self) -> list[str]:
        return [m for m in self.members if m not in self.ousted]

    def holders_of(self, ef_id: str) -> list[str]:
        return sorted(fn for fn, row in self.rows.items() if ef_id in row.offchain_db)

    def to_bytes(self) -> bytes:
        return encode_fields([
            [self.rows[k].to_fields() for k in sorted(self.rows)],
            [[ef, f["owner"], f["policy"], f["n"]] for ef, f in sorted(self.files.items())],
            [[k, self.verifiers[k]] for k in sorted(self.verifiers)],
            list(self.members),
            [[k, v] for k, v in sorted(self.ousted.items())],
        ])


def apply_transaction(state: TrackingTable, tx: Transaction) -> TrackingTable:
    """Return the table after ``tx``; ``state`` is left untouched."""
    new = state.copy()
    p = tx.payload
    kind = TxKind(tx.kind)
    if kind is TxKind.JOIN_ANNOUNCE:
        member = p["member"]
        if member in new.members:
            raise InvalidTransaction(f"{member} already announced")
        new.members.append(member)
        new.verifiers[member] = p["verify_key"]
        new.rows[member] = TrackingRow(member, (), p["att_sig"], tuple(sorted(p["attributes"])), ())
        return new
    if tx.fn_id not in new.rows:
        raise InvalidTransaction(f"{tx.fn_id} has no row in the tracking table")
    row = new.rows[tx.fn_id]
    if kind is TxKind.ADD_ROW:
        if not tx.ef_id:
            raise InvalidTransaction("AddRow without ef_id")
        if tx.ef_id in row.ef_ids:
            raise InvalidTransaction(f"{tx.fn_id} already registered {tx.ef_id}")
        if tx.ef_id in new.files:
            raise InvalidTransaction(f"{tx.ef_id} already registered")
        new.files[tx.ef_id] = {"owner": tx.fn_id, "policy": p["policy"], "n": p["n"]}
        new.rows[tx.fn_id] = replace(row, ef_ids=row.ef_ids + (tx.ef_id,))
    elif kind is TxKind.UPDATE_OFFCHAIN:
        cached = tuple(p["offchain"])
        unknown = [ef for ef in cached if ef not in new.files]
        if unknown:
            raise InvalidTransaction(f"off-chain column references unregistered files {unknown}")
        new.rows[tx.fn_id] = replace(row, offchain_db=cached)
    elif kind is TxKind.REMOVE_ROGUE:
        target = p["target"]
        if target not in new.rows:
            raise InvalidTransaction(f"rogue {target} is not in the tracking table")
        del new.rows[target]
        new.verifiers.pop(target, None)
        new.ousted[target] = p["cause"]
    return new


@dataclass(frozen=True)
class ChainCheck:
    tampered_at: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.tampered_at is None

    def __bool__(self) -> bool:
        return self.ok


class Ledger:
    """Single-writer replica: blocks plus the tracking table they produce."""

    def __init__(self):
        self.blocks: list[Block] = []
        self.table = TrackingTable()

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def head_hash(self) -> bytes:
        return self.blocks[-1].current_hash if self.blocks else ZERO_HASH

    def preview(self, txs: Iterable[Transaction]) -> TrackingTable:
        state = self.table
        for tx in txs:
            state = apply_transaction(state, tx)
        return state

    def append_block(self, txs: list[Transaction]) -> Block:
        if not txs:
            raise ChainError("cannot append an empty block")
        state = self.preview(txs)
        block = Block.build(self.height, self.head_hash, txs)
        self.blocks.append(block)
        self.table = state
        return block

    def replay(self) -> TrackingTable:
        state = TrackingTable()
        for block in self.blocks:
            for tx in block.transactions:
                state = apply_transaction(state, tx)
        return state

    def copy(self) -> "Ledger":
        other = Ledger()
        other.blocks = list(self.blocks)
        other.table = self.table.copy()
        return other

    @classmethod
    def from_blocks(cls, blocks: Iterable[Block]) -> "Ledger":
        ledger = cls()
        ledger.blocks = list(blocks)
        check = validate_chain(ledger)
        if not check.ok:
            raise ChainError(f"chain tampered at height {check.tampered_at}")
        ledger.table = ledger.replay()
        return ledger

    def dump(self) -> bytes:
        return encode_fields([b.to_bytes() for b in self.blocks])

    @classmethod
    def load(cls, data: bytes) -> "Ledger":
        return cls.from_blocks(Block.from_bytes(raw) for raw in decode_fields(data))


def validate_chain(ledger: Ledger) -> ChainCheck:
    prev = ZERO_HASH
    for position, block in enumerate(ledger.blocks):
        if (
            block.height != position
            or block.prev_hash != prev
            or block.current_hash != block_hash(block.height, block.prev_hash, block.payload)
        ):
            return ChainCheck(position)
        prev = block.current_hash
    return ChainCheck()


def ledgers_identical(a: Ledger, b: Ledger) -> bool:
    return a.height == b.height and a.head_hash == b.head_hash
