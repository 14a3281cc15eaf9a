"""Wire messages exchanged between CMI, CSP and fog nodes.

Each message encodes as ``encode_fields([kind, field1, field2, ...])`` with
fields in declaration order. Nested key, ciphertext, block and share objects
contribute their own ``to_bytes()``; lists encode as nested field lists. The
encoded length is what the simulator records as the message size.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Optional

from ..encoding import encode_fields


def _wire(value: Any):
    if hasattr(value, "to_bytes") and not isinstance(value, (int, bytes)):
        return value.to_bytes()
    if isinstance(value, (list, tuple)):
        return [_wire(v) for v in value]
    if isinstance(value, dict):
        return [[k, _wire(value[k])] for k in sorted(value)]
    if isinstance(value, (frozenset, set)):
        return sorted(value)
    return value


@dataclass(frozen=True)
class Message:
    @property
    def kind(self) -> str:
        return type(self).__name__

    def encode(self) -> bytes:
        return encode_fields([self.kind] + [_wire(getattr(self, f.name)) for f in fields(self)])

    @property
    def size(self) -> int:
        return len(self.encode())


@dataclass(frozen=True)
class JoinRequest(Message):
    attributes: tuple[str, ...]
    verified: bool = True


@dataclass(frozen=True)
class JoinGrant(Message):
    fn_id: str
    ff_id: str
    fnsk: Any
    signing_key: Any
    ffpk: Any
    roster: tuple[str, ...]
    issuer_key: bytes
    founder: bool
    att_sig: bytes = b""
    certificate: bytes = b""


@dataclass(frozen=True)
class JoinDeclined(Message):
    reason: str


@dataclass(frozen=True)
class Admit(Message):
    member: str
    attributes: tuple[str, ...]
    verify_key: bytes
    att_sig: bytes
    certificate: bytes


@dataclass(frozen=True)
class LedgerSync(Message):
    sender: str
    blocks: tuple


@dataclass(frozen=True)
class Proposal(Message):
    round_id: str
    tx: Any
    height: int
    head_hash: bytes


@dataclass(frozen=True)
class Vote(Message):
    round_id: str
    voter: str
    vote: str
    reason: str = ""


@dataclass(frozen=True)
class ShareDelivery(Message):
    ef_id: str
    owner: str
    index: int
    n: int
    chunk: Any
    wrapped_share: Any


@dataclass(frozen=True)
class PublishUpload(Message):
    ef_id: str
    owner: str
    blob: bytes
    vf: Any
    att_sig: bytes

    def encode(self) -> bytes:
        return encode_fields([self.kind, self.ef_id, self.owner, self.blob, self.vf.data, self.att_sig])


@dataclass(frozen=True)
class RetrievalRequest(Message):
    round_id: str
    requester: str
    ef_id: str
    att_sig: bytes


@dataclass(frozen=True)
class ShareResponse(Message):
    round_id: str
    ef_id: str
    sender: str
    index: int
    chunk: Any
    wrapped_share: Any
    holders: tuple[str, ...]


@dataclass(frozen=True)
class PeerFetch(Message):
    round_id: str
    ef_id: str
    requester: str


@dataclass(frozen=True)
class PeerFile(Message):
    ef_id: str
    sender: str
    blob: bytes


@dataclass(frozen=True)
class CspRequest(Message):
    fn_id: str
    ff_id: str
    ef_id: str
    chunks: tuple
    attributes: tuple[str, ...]
    att_sig: bytes


@dataclass(frozen=True)
class CspResponse(Message):
    ef_id: str
    blob: bytes
    refused: str = ""


@dataclass(frozen=True)
class RogueReport(Message):
    ff_id: str
    target: str
    reporter: str
    cause: str


@dataclass(frozen=True)
class RogueNotice(Message):
    target: str
    cause: str


@dataclass(frozen=True)
class VerificationListUpdate(Message):
    ff_id: str
    ffpk: Any
    ff_att: str


@dataclass(frozen=True)
class ProblemReport(Message):
    fn_id: str
    detail: str
