"""Cloud service provider: verification list, EF/VF store, blacklist."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..encoding import digest, encode_fields
from ..primitives import attribute_message, verify_signature
from ..shares import VerificationFile, count_vf_matches, majority_threshold
from .messages import CspRequest, CspResponse, PublishUpload, RogueReport, VerificationListUpdate

CSP = "CSP"
CMI = "CMI"


@dataclass(frozen=True)
class Refused:
    reason: str
    rogue: bool = False

    def __bool__(self) -> bool:
        return False


@dataclass
class VerificationRow:
    ff_id: str
    ffpk: object
    ff_att: str


class Csp:
    def __init__(self, sim=None):
        self.sim = sim
        self.verification_list: dict[str, VerificationRow] = {}
        self.files: dict[str, tuple[bytes, VerificationFile, str]] = {}
        self.blacklist: set[str] = set()
        self.requests_served = 0
        self.requests_refused: list[tuple[str, str, str]] = []
        # replays are logged, not prevented
        self.seen_chunks: dict[bytes, str] = {}
        self.replays: list[tuple[str, str, str]] = []

    def update_verification_list(self, ff_id: str, ffpk, ff_att: str) -> None:
        self.verification_list[ff_id] = VerificationRow(ff_id, ffpk, ff_att)

    def store(self, ef_id: str, blob: bytes, vf: VerificationFile, owner: str) -> None:
        if owner in self.blacklist:
            return
        self.files[ef_id] = (blob, vf, owner)

    def verify_and_serve(self, request: CspRequest) -> Union[bytes, Refused]:
        if request.fn_id in self.blacklist:
            return Refused("blacklisted")
        if request.ef_id not in self.files:
            return Refused("unknown-file")
        row = self.verification_list.get(request.ff_id)
        if row is None:
            return Refused("unknown-federation")
        verify_key = row.ffpk.verifiers.get(request.fn_id)
        message = attribute_message(request.attributes, "csp", request.fn_id, request.ef_id)
        if verify_key is None or not verify_signature(verify_key, message, request.att_sig):
            return Refused("bad-signature", rogue=True)
        blob, vf, _ = self.files[request.ef_id]
        n = vf.members
        if count_vf_matches(list(request.chunks), vf, n) < majority_threshold(n):
            return Refused("vf-mismatch", rogue=True)
        return blob

    def _log_replay(self, request: CspRequest) -> None:
        key = digest(encode_fields([request.ef_id, [c.to_bytes() for c in request.chunks]]))
        first = self.seen_chunks.get(key)
        if first is None:
            self.seen_chunks[key] = request.fn_id
            return
        self.replays.append((request.fn_id, request.ef_id, first))
        self.sim.note(CSP, f"replay|{request.fn_id}|{request.ef_id}|{first}")

    def receive(self, src: str, msg) -> None:
        if isinstance(msg, VerificationListUpdate):
            self.update_verification_list(msg.ff_id, msg.ffpk, msg.ff_att)
        elif isinstance(msg, PublishUpload):
            self.store(msg.ef_id, msg.blob, msg.vf, msg.owner)
        elif isinstance(msg, RogueReport):
            self.blacklist.add(msg.target)
        elif isinstance(msg, CspRequest):
            self._log_replay(msg)
            result = self.verify_and_serve(msg)
            if isinstance(result, Refused):
                self.requests_refused.append((msg.fn_id, msg.ef_id, result.reason))
                self.sim.note(CSP, f"refused|{msg.fn_id}|{result.reason}")
                self.sim.send(CSP, src, CspResponse(msg.ef_id, b"", result.reason))
                if result.rogue:
                    self.sim.send(CSP, CMI, RogueReport(msg.ff_id, msg.fn_id, CSP, result.reason))
            else:
                self.requests_served += 1
                self.sim.send(CSP, src, CspResponse(msg.ef_id, result))
