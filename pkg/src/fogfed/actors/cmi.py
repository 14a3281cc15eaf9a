"""Cryptographic materials issuer: system setup, federation list, node admission."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .. import cpabe
from ..encoding import derive_seed, encode_fields
from ..group import GroupParams
from ..policy import AccessTree, parse_policy, satisfies
from ..primitives import SigningKey, attribute_message, verify_signature
from .messages import (
    Admit,
    JoinDeclined,
    JoinGrant,
    JoinRequest,
    ProblemReport,
    RogueNotice,
    RogueReport,
    VerificationListUpdate,
)

log = logging.getLogger(__name__)

CMI = "CMI"
CSP = "CSP"


class JoinRefused(Exception):
    pass


@dataclass
class FederationRecord:
    ff_id: str
    expression: str
    policy: AccessTree
    keys: cpabe.FederationKeys
    roster: list[str] = field(default_factory=list)
    ousted: set[str] = field(default_factory=set)
    issued: int = 0

    @property
    def active(self) -> list[str]:
        return [m for m in self.roster if m not in self.ousted]


@dataclass(frozen=True)
class Admission:
    fn_id: str
    ff_id: str
    fnsk: cpabe.FnSecretKey
    signing_key: SigningKey
    ffpk: cpabe.PublicKey
    attributes: tuple[str, ...]
    att_sig: bytes
    certificate: bytes
    roster: tuple[str, ...]


def certificate_message(fn_id: str, ff_id: str, attrs, verify_key: bytes) -> bytes:
    return encode_fields(["member-cert", fn_id, ff_id, sorted(attrs), verify_key])


class Cmi:
    def __init__(self, params: GroupParams, seed: int, sim=None):
        self.params = params
        self.seed = seed
        self.sim = sim
        self.system = cpabe.setup(params, derive_seed(seed, "system-keys"))
        self.issuer = SigningKey.generate(random.Random(derive_seed(seed, "issuer")))
        self.federations: dict[str, FederationRecord] = {}
        self.problem_reports: list[tuple[str, str]] = []
        self.rogue_reports: list[tuple[str, str, str]] = []
        self.issuance_log: list[tuple[str, bytes]] = []

    @property
    def issuer_key(self) -> bytes:
        return self.issuer.verify_key

    def create_federation(self, expression: str) -> str:
        policy = parse_policy(expression)
        canonical = policy.to_expr()
        for rec in self.federations.values():
            if rec.expression == canonical:
                return rec.ff_id
        ff_id = f"FF{len(self.federations) + 1}"
        keys = cpabe.federation_setup(self.params, derive_seed(self.seed, "federation", ff_id))
        self.federations[ff_id] = FederationRecord(ff_id, canonical, policy, keys)
        return ff_id

    def find_federation(self, attrs) -> Optional[str]:
        for ff_id, rec in self.federations.items():
            if satisfies(rec.policy, attrs):
                return ff_id
        return None

    def verification_row(self, ff_id: str) -> VerificationListUpdate:
        rec = self.federations[ff_id]
        return VerificationListUpdate(ff_id, rec.keys.public, rec.expression)

    def admit(self, attrs, verified: bool = True) -> Admission:
        """Assign a node to a federation (creating one if none matches) and issue its keys."""
        attrs = tuple(sorted(set(attrs)))
        if not verified:
            raise JoinRefused("node failed verification")
        if not attrs:
            raise JoinRefused("node presented no attributes")
        ff_id = self.find_federation(attrs)
        if ff_id is None:
            ff_id = self.create_federation(" AND ".join(attrs))
        rec = self.federations[ff_id]
        rec.issued += 1
        fn_id = f"{ff_id}.FN{rec.issued}"
        rng = random.Random(derive_seed(self.seed, "member", fn_id))
        fnsk = cpabe.keygen(rec.keys, attrs, rng)
        signing_key = SigningKey.generate(rng)
        roster = tuple(rec.active)
        rec.roster.append(fn_id)
        rec.keys = cpabe.SystemKeys(rec.keys.public.with_verifier(fn_id, signing_key.verify_key), rec.keys.master)
        cert = self.issuer.sign(certificate_message(fn_id, ff_id, attrs, signing_key.verify_key))
        att_sig = signing_key.sign(attribute_message(attrs, "join", fn_id))
        self.issuance_log.append((fn_id, signing_key.verify_key))
        return Admission(fn_id, ff_id, fnsk, signing_key, rec.keys.public, attrs, att_sig, cert, roster)

    def record_ousted(self, ff_id: str, target: str) -> None:
        rec = self.federations.get(ff_id)
        if rec is None or target in rec.ousted:
            return
        rec.ousted.add(target)
        rec.keys = cpabe.SystemKeys(rec.keys.public.without_verifier(target), rec.keys.master)

    # -- simulator protocol ----------------------------------------------------

    def receive(self, src: str, msg) -> None:
        if isinstance(msg, JoinRequest):
            self._on_join(src, msg)
        elif isinstance(msg, RogueReport):
            self._on_rogue_report(src, msg)
        elif isinstance(msg, ProblemReport):
            self.problem_reports.append((msg.fn_id, msg.detail))
            self.sim.note(CMI, f"problem|{msg.fn_id}|{msg.detail}")

    def _on_join(self, src: str, msg: JoinRequest) -> None:
        try:
            adm = self.admit(msg.attributes, msg.verified)
        except JoinRefused as exc:
            self.sim.send(CMI, src, JoinDeclined(str(exc)))
            return
        self.sim.send(CMI, src, JoinGrant(
            adm.fn_id, adm.ff_id, adm.fnsk, adm.signing_key, adm.ffpk,
            adm.roster, self.issuer_key, not adm.roster, adm.att_sig, adm.certificate,
        ))
        self.sim.send(CMI, CSP, self.verification_row(adm.ff_id))
        if adm.roster:
            sponsor = min(adm.roster)
            self.sim.send(CMI, sponsor, Admit(
                adm.fn_id, adm.attributes, adm.signing_key.verify_key, adm.att_sig, adm.certificate,
            ))

    def _on_rogue_report(self, src: str, msg: RogueReport) -> None:
        self.rogue_reports.append((msg.target, msg.reporter, msg.cause))
        rec = self.federations.get(msg.ff_id)
        if rec is None:
            return
        if src == CSP:
            # CSP-detected misbehaviour: ask the federation to oust the node.
            self.sim.broadcast(CMI, [m for m in rec.active if m != msg.target], RogueNotice(msg.target, msg.cause))
        else:
            self.record_ousted(msg.ff_id, msg.target)
            self.sim.send(CMI, CSP, self.verification_row(msg.ff_id))
