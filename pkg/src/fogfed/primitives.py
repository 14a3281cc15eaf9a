"""Signing keys and the authenticated file cipher used by the actors."""

from __future__ import annotations

import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .encoding import digest, encode_fields


class FileDecryptionError(ValueError):
    pass


@dataclass(frozen=True)
class SigningKey:
    seed: bytes

    @classmethod
    def generate(cls, rng: random.Random) -> "SigningKey":
        return cls(rng.randbytes(32))

    @property
    def _key(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(self.seed)

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)

    @property
    def verify_key(self) -> bytes:
        return self._key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def to_bytes(self) -> bytes:
        return self.seed

    def __repr__(self) -> str:
        return "SigningKey(<redacted>)"


def verify_signature(verify_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(verify_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def attribute_message(attrs, *context) -> bytes:
    """Bytes a node signs to prove its attributes, bound to a request context."""
    return encode_fields(["att-sig", sorted(attrs), list(context)])


def file_key(sk: int) -> bytes:
    return digest(encode_fields(["fogfed/file-key", sk]))


def encrypt_file(plaintext: bytes, sk: int, ef_id: str, nonce: bytes) -> bytes:
    return nonce + AESGCM(file_key(sk)).encrypt(nonce, plaintext, ef_id.encode())


def decrypt_file(blob: bytes, sk: int, ef_id: str) -> bytes:
    if len(blob) < 12 + 16:
        raise FileDecryptionError("encrypted file too short")
    try:
        return AESGCM(file_key(sk)).decrypt(blob[:12], blob[12:], ef_id.encode())
    except InvalidTag as exc:
        raise FileDecryptionError("authentication tag mismatch") from exc
