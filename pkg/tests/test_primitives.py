import random

import pytest

from fogfed.primitives import (
    FileDecryptionError,
    SigningKey,
    attribute_message,
    decrypt_file,
    encrypt_file,
    file_key,
    verify_signature,
)

# RFC 8032 section 7.1, test 1
RFC_SECRET = bytes.fromhex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60")
RFC_PUBLIC = bytes.fromhex("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a")
RFC_SIG = bytes.fromhex(
    "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
)


def test_ed25519_known_answer():
    key = SigningKey(RFC_SECRET)
    assert key.verify_key == RFC_PUBLIC
    assert key.sign(b"") == RFC_SIG
    assert verify_signature(RFC_PUBLIC, b"", RFC_SIG)


def test_signature_rejections():
    key = SigningKey.generate(random.Random(1))
    sig = key.sign(b"msg")
    assert verify_signature(key.verify_key, b"msg", sig)
    assert not verify_signature(key.verify_key, b"msh", sig)
    assert not verify_signature(SigningKey.generate(random.Random(2)).verify_key, b"msg", sig)
    assert not verify_signature(b"short", b"msg", sig)
    assert "redacted" in repr(key)


def test_attribute_message_is_order_insensitive_and_context_bound():
    assert attribute_message(["b", "a"], "csp", "FN1") == attribute_message(["a", "b"], "csp", "FN1")
    assert attribute_message(["a"], "csp", "FN1") != attribute_message(["a"], "csp", "FN2")


def test_file_cipher_roundtrip_and_binding():
    nonce = bytes(12)
    blob = encrypt_file(b"payload", 42, "EF1", nonce)
    assert decrypt_file(blob, 42, "EF1") == b"payload"
    for sk, ef in [(43, "EF1"), (42, "EF2")]:
        with pytest.raises(FileDecryptionError):
            decrypt_file(blob, sk, ef)
    tampered = blob[:-1] + bytes([blob[-1] ^ 1])
    with pytest.raises(FileDecryptionError):
        decrypt_file(tampered, 42, "EF1")
    assert len(file_key(1)) == 32 and file_key(1) != file_key(2)
