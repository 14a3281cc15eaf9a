import pytest
from hypothesis import given, strategies as st

from fogfed.encoding import decode_fields, derive_seed, digest, encode_fields

fields = st.recursive(
    st.one_of(st.binary(max_size=20), st.text(max_size=10), st.integers(-(2**70), 2**70)),
    lambda inner: st.lists(inner, max_size=4),
    max_leaves=10,
)


def test_golden_encoding():
    data = encode_fields(["ab", 1, -1, b"x", None, ["y", 0]])
    assert data.hex() == (
        "00000006530000000261624900000001014900000001ff42000000017842000000004c"
        "0000001000000002530000000179490000000100"
    )


@given(st.lists(fields, max_size=5))
def test_roundtrip(values):
    assert decode_fields(encode_fields(values)) == values


def test_boundaries_are_unambiguous():
    assert encode_fields(["ab", "c"]) != encode_fields(["a", "bc"])
    assert encode_fields([b"1"]) != encode_fields(["1"]) != encode_fields([1])


def test_truncated_input_rejected():
    data = encode_fields(["hello", 5])
    with pytest.raises(ValueError):
        decode_fields(data[:-1])
    with pytest.raises(ValueError):
        decode_fields(data + b"\x00")


def test_derive_seed_is_label_sensitive():
    assert derive_seed(1, "group") == 12497274261872839583
    assert derive_seed(1, "group") != derive_seed(2, "group")
    assert derive_seed(1, "a", "b") != derive_seed(1, "ab")
    assert len(digest(b"x")) == 32
