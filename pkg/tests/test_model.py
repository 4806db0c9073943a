import pytest
from hypothesis import given, strategies as st

from draftvault.errors import BadHeader, Corrupt, NotFound
from draftvault.model import Drawing, ElementPayload

from conftest import multiset

E1 = ElementPayload(1, b"\x01\x02")
E2 = ElementPayload(2, b"\x03")

elements_strategy = st.lists(
    st.builds(ElementPayload, st.integers(0, 0xFFFF), st.binary(max_size=40)),
    max_size=30,
)


def test_payload_identity_is_content():
    assert ElementPayload(1, b"ab") == ElementPayload(1, b"ab")
    assert ElementPayload(1, b"ab") != ElementPayload(2, b"ab")
    assert ElementPayload(1, b"ab") != ElementPayload(1, b"abc")


def test_payload_is_immutable_and_validated():
    with pytest.raises(Exception):
        ElementPayload(1, b"x").kind = 2
    with pytest.raises(ValueError):
        ElementPayload(-1, b"")
    with pytest.raises(ValueError):
        ElementPayload(0x10000, b"")
    with pytest.raises(TypeError):
        ElementPayload(0, "not bytes")


def test_add_to_empty():
    d = Drawing()
    d.add_element(E1)
    assert d.elements == [E1]
    assert d.dirty


def test_add_duplicate_keeps_both():
    d = Drawing(elements=[E1])
    d.add_element(E1)
    assert len(d) == 2
    assert multiset(d.elements) == {(1, b"\x01\x02"): 2}


def test_add_changes_canonical_bytes():
    d = Drawing()
    before = d.canonical_bytes()
    d.add_element(E1)
    assert d.canonical_bytes() != before


def test_remove_single():
    d = Drawing(elements=[E1])
    d.remove_matching(E1)
    assert d.elements == []


def test_remove_picks_most_recent_duplicate():
    first = ElementPayload(1, b"dup")
    second = ElementPayload(1, b"dup")
    d = Drawing(elements=[first, E2, second])
    d.remove_matching(ElementPayload(1, b"dup"))
    assert d.elements == [first, E2]
    assert d.elements[0] is first  # the earlier occurrence survived


def test_remove_missing_raises_and_leaves_drawing():
    d = Drawing(elements=[E1])
    with pytest.raises(NotFound):
        d.remove_matching(E2)
    assert d.elements == [E1]


def test_remove_preserves_relative_order():
    payloads = [ElementPayload(i % 3, bytes([i])) for i in range(10)]
    d = Drawing(elements=list(payloads))
    d.remove_matching(payloads[4])
    assert d.elements == payloads[:4] + payloads[5:]


def test_empty_drawing_is_fixed_ten_byte_header():
    assert Drawing().canonical_bytes() == bytes.fromhex("54434744" "0100" "00000000")


def test_equal_drawings_built_differently_serialize_identically():
    a = Drawing(elements=[E1, E2])
    b = Drawing()
    b.add_element(E1)
    b.add_element(E2)
    b.add_element(E1)
    b.remove_matching(E1)
    assert a.canonical_bytes() == b.canonical_bytes()


@given(elements_strategy)
def test_canonical_round_trip(elements):
    d = Drawing(elements=elements)
    again = Drawing.from_canonical_bytes(d.canonical_bytes())
    assert again.elements == d.elements
    assert again.canonical_bytes() == d.canonical_bytes()


@given(elements_strategy, elements_strategy)
def test_canonical_is_injective_over_sequences(lhs, rhs):
    same = Drawing(elements=lhs).canonical_bytes() == Drawing(elements=rhs).canonical_bytes()
    assert same == (lhs == rhs)


@given(elements_strategy, st.builds(ElementPayload, st.integers(0, 0xFFFF), st.binary(max_size=40)))
def test_remove_inverts_add(elements, extra):
    d = Drawing(elements=list(elements))
    before = multiset(d.elements)
    d.add_element(extra)
    d.remove_matching(extra)
    assert multiset(d.elements) == before


def test_parse_rejects_garbage():
    with pytest.raises(BadHeader):
        Drawing.from_canonical_bytes(b"nope")
    with pytest.raises(BadHeader):
        Drawing.from_canonical_bytes(bytes.fromhex("54434744" "0200" "00000000"))
    intact = Drawing(elements=[E1]).canonical_bytes()
    with pytest.raises(Corrupt):
        Drawing.from_canonical_bytes(intact[:-1])
    with pytest.raises(Corrupt):
        Drawing.from_canonical_bytes(intact + b"\x00")


def test_revision_counts_mutations():
    d = Drawing(elements=[E1])
    r0 = d.revision
    d.add_element(E2)
    d.remove_matching(E2)
    assert d.revision == r0 + 2
