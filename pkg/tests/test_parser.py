import random

import pytest
from hypothesis import given, settings, strategies as st

from corpus import FIDELITY, FIXTURES
from gen import random_dioc
from dioc.ast import (
    ONE, Assign, Binary, Call, Interaction, Lit, Operation, Par, Recv, Send, Seq, Unary, Var,
    count_indexed, strip_indexes, walk,
)
from dioc.parser import (
    ParseError, SourceFile, parse_dioc, parse_expr, parse_network, parse_update, pretty, squash,
)


def test_interaction():
    p = parse_dioc("priceReq : buyer( b_prod ) -> seller( s_prod )")
    assert p == Interaction(Operation("priceReq"), "buyer", Var("b_prod"), "seller", "s_prod")


def test_unicode_arrow():
    assert parse_dioc("o : a( 1 ) → b( x )") == parse_dioc("o : a(1) -> b(x)")


def test_assign():
    assert parse_dioc("price_ok@buyer = false") == Assign("price_ok", "buyer", Lit(False))


def test_empty_file_is_a_parse_error_at_origin():
    with pytest.raises(ParseError) as err:
        parse_dioc("")
    d = err.value.diagnostics[0]
    assert d.code == "PARSE" and d.span[:2] == (1, 1)


@pytest.mark.parametrize("src", ["x@a =", "o : a(1) -> a(x)", "if (x) @a { 1 } else", "{ x@a = 1 | }",
                                 "o : a(1) -> b(x_3)", "x@a = 1 2"])
def test_errors_have_spans_inside_input(src):
    with pytest.raises(ParseError) as err:
        parse_dioc(src)
    lines = src.split("\n")
    for d in err.value.diagnostics:
        line, col, _ = d.span
        assert 1 <= line <= len(lines)
        assert 1 <= col <= len(lines[line - 1]) + 1


def test_update_listing():
    name, body = parse_update(SourceFile.read(FIDELITY))
    assert name == "fidelity_card"
    assert count_indexed(body) == 7
    assert body.left == Interaction(Operation("cardReq"), "seller", Lit(None), "buyer", "_")


def test_update_single_assign():
    assert parse_update("x@a = 1", "u") == ("u", Assign("x", "a", Lit(1)))


def test_update_must_be_initial():
    with pytest.raises(ParseError) as err:
        parse_update("0", "u")
    assert err.value.diagnostics[0].message == "updates must be initial"


def test_precedence():
    e = parse_expr("not a or b and c == 1 + 2 * 3")
    assert e == Binary("or", Unary("not", Var("a")),
                       Binary("and", Var("b"), Binary("==", Var("c"), Binary("+", Lit(1), Binary("*", Lit(2), Lit(3))))))


def test_sequencing_looser_than_parallel():
    p = parse_dioc("{ x@a = 1 | y@b = 2 }; z@c = 3")
    assert isinstance(p, Seq) and isinstance(p.left, Par)


def test_comments_and_calls():
    p = parse_dioc("x@a = getPrice(s, 1) // trailing\n")
    assert p.expr == Call("getPrice", (Var("s"), Lit(1)))


def test_pretty_dpoc():
    assert pretty(Send(Operation("offer"), Var("s_price"), "buyer")) == "offer : s_price to buyer"
    assert pretty(Recv(Operation("o"), "x", "a")) == "o : x from a"
    assert pretty(ONE) == "1"


def test_round_trip_buying():
    p = parse_dioc(SourceFile.read(FIXTURES / "buying.dioc"))
    assert parse_dioc(pretty(p)) == p


def test_parse_is_deterministic():
    src = SourceFile.read(FIXTURES / "buying.dioc")
    assert parse_dioc(src) == parse_dioc(src)


def test_spans_do_not_affect_equality():
    assert parse_dioc("x@a = 1") == parse_dioc("\n\n   x@a = 1")


def test_parse_network():
    net = parse_network("role a { o : 5 to b } role b { o : x from a; if (x == 5) { y = 1 } }")
    assert set(net) == {"a", "b"}
    assert net["a"] == Send(Operation("o"), Lit(5), "b")
    with pytest.raises(ParseError):
        parse_network("role a { 1 } role a { 1 }")


def test_squash():
    assert squash("a ;\n  b") == squash("a; b")


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(1, 60))
def test_round_trip_random(seed, size):
    p = strip_indexes(random_dioc(random.Random(seed), size))
    q = parse_dioc(pretty(p))
    assert q == p
    assert sum(1 for _ in walk(q)) == sum(1 for _ in walk(p))
