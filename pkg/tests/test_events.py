from corpus import FIXTURES
from dioc.ast import ONE, IndexTag, Lit, Operation, Par, Send, Seq, annotate
from dioc.events import (
    ASSIGN, DOWN, IF, RECV, SEND, UP, Event, check_well_annotated_dpoc, events_dioc, events_dpoc,
    inclusion_violations, leq_dioc, leq_dpoc, matching, order_embedding_violations,
)
from dioc.parser import SourceFile, parse_dioc
from dioc.projection import Network, RoleState, proj
from dioc.ast import Store

O, P = Operation("o"), Operation("p")
T = IndexTag


def prog(src):
    return annotate(parse_dioc(src))


def send(g, role, op, peer):
    return Event(SEND, g, role, op, peer)


def recv(g, role, op, peer):
    return Event(RECV, g, role, op, peer)


def test_interaction_events():
    assert events_dioc(prog("o : a(1) -> b(x)")) == {send((T(1),), "a", O, "b"), recv((T(1),), "b", O, "a")}


def test_one_has_no_events():
    assert events_dioc(annotate(ONE)) == set()


def test_scope_events():
    kinds = sorted((e.kind, e.gidx) for e in events_dioc(prog("scope @a { x@a = 1 }")))
    assert kinds == sorted([(UP, (T(1),)), (DOWN, (T(1),)), (ASSIGN, (T(2),))])


def test_sequentiality_over_roles():
    c = leq_dioc(prog("o : a(1) -> b(x); p : b(1) -> a(y)"))
    fa, ta = send((T(1),), "a", O, "b"), recv((T(1),), "b", O, "a")
    fb, tb = send((T(2),), "b", P, "a"), recv((T(2),), "a", P, "b")
    for x in (fa, ta):
        for y in (fb, tb):
            assert c.leq(x, y) and not c.leq(y, x)
    assert c.leq(fa, ta) and not c.leq(ta, fa)


def test_guard_precedes_branches():
    c = leq_dioc(prog("if (true) @a { o : a(1) -> b(x) } else { p : a(1) -> b(y) }"))
    g = next(e for e in c.events() if e.kind == IF)
    for e in c.events():
        assert c.leq(g, e)


def test_dpoc_synchronisation():
    # a send precedes whatever follows its matching receive
    c = leq_dpoc(proj(prog("o : a(1) -> b(x); p : b(1) -> c(y)")))
    f = send((T(1),), "a", O, "b")
    assert c.leq(f, send((T(2),), "b", P, "c"))
    assert not c.leq(send((T(2),), "b", P, "c"), f)


def test_scope_coordinator_brackets_body():
    c = leq_dpoc(proj(prog("scope @a { o : a(1) -> b(x) }")))
    up = next(e for e in c.events() if e.kind == UP)
    down = next(e for e in c.events() if e.kind == DOWN)
    body = send((T(2),), "a", O, "b")
    assert c.leq(up, body) and c.leq(body, down)


def test_parallel_sends_unordered():
    net = Network([RoleState("a", Par(Send(O, Lit(1), "b", T(1)), Send(P, Lit(2), "b", T(2))), Store())])
    c = leq_dpoc(net)
    x, y = send((T(1),), "a", O, "b"), send((T(2),), "a", P, "b")
    assert not c.leq(x, y) and not c.leq(y, x)


def test_matching():
    a = send((T(3, True),), "a", O, "b")
    assert matching(a, recv((T(3),), "b", O, "a"))
    assert not matching(a, recv((T(4),), "b", O, "a"))


def test_buying_well_annotated():
    p = annotate(parse_dioc(SourceFile.read(FIXTURES / "buying.dioc")))
    net = proj(p)
    assert check_well_annotated_dpoc(net).ok
    assert inclusion_violations(p, net) == []
    assert order_embedding_violations(p, net) == []
    assert events_dioc(p) <= events_dpoc(net)


def test_c3_violation():
    net = Network([RoleState("a", Par(Send(O, Lit(1), "b", T(1)), Send(O, Lit(2), "b", T(2))), Store())])
    assert "C3" in check_well_annotated_dpoc(net).by_condition()


def test_conflicting_sends_pass():
    net = proj(prog("if (true) @a { o : a(1) -> b(x) } else { o : a(2) -> b(x) }"))
    assert check_well_annotated_dpoc(net).ok


def test_c1_too_many_events():
    net = Network([RoleState("a", Seq(Send(O, Lit(1), "b", T(1)), Send(P, Lit(1), "b", T(1))), Store())])
    assert "C1" in check_well_annotated_dpoc(net).by_condition()
