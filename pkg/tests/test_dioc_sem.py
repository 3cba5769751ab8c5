import random

import pytest
from hypothesis import given, settings, strategies as st

from corpus import BUYING_HOST, FIDELITY, FIXTURES, BY_NAME
from gen import random_dioc
from dioc.ast import (
    ERROR, ONE, ZERO, Assign, Binary, Call, Interaction, Lit, Operation, Seq, Store, Var,
    While, annotate, operations_of, walk,
)
from dioc.cli import host_function
from dioc.dioc_sem import (
    NOUP, TAU, TICK, Applied, Comm, Ctx, DiocSystem, FirstEnabled, HostEnv, ScheduleError, Scripted,
    Seeded, UpdatesChanged, dioc_apply_update_rule_check, dioc_enabled, dioc_successors, dioc_trace,
    eval_expr, is_weak,
)
from dioc.parser import SourceFile, parse_dioc, parse_update


def sys_of(p, state=None, updates=()):
    return DiocSystem.initial(annotate(p), state, updates)


def test_eval_examples():
    assert eval_expr(Binary("+", Lit(3), Lit(4)), {}) == 7
    assert eval_expr(Var("x"), {}) is ERROR
    host = HostEnv({"getPrice": lambda s: 20})
    assert eval_expr(Call("getPrice", (Lit("book"),)), {}, host) == 20


@pytest.mark.parametrize("text,value", [
    ("1 + x", ERROR), ("true and 1", ERROR), ("7 / 0", ERROR), ("7 / 2", 3.5), ("6 / 3", 2),
    ('"a" + "b"', "ab"), ("not 1", ERROR), ("1 == true", False), ("2 < 3", True),
    ("9223372036854775807 + 1", ERROR), ("-(2)", -2), ("f(x)", ERROR),
])
def test_eval_totality(text, value):
    from dioc.parser import parse_expr
    got = eval_expr(parse_expr(text), {})
    assert got is value if value is ERROR else (got == value and type(got) is type(value))


def test_get_input_consumes_queue():
    host = HostEnv(inputs={"a": [1, 2]})
    sys = sys_of(parse_dioc("x@a = getInput(); y@a = getInput(); z@a = getInput()"))
    for _ in range(3):
        (_, sys), = dioc_enabled(sys, host)
    local = sys.local("a")
    assert (local["x"], local["y"], local["z"]) == (1, 2, ERROR)


def test_end_rule():
    (label, nxt), = dioc_enabled(DiocSystem.initial(ONE))
    assert label == TICK and nxt.proc == ZERO
    assert dioc_enabled(nxt) == []


def test_interaction_rule():
    p = Interaction(Operation("o"), "a", Lit(5), "b", "x")
    (label, nxt), = dioc_enabled(sys_of(p))
    assert label == Comm(Operation("o"), "a", 5, "b", "x")
    assert isinstance(nxt.proc, Assign) and (nxt.proc.var, nxt.proc.role, nxt.proc.expr) == ("x", "b", Lit(5))


def test_while_exit():
    (label, nxt), = dioc_enabled(sys_of(While(Lit(False), "r", Assign("x", "r", Lit(1)))))
    assert label == TAU and nxt.proc == ONE


def test_while_unfold_copies_indexes():
    p = annotate(While(Lit(True), "r", Assign("x", "r", Lit(1))))
    (label, nxt), = dioc_enabled(DiocSystem.initial(p))
    assert nxt.proc == Seq(p.body, p)


def test_loop_bound_blocks():
    p = annotate(While(Lit(True), "r", Assign("x", "r", Lit(1))))
    s = DiocSystem.initial(p)
    ctx = Ctx(HostEnv(), loop_bound=1)
    (_, s), = dioc_successors(s, ctx)[0]
    (_, s), = dioc_successors(s, ctx)[0]
    out, blocked = dioc_successors(s, ctx)
    assert out == [] and blocked


def excerpt():
    return annotate(parse_dioc("scope @seller { s_price@seller = getPrice( s_prod );"
                               " offer : seller( s_price ) -> buyer( b_price ) }"), start=6)


def test_up_and_noup():
    upd = parse_update(SourceFile.read(FIDELITY))
    s = DiocSystem(Store(), (upd,), excerpt(), 21)
    out = dioc_enabled(s)
    assert [l for l, _ in out] == [NOUP, Applied("fidelity_card")]
    fresh = out[1][1]
    idx = sorted(n.index for n in walk(fresh.proc) if getattr(n, "index", None) is not None)
    assert idx == list(range(21, 28)) and fresh.alloc == 28
    assert {o.name for o, _, _ in operations_of(fresh.proc)} == {"cardReq", "card", "offer"}
    assert out[0][1].proc == excerpt().body


def test_update_rule_check():
    body = excerpt().body
    _, upd = parse_update(SourceFile.read(FIDELITY))
    assert dioc_apply_update_rule_check(body, upd)
    assert not dioc_apply_update_rule_check(body, parse_dioc("pay : buyer(1) -> bank(x)"))
    assert not dioc_apply_update_rule_check(body, parse_dioc("x@seller = 1; y@buyer = 2"))


def test_par_end_single_tick():
    s = sys_of(parse_dioc("{ 1 | 1 }"))
    assert [l for l, _ in dioc_enabled(s)] == [TICK]


def test_trace_examples():
    assert dioc_trace(DiocSystem.initial(ONE)) == [TICK]
    assert dioc_trace(sys_of(parse_dioc("x@a = 1; 1"))) == [TAU, TICK]


def test_buying_trace():
    host = HostEnv({k: host_function(v) for k, v in BUYING_HOST.items()}, {"buyer": ["book", True]})
    s = sys_of(parse_dioc(SourceFile.read(FIXTURES / "buying.dioc")))
    public = [l for l in dioc_trace(s, host, FirstEnabled(), 200) if is_weak(l) and l != NOUP]
    op = Operation
    assert public == [
        Comm(op("priceReq"), "buyer", "book", "seller", "s_prod"),
        Comm(op("offer"), "seller", 20, "buyer", "b_price"),
        Comm(op("payReq"), "seller", 20, "bank", "desc"),
        Comm(op("pay"), "buyer", 20, "bank", "auth"),
        Comm(op("confirm"), "bank", None, "seller", "_"),
        Comm(op("confirm"), "bank", None, "buyer", "_"),
        TICK,
    ]


def test_scripted_out_of_range():
    with pytest.raises(ScheduleError, match="invalid schedule"):
        dioc_trace(DiocSystem.initial(ONE), policy=Scripted({0: 3}))


def test_schedule_inserts_changes():
    upd = parse_update("x@a = 1", "u")
    s = DiocSystem.initial(annotate(parse_dioc("scope @a { y@a = 2 }")))
    trace = dioc_trace(s, policy=Scripted({0: 1}), schedule={0: (upd,)})
    assert trace[0] == UpdatesChanged(("u",)) and trace[1] == Applied("u")


def test_seeded_is_reproducible():
    s = BY_NAME["par_branches"].dioc()
    assert dioc_trace(s, policy=Seeded(3)) == dioc_trace(s, policy=Seeded(3))


def _walk_runs(s, seed, steps=60):
    rng = random.Random(seed)
    for _ in range(steps):
        out = dioc_enabled(s)
        if not out:
            return s
        label, s = rng.choice(out)
        yield label, s


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 30))
def test_tick_is_terminal_and_annotation_kept(seed, size):
    p = annotate(random_dioc(random.Random(seed), size))
    s = DiocSystem.initial(p)
    for label, s in _walk_runs(s, seed):
        assert all_indexed(s.proc)
        if label == TICK:
            assert dioc_enabled(s) == []


def all_indexed(p):
    # unfolding copies indexes, so only presence is checked here
    return all(n.index is not None for n in walk(p) if hasattr(n, "index"))


def test_only_assign_changes_state():
    s = sys_of(parse_dioc("o : a(1) -> b(x); if (true) @a { 1 }"))
    (_, s1), = dioc_enabled(s)
    assert s1.state == s.state
