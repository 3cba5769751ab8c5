"""Choreography-level semantics: expression evaluation, transition labels,
scheduling policies and the DIOC system transition relation."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace

from .ast import (
    ERROR, Assign, Binary, Call, Code, ErrorValue, If, Interaction, Lit, NoToken, One, Par,
    Scope, Seq, Store, Unary, Var, While, Zero, ZERO, annotate, count_indexed, format_value,
    is_well_annotated, max_index, node, roles_of, value_key,
)
from .connectedness import is_connected

log = logging.getLogger(__name__)

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1
INPUT_CURSOR = "#input"


# host environment and evaluation


@dataclass
class HostEnv:
    functions: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # role -> list of values


_warned = set()


def _warn_once(msg):
    if msg not in _warned:
        _warned.add(msg)
        log.warning(msg)


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int_ok(v):
    if isinstance(v, int) and not isinstance(v, bool) and not INT_MIN <= v <= INT_MAX:
        return ERROR
    return v


def _binary(op, a, b):
    if isinstance(a, ErrorValue) or isinstance(b, ErrorValue):
        return ERROR
    if op == "and" or op == "or":
        if not (isinstance(a, bool) and isinstance(b, bool)):
            return ERROR
        return (a and b) if op == "and" else (a or b)
    if op == "==":
        return value_key(a) == value_key(b) or (_num(a) and _num(b) and a == b)
    if op == "!=":
        return not _binary("==", a, b)
    if op in ("<", "<=", ">", ">="):
        if not ((_num(a) and _num(b)) or (isinstance(a, str) and isinstance(b, str))):
            return ERROR
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    if op == "+" and isinstance(a, str) and isinstance(b, str):
        return a + b
    if not (_num(a) and _num(b)):
        return ERROR
    if op == "+":
        return _int_ok(a + b)
    if op == "-":
        return _int_ok(a - b)
    if op == "*":
        return _int_ok(a * b)
    if op == "/":
        if b == 0:
            return ERROR
        if isinstance(a, int) and isinstance(b, int) and a % b == 0:
            return _int_ok(a // b)
        return a / b
    return ERROR


def evaluate(e, local, host: HostEnv | None = None, role: str | None = None):
    """Evaluate ``e`` for ``role``; returns ``(value, local')``.

    Only ``getInput`` touches the state (it advances the role's input cursor).
    """
    if isinstance(e, Lit):
        return e.value, local
    if isinstance(e, Var):
        return local.get(e.name, ERROR), local
    if isinstance(e, Unary):
        v, local = evaluate(e.arg, local, host, role)
        if e.op == "not":
            return (not v if isinstance(v, bool) else ERROR), local
        return (_int_ok(-v) if _num(v) else ERROR), local
    if isinstance(e, Binary):
        a, local = evaluate(e.left, local, host, role)
        b, local = evaluate(e.right, local, host, role)
        return _binary(e.op, a, b), local
    if isinstance(e, Call):
        args = []
        for a in e.args:
            v, local = evaluate(a, local, host, role)
            args.append(v)
        if e.name == "getInput" and not args:
            queue = (host.inputs.get(role, []) if host else [])
            pos = local.get(INPUT_CURSOR, 0)
            local = local.set(INPUT_CURSOR, pos + 1)
            return (queue[pos] if pos < len(queue) else ERROR), local
        fn = host.functions.get(e.name) if host else None
        if fn is None or any(isinstance(a, ErrorValue) for a in args):
            return ERROR, local
        try:
            return fn(*args), local
        except Exception:
            return ERROR, local
    raise TypeError("not an expression: %r" % (e,))


def eval_expr(e, local, host=None, role=None):
    return evaluate(e, local if isinstance(local, Store) else Store(local), host, role)[0]


def truth(v, where="") -> bool:
    if isinstance(v, bool):
        return v
    _warn_once("guard %sevaluated to %s, treated as false" % (where, format_value(v) if not isinstance(v, ErrorValue) else "error"))
    return False


# labels


@dataclass(frozen=True)
class Comm:
    op: object
    sender: str
    value: object
    receiver: str
    var: str

    def _key(self):
        return (self.op, self.sender, value_key(self.value), self.receiver, self.var)

    def __eq__(self, other):
        return isinstance(other, Comm) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class Tick:
    pass


@dataclass(frozen=True)
class Applied:
    name: str


@dataclass(frozen=True)
class NoUp:
    pass


@dataclass(frozen=True)
class UpdatesChanged:
    names: tuple


TAU, TICK, NOUP = Tau(), Tick(), NoUp()


def is_weak(label) -> bool:
    if isinstance(label, Tau):
        return False
    if isinstance(label, Comm):
        return not label.op.private
    return True


def label_json(label) -> dict:
    if isinstance(label, Comm):
        v = label.value
        if isinstance(v, Code):
            v = "<code>"
        elif isinstance(v, NoToken):
            v = "no"
        elif isinstance(v, ErrorValue):
            v = "error"
        return {"kind": "interaction", "op": str(label.op), "from": label.sender,
                "to": label.receiver, "value": v, "var": label.var}
    if isinstance(label, Tau):
        return {"kind": "tau"}
    if isinstance(label, Tick):
        return {"kind": "tick"}
    if isinstance(label, Applied):
        return {"kind": "update", "name": label.name}
    if isinstance(label, NoUp):
        return {"kind": "noup"}
    if isinstance(label, UpdatesChanged):
        return {"kind": "updates-changed", "updates": list(label.names)}
    raise TypeError(label)


def label_str(label) -> str:
    if isinstance(label, Comm):
        v = label.value
        if isinstance(v, Code):
            shown = "<code>"
        elif isinstance(v, NoToken):
            shown = "no"
        else:
            shown = format_value(v) if not isinstance(v, ErrorValue) else "error"
        return "%s : %s(%s) -> %s(%s)" % (label.op, label.sender, shown, label.receiver, label.var)
    return {Tau: "tau", Tick: "tick", NoUp: "no-up"}.get(type(label)) or (
        "update %s" % label.name if isinstance(label, Applied) else "updates %s" % (list(label.names),))


# systems


@dataclass(frozen=True)
class Ctx:
    host: HostEnv = field(default_factory=HostEnv)
    loop_bound: int | None = None

    def __hash__(self):
        return id(self)


def freeze_loops(d):
    return tuple(sorted(d.items()))


@node
class DiocSystem:
    state: Store  # role -> Store
    updates: tuple  # ((name, body), ...)
    proc: object
    alloc: int = 1
    loops: tuple = ()  # (((role, index), unfolds), ...)

    @classmethod
    def initial(cls, proc, state=None, updates=()):
        if not is_well_annotated(proc):
            proc = annotate(proc)
        st = Store({r: Store((state or {}).get(r, {})) for r in (state or {})})
        return cls(st, tuple(updates), proc, max_index(proc) + 1)

    def local(self, role):
        return self.state.get(role, Store())

    def with_updates(self, updates):
        return replace(self, updates=tuple(updates))


def can_tick(p) -> bool:
    stack = [p]
    while stack:
        n = stack.pop()
        if isinstance(n, One):
            continue
        if isinstance(n, (Seq, Par)):
            stack.append(n.left)
            stack.append(n.right)
            continue
        return False
    return True


def dioc_apply_update_rule_check(body, upd) -> bool:
    return roles_of(upd) <= roles_of(body) and is_connected(upd)


def _redexes(p):
    """Yield ``(leaf, plug)`` for every leaf that may move, left to right."""
    if isinstance(p, Seq):
        for leaf, plug in _redexes(p.left):
            yield leaf, (lambda x, plug=plug, q=p.right: Seq(plug(x), q))
        if can_tick(p.left):
            yield from _redexes(p.right)
    elif isinstance(p, Par):
        for leaf, plug in _redexes(p.left):
            yield leaf, (lambda x, plug=plug, q=p.right: Par(plug(x), q))
        for leaf, plug in _redexes(p.right):
            yield leaf, (lambda x, plug=plug, q=p.left: Par(q, plug(x)))
    elif isinstance(p, (One, Zero)):
        return
    else:
        yield p, (lambda x: x)


def dioc_enabled(sys: DiocSystem, host=None):
    """Enabled transitions ``[(label, system')]`` of a DIOC system."""
    return dioc_successors(sys, host)[0]


def dioc_successors(sys: DiocSystem, host=None):
    """Like ``dioc_enabled`` but also reports whether the loop bound held back a step."""
    ctx = host if isinstance(host, Ctx) else Ctx(host or HostEnv())
    out = []
    blocked = False
    loops = dict(sys.loops)
    for leaf, plug in _redexes(sys.proc):
        if isinstance(leaf, Interaction):
            orig = sys.local(leaf.sender)
            v, local = evaluate(leaf.expr, orig, ctx.host, leaf.sender)
            st = sys.state.set(leaf.sender, local) if local is not orig else sys.state
            cont = Assign(leaf.var, leaf.receiver, Lit(v), leaf.index) if leaf.var != "_" else One()
            out.append((Comm(leaf.op, leaf.sender, v, leaf.receiver, leaf.var),
                        replace(sys, state=st, proc=plug(cont))))
        elif isinstance(leaf, Assign):
            local = sys.local(leaf.role)
            v, local = evaluate(leaf.expr, local, ctx.host, leaf.role)
            st = sys.state.set(leaf.role, local.set(leaf.var, v))
            out.append((TAU, replace(sys, state=st, proc=plug(One()))))
        elif isinstance(leaf, If):
            local = sys.local(leaf.role)
            v, local2 = evaluate(leaf.guard, local, ctx.host, leaf.role)
            st = sys.state.set(leaf.role, local2) if local2 is not local else sys.state
            branch = leaf.then if truth(v, "of if %s " % leaf.index) else leaf.else_
            out.append((TAU, replace(sys, state=st, proc=plug(branch))))
        elif isinstance(leaf, While):
            local = sys.local(leaf.role)
            v, local2 = evaluate(leaf.guard, local, ctx.host, leaf.role)
            st = sys.state.set(leaf.role, local2) if local2 is not local else sys.state
            if truth(v, "of while %s " % leaf.index):
                key = (leaf.role, leaf.index)
                n = loops.get(key, 0)
                if ctx.loop_bound is not None and n >= ctx.loop_bound:
                    blocked = True
                    continue
                nl = dict(loops)
                nl[key] = n + 1
                out.append((TAU, replace(sys, state=st, proc=plug(Seq(leaf.body, leaf)),
                                         loops=freeze_loops(nl))))
            else:
                out.append((TAU, replace(sys, state=st, proc=plug(One()))))
        elif isinstance(leaf, Scope):
            out.append((NOUP, replace(sys, proc=plug(leaf.body))))
            for name, body in sys.updates:
                if dioc_apply_update_rule_check(leaf.body, body):
                    fresh = annotate(body, start=sys.alloc)
                    alloc = sys.alloc + count_indexed(body)
                    out.append((Applied(name), replace(sys, proc=plug(fresh), alloc=alloc)))
        else:
            raise TypeError("unexpected DIOC node %r" % (leaf,))
    if can_tick(sys.proc):
        out.append((TICK, replace(sys, proc=ZERO)))
    return out, blocked


def change_updates(sys, updates):
    return UpdatesChanged(tuple(n for n, _ in updates)), sys.with_updates(updates)


# policies and runs


class ScheduleError(Exception):
    pass


class FirstEnabled:
    def choose(self, step, options):
        return 0


class Seeded:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def choose(self, step, options):
        return self.rng.randrange(len(options))


class Scripted:
    """Choice index per step number; unlisted steps take ``default``."""

    def __init__(self, choices=None, default: int = 0):
        if isinstance(choices, (list, tuple)):
            choices = dict(enumerate(choices))
        self.choices = dict(choices or {})
        self.default = default

    def choose(self, step, options):
        i = self.choices.get(step, self.default)
        if not 0 <= i < len(options):
            raise ScheduleError("invalid schedule: step %d has %d options, choice %d" % (step, len(options), i))
        return i


def run(sys, successors, policy, max_steps, schedule=None, resolve=None):
    """Drive a system with a policy; shared by both levels.

    ``schedule`` maps a weak-label count to an update list; the change fires
    as soon as that many weak labels have been produced.
    """
    schedule = dict(schedule or {})
    trace = []
    weak = 0
    fired = set()
    step = 0
    while step < max_steps:
        if weak in schedule and weak not in fired:
            fired.add(weak)
            label, sys = change_updates(sys, schedule[weak])
            trace.append(label)
            continue
        options = successors(sys)
        if not options:
            break
        label, sys = options[policy.choose(step, options)]
        trace.append(label)
        step += 1
        if is_weak(label):
            weak += 1
    return trace


def dioc_trace(sys, host=None, policy=None, max_steps=64, schedule=None):
    ctx = host if isinstance(host, Ctx) else Ctx(host or HostEnv())
    return run(sys, lambda s: dioc_successors(s, ctx)[0], policy or FirstEnabled(), max_steps, schedule)
