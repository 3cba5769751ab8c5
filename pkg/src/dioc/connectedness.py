"""Connectedness of choreographies: first/last-action pair sets and the check itself."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .ast import (
    Assign, If, Interaction, One, Par, Scope, Seq, While, Zero, children, roles_of,
)


def pair(a, b):
    return (a, b) if a <= b else (b, a)


def trans_i(p) -> frozenset:
    return _trans(p)[0]


def trans_f(p) -> frozenset:
    return _trans(p)[1]


def _trans(p):
    info = {}
    for n in _postorder(p):
        info[id(n)] = _local_trans(n, info)
    return info[id(p)]


def _local_trans(n, info):
    if isinstance(n, Interaction):
        s = frozenset([pair(n.sender, n.receiver)])
        return s, s
    if isinstance(n, Assign):
        s = frozenset([(n.role, n.role)])
        return s, s
    if isinstance(n, (One, Zero)):
        return frozenset(), frozenset()
    if isinstance(n, Par):
        li, lf = info[id(n.left)]
        ri, rf = info[id(n.right)]
        return li | ri, lf | rf
    if isinstance(n, Seq):
        li, lf = info[id(n.left)]
        ri, rf = info[id(n.right)]
        return (li if li else ri), (rf if rf else lf)
    me = frozenset([(n.role, n.role)]) if not isinstance(n, Scope) else frozenset([(n.coordinator,) * 2])
    if isinstance(n, If):
        f = info[id(n.then)][1] | info[id(n.else_)][1]
        return me, (f if f else me)
    if isinstance(n, While):
        f = info[id(n.body)][1]
        return me, (f if f else me)
    if isinstance(n, Scope):
        r = n.coordinator
        others = roles_of(n.body) - {r}
        if not others:
            return me, me
        return me, frozenset(pair(o, r) for o in others)
    raise TypeError("not a DIOC process: %r" % (n,))


def _postorder(p):
    # iterative, children before parents
    out = []
    stack = [p]
    while stack:
        n = stack.pop()
        out.append(n)
        stack.extend(children(n))
    out.reverse()
    return out


def brute_cover(S, S2) -> bool:
    return all(set(a) & set(b) for a, b in product(S, S2))


def pair_cover_check(S, S2) -> bool:
    """True iff every pair of S meets every pair of S2."""
    S, S2 = list(S), list(S2)
    if len(S) > len(S2):
        S, S2 = S2, S
    if len(S) <= 9:
        return all(set(a) & set(b) for a in S for b in S2)
    # past nine pairs the only way to succeed is one element shared by all of them
    common = set(S[0])
    for a in S:
        common &= set(a)
        if not common:
            return False
    for b in S2:
        common &= set(b)
        if not common:
            return False
    return True


@dataclass
class Violation:
    kind: str  # "SEQ-CONN" or "PAR-CONN"
    span: object
    detail: object

    def message(self):
        if self.kind == "SEQ-CONN":
            last, first = self.detail
            return "sequence is not connected: last actions %s, first actions %s" % (
                _fmt_pairs(last), _fmt_pairs(first))
        return "parallel branches share operations: %s" % ", ".join(
            "%s: %s -> %s" % (o, a, b) for o, a, b in sorted(self.detail, key=str))


def _fmt_pairs(ps):
    return "{" + ", ".join("<%s,%s>" % p for p in sorted(ps)) + "}"


@dataclass
class ConnReport:
    violations: list = field(default_factory=list)

    @property
    def connected(self):
        return not self.violations


def _span_of(n):
    for c in [n, *children(n)]:
        s = getattr(c, "span", None)
        if s is not None:
            return s
    return None


def check_connected(p) -> ConnReport:
    """Single bottom-up pass computing first/last pairs per node.

    Operation signatures are collected only below parallel compositions,
    which is the only place they are compared.
    """
    nodes = _postorder(p)
    under_par = set()
    stack = [(p, False)]
    while stack:
        n, flag = stack.pop()
        if flag:
            under_par.add(id(n))
        for c in children(n):
            stack.append((c, flag or isinstance(n, Par)))

    info, ops = {}, {}
    report = ConnReport()
    for n in nodes:
        info[id(n)] = _local_trans(n, info)
        if id(n) in under_par or isinstance(n, Par):
            if isinstance(n, Interaction):
                ops[id(n)] = frozenset([(n.op, n.sender, n.receiver)])
            else:
                acc = frozenset()
                for c in children(n):
                    co = ops[id(c)]
                    acc = acc | co if len(acc) >= len(co) else co | acc
                ops[id(n)] = acc
        if isinstance(n, Seq):
            last = info[id(n.left)][1]
            first = info[id(n.right)][0]
            if not pair_cover_check(last, first):
                report.violations.append(Violation("SEQ-CONN", _span_of(n), (last, first)))
        elif isinstance(n, Par):
            shared = ops[id(n.left)] & ops[id(n.right)]
            if shared:
                report.violations.append(Violation("PAR-CONN", _span_of(n), shared))
    return report


def is_connected(p) -> bool:
    return check_connected(p).connected
