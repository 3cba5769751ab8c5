"""Events with global indexes, causality orders at both levels and the
well-annotatedness conditions on DPOC networks."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx

from .ast import (
    Assign, If, Interaction, LAssign, LIf, LWhile, One, Par, Recv, Scope, ScopeLead,
    ScopePlain, Send, SendHO, Seq, While, Zero, tag,
)

SEND, RECV, ASSIGN, IF, WHILE, UP, DOWN = "send", "recv", "assign", "if", "while", "scope_init", "scope_term"
COMM = (SEND, RECV)


@dataclass(frozen=True)
class Event:
    kind: str
    gidx: tuple  # of IndexTag
    role: str | None = None
    op: object = None
    peer: str | None = None

    def __str__(self):
        g = ":".join(str(t) for t in self.gidx)
        if self.kind in COMM:
            arrow = "!" if self.kind == SEND else "?"
            return "%s %s%s %s@%s" % (g, self.op, arrow, self.peer, self.role)
        return "%s %s%s" % (g, self.kind, "@" + self.role if self.role else "")


def strip_gidx(g):
    return tuple(t.stripped() for t in g)


def matching(a: Event, b: Event) -> bool:
    """Send/receive halves of one communication."""
    if {a.kind, b.kind} != {SEND, RECV}:
        return False
    return (a.op == b.op and a.role == b.peer and a.peer == b.role
            and strip_gidx(a.gidx) == strip_gidx(b.gidx))


@dataclass
class Occ:
    """One syntactic occurrence of an event."""
    event: Event
    branches: tuple = ()  # ((if occurrence id, branch), ...)
    scopes: tuple = ()  # gidx of enclosing scopes, outermost first
    whiles: tuple = ()  # gidx of enclosing whiles, outermost first


@dataclass
class Causality:
    """Reachability over a DAG of generating clauses. Nodes are ints; event
    occurrences carry an ``Occ`` in ``occs``, the others are glue."""
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)
    occs: dict = field(default_factory=dict)
    leaves: dict = field(default_factory=dict)  # (role, id(node)) -> [occ ids]
    after: dict = field(default_factory=dict)  # occ id -> its exit glue node
    _desc: dict = field(default_factory=dict)

    def events(self):
        return {o.event for o in self.occs.values()}

    def by_event(self):
        out = {}
        for i, o in self.occs.items():
            out.setdefault(o.event, []).append(i)
        return out

    def reach(self, i):
        d = self._desc.get(i)
        if d is None:
            d = self._desc[i] = nx.descendants(self.graph, i) | {i}
        return d

    def leq_occ(self, i, j):
        return j in self.reach(i)

    def leq(self, a: Event, b: Event) -> bool:
        idx = self.by_event()
        return any(self.leq_occ(i, j) for i in idx.get(a, ()) for j in idx.get(b, ()))

    def pairs(self):
        """Every related pair of events (reflexive pairs included)."""
        out = set()
        for i, o in self.occs.items():
            for j in self.reach(i):
                if j in self.occs:
                    out.add((o.event, self.occs[j].event))
        return out

    def minimal_occ(self, i) -> bool:
        """No event strictly below occurrence ``i``."""
        for a in nx.ancestors(self.graph, i):
            if a in self.occs and not self.leq_occ(i, a):
                return False
        return True


class _Builder:
    def __init__(self):
        self.c = Causality()
        self.n = 0
        self.scopes = {}  # gidx -> {"lead": [(up, down)], "plain": [(up, down)]}

    def node(self):
        self.n += 1
        self.c.graph.add_node(self.n)
        return self.n

    def edge(self, a, b):
        self.c.graph.add_edge(a, b)

    def occ(self, event, ctx, leaf=None, role=None):
        i = self.node()
        self.c.occs[i] = Occ(event, ctx["branches"], ctx["scopes"], ctx["whiles"])
        if leaf is not None:
            self.c.leaves.setdefault((role, id(leaf)), []).append(i)
        return i

    def chain(self, p, role, ctx, build):
        kind = type(p)
        items = []
        while type(p) is kind:
            items.append(p.left)
            p = p.right
        items.append(p)
        IN, OUT = self.node(), self.node()
        parts = [build(x, role, ctx) for x in items]
        if kind is Seq:
            self.edge(IN, parts[0][0])
            for (_, o), (i, _) in zip(parts, parts[1:]):
                self.edge(o, i)
            self.edge(parts[-1][1], OUT)
        else:
            for i, o in parts:
                self.edge(IN, i)
                self.edge(o, OUT)
        return IN, OUT

    def simple(self, e, role, ctx, leaf=None):
        IN, OUT = self.node(), self.node()
        i = self.occ(e, ctx, leaf, role)
        self.edge(IN, i)
        self.edge(i, OUT)
        self.c.after[i] = OUT
        return IN, OUT

    def passthrough(self):
        IN, OUT = self.node(), self.node()
        self.edge(IN, OUT)
        return IN, OUT

    def guarded(self, g, bodies):
        """Guard occurrence ``g`` before each ``(IN, OUT)`` body."""
        IN, OUT = self.node(), self.node()
        self.edge(IN, g)
        self.edge(g, OUT)
        for i, o in bodies:
            self.edge(g, i)
            self.edge(o, OUT)
        return IN, OUT


def _ctx():
    return {"prefix": (), "branches": (), "scopes": (), "whiles": ()}


def _sub(ctx, **kw):
    d = dict(ctx)
    d.update(kw)
    return d


# DIOC level

def _build_dioc(b, p, role, ctx):
    if isinstance(p, (Seq, Par)):
        return b.chain(p, role, ctx, lambda x, r, c: _build_dioc(b, x, r, c))
    if isinstance(p, (One, Zero)):
        return b.passthrough()
    g = ctx["prefix"] + (tag(p.index),)
    if isinstance(p, Interaction):
        IN, OUT = b.node(), b.node()
        f = b.occ(Event(SEND, g, p.sender, p.op, p.receiver), ctx)
        t = b.occ(Event(RECV, g, p.receiver, p.op, p.sender), ctx)
        for x in (f, t):
            b.edge(IN, x)
            b.edge(x, OUT)
        b.edge(f, t)
        return IN, OUT
    if isinstance(p, Assign):
        return b.simple(Event(ASSIGN, g, p.role), role, ctx)
    if isinstance(p, If):
        gi = b.occ(Event(IF, g, p.role), ctx)
        then = _build_dioc(b, p.then, role, _sub(ctx, branches=ctx["branches"] + ((gi, True),)))
        else_ = _build_dioc(b, p.else_, role, _sub(ctx, branches=ctx["branches"] + ((gi, False),)))
        return b.guarded(gi, [then, else_])
    if isinstance(p, While):
        gi = b.occ(Event(WHILE, g, p.role), ctx)
        body = _build_dioc(b, p.body, role, _sub(ctx, prefix=g, whiles=ctx["whiles"] + (g,)))
        return b.guarded(gi, [body])
    if isinstance(p, Scope):
        return _scope(b, g, p.body, role, ctx, lambda x, r, c: _build_dioc(b, x, r, c))
    raise TypeError("not a DIOC process: %r" % (p,))


def _scope(b, g, body, role, ctx, build, leaf=None):
    IN, OUT = b.node(), b.node()
    up = b.occ(Event(UP, g), ctx, leaf, role)
    down = b.occ(Event(DOWN, g), ctx, None, role)
    kind = "plain" if isinstance(leaf, ScopePlain) else "lead"
    b.scopes.setdefault(g, {"lead": [], "plain": []})[kind].append((up, down))
    i, o = build(body, role, _sub(ctx, scopes=ctx["scopes"] + (g,)))
    b.edge(IN, up)
    b.edge(up, i)
    b.edge(o, down)
    b.edge(down, OUT)
    return IN, OUT


def leq_dioc(p) -> Causality:
    b = _Builder()
    _build_dioc(b, p, None, _ctx())
    return b.c


def events_dioc(p) -> set:
    return leq_dioc(p).events()


# DPOC level

def _build_dpoc(b, p, role, ctx):
    if isinstance(p, (Seq, Par)):
        return b.chain(p, role, ctx, lambda x, r, c: _build_dpoc(b, x, r, c))
    if isinstance(p, (One, Zero)):
        return b.passthrough()
    g = ctx["prefix"] + (tag(p.index),)
    if isinstance(p, Send):
        return b.simple(Event(SEND, g, role, p.op, p.to), role, ctx, p)
    if isinstance(p, SendHO):
        return b.simple(Event(SEND, g, role, p.op, p.to), role, ctx, p)
    if isinstance(p, Recv):
        return b.simple(Event(RECV, g, role, p.op, p.frm), role, ctx, p)
    if isinstance(p, LAssign):
        return b.simple(Event(ASSIGN, g, role), role, ctx, p)
    if isinstance(p, LIf):
        gi = b.occ(Event(IF, g, role), ctx, p, role)
        then = _build_dpoc(b, p.then, role, _sub(ctx, branches=ctx["branches"] + ((gi, True),)))
        else_ = _build_dpoc(b, p.else_, role, _sub(ctx, branches=ctx["branches"] + ((gi, False),)))
        return b.guarded(gi, [then, else_])
    if isinstance(p, LWhile):
        gi = b.occ(Event(WHILE, g, role), ctx, p, role)
        body = _build_dpoc(b, p.body, role, _sub(ctx, prefix=g, whiles=ctx["whiles"] + (g,)))
        return b.guarded(gi, [body])
    if isinstance(p, (ScopeLead, ScopePlain)):
        return _scope(b, g, p.body, role, ctx, lambda x, r, c: _build_dpoc(b, x, r, c), leaf=p)
    raise TypeError("not a DPOC process: %r" % (p,))


def leq_dpoc(net) -> Causality:
    b = _Builder()
    for rs in net.roles:
        _build_dpoc(b, rs.proc, rs.role, _ctx())
    c = b.c
    # the coordinator opens the scope for everyone and closes it after all acks
    for parts in b.scopes.values():
        for lu, ld in parts["lead"]:
            for pu, pd in parts["plain"]:
                c.graph.add_edge(lu, pu)
                c.graph.add_edge(pd, ld)
    # a matched event inherits what follows its partner
    comms = [(i, o) for i, o in c.occs.items() if o.event.kind in COMM]
    by_key = {}
    for i, o in comms:
        e = o.event
        key = (e.op, strip_gidx(e.gidx)) + ((e.role, e.peer) if e.kind == SEND else (e.peer, e.role))
        by_key.setdefault(key, []).append((i, e))
    for group in by_key.values():
        for (i, a), (j, bb) in combinations(group, 2):
            if matching(a, bb):
                c.graph.add_edge(i, c.after[j])
                c.graph.add_edge(j, c.after[i])
    return c


def events_dpoc(net) -> set:
    return leq_dpoc(net).events()


# checks

def conflicting(a: Occ, b: Occ) -> bool:
    ba = dict(a.branches)
    return any(k in ba and ba[k] != v for k, v in b.branches)


@dataclass
class WAReport:
    violations: list = field(default_factory=list)  # (condition, message)

    @property
    def ok(self):
        return not self.violations

    def by_condition(self):
        out = {}
        for c, m in self.violations:
            out.setdefault(c, []).append(m)
        return out


def check_well_annotated_dpoc(net, order: Causality | None = None) -> WAReport:
    """Static conditions C1, C3/C4, C5 and C6; C2 is dynamic (see ``fired_minimal``)."""
    c = order or leq_dpoc(net)
    rep = WAReport()
    occs = c.occs
    comm = [(i, o) for i, o in occs.items() if o.event.kind in COMM]

    by_gidx = {}
    for i, o in comm:
        by_gidx.setdefault(o.event.gidx, []).append(o.event)
    for g, evs in by_gidx.items():
        if len(evs) > 2 or (len(evs) == 2 and not matching(*evs)):
            rep.violations.append(("C1", "%d communication events share index %s: %s" % (
                len(evs), ":".join(map(str, g)), ", ".join(map(str, evs)))))

    groups = {}
    for i, o in comm:
        e = o.event
        groups.setdefault((e.kind, e.role, e.op, e.peer), []).append((i, o))
    for (kind, role, op, peer), items in groups.items():
        for (i, a), (j, b) in combinations(items, 2):
            if a.event.gidx == b.event.gidx or conflicting(a, b):
                continue
            if not (c.leq_occ(i, j) or c.leq_occ(j, i)):
                rep.violations.append(("C3" if kind == SEND else "C4",
                                       "unordered %ss %s and %s" % (kind, a.event, b.event)))

    for (i, a), (j, b) in combinations(comm, 2):
        if matching(a.event, b.event) and a.scopes != b.scopes:
            rep.violations.append(("C5", "matching events %s and %s sit in different scopes" % (a.event, b.event)))

    whiles = {}
    for i, o in occs.items():
        if o.event.kind == WHILE:
            whiles.setdefault(o.event.gidx, []).append(i)
    items = list(occs.items())
    by_last = {}
    for i, o in items:
        by_last.setdefault((o.event.kind, o.event.role, o.event.gidx[-1]), []).append((i, o))
    for group in by_last.values():
        for (i, a), (j, b) in combinations(group, 2):
            if a.event.gidx == b.event.gidx:
                continue
            if not (_c6_ok(c, whiles, i, a, j, b) or _c6_ok(c, whiles, j, b, i, a)):
                rep.violations.append(("C6", "indexes %s and %s clash outside while unfolding" % (a.event, b.event)))
    return rep


def _c6_ok(c, whiles, i, a, j, b):
    # a is inside a while that b is not inside, and b precedes that while's guard
    for w in a.whiles:
        if w in b.whiles:
            continue
        if any(c.leq_occ(j, g) for g in whiles.get(w, ())):
            return True
    return False


def order_embedding_violations(p, net, dioc_order=None, dpoc_order=None):
    """Pairs ordered at DIOC level but not (even through the matching event) in the network."""
    lo = dioc_order or leq_dioc(p)
    hi = dpoc_order or leq_dpoc(net)
    ev_hi = hi.by_event()
    partners = {}
    for e in ev_hi:
        if e.kind in COMM:
            partners[e] = [f for f in ev_hi if matching(e, f)]
    bad = []
    for a, b in lo.pairs():
        if a == b:
            continue
        if hi.leq(a, b) or any(hi.leq(a, f) for f in partners.get(b, ())):
            continue
        bad.append((a, b))
    return bad


def inclusion_violations(p, net):
    return sorted(events_dioc(p) - events_dpoc(net), key=str)


def fired_minimal(net, fired, order: Causality | None = None):
    """Fired ``(role, leaf)`` pairs whose event is not minimal in ``net``."""
    c = order or leq_dpoc(net)
    bad = []
    for role, leaf in fired:
        cands = c.leaves.get((role, id(leaf)), [])
        if not cands or not any(c.minimal_occ(i) for i in cands):
            bad.append((role, leaf))
    return bad
