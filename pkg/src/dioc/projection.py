"""Endpoint projection: choreography -> one DPOC process per role."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .ast import (
    NO, Assign, Code, If, IndexTag, Interaction, LAssign, LIf, Lit, LWhile, One, ONE, Par, Recv,
    Scope, ScopeLead, ScopePlain, Send, SendHO, Seq, Store, Var, While, Zero, ZERO, annotate, aux_op,
    aux_var, count_indexed, is_well_annotated, map_chain, max_index, par, roles_of, seq, walk,
)

OK = Lit("ok")
ACK_VAR = "_"


@dataclass(frozen=True)
class RoleState:
    role: str
    proc: object
    local: Store


class Network:
    """A parallel composition of named roles, kept sorted by role name."""

    __slots__ = ("roles", "_h")

    def __init__(self, roles=()):
        self.roles = tuple(sorted(roles, key=lambda rs: rs.role))
        self._h = None

    @classmethod
    def of(cls, mapping):
        return cls(RoleState(r, p, l if isinstance(l, Store) else Store(l)) for r, (p, l) in mapping.items())

    def __getitem__(self, role):
        for rs in self.roles:
            if rs.role == role:
                return rs
        raise KeyError(role)

    def __contains__(self, role):
        return any(rs.role == role for rs in self.roles)

    def names(self):
        return [rs.role for rs in self.roles]

    def procs(self):
        return {rs.role: rs.proc for rs in self.roles}

    def update(self, role, proc=None, local=None):
        out = []
        for rs in self.roles:
            if rs.role == role:
                rs = RoleState(role, rs.proc if proc is None else proc, rs.local if local is None else local)
            out.append(rs)
        return Network(out)

    def map_procs(self, fn):
        return Network(RoleState(rs.role, fn(rs.role, rs.proc), rs.local) for rs in self.roles)

    def __eq__(self, other):
        return isinstance(other, Network) and self.roles == other.roles

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.roles)
        return self._h

    def __repr__(self):
        return "Network(%s)" % ", ".join(rs.role for rs in self.roles)


class AuxNamer:
    """Fresh naturals for auxiliary communication indexes.

    Keys are ``(construct index, role, kind)``, so every role that asks about
    the same construct sees the same numbers.
    """

    def __init__(self, start: int):
        self.counter = start
        self.assignments = {}

    def get(self, n, role, kind):
        key = (n, role, kind)
        if key not in self.assignments:
            self.assignments[key] = self.counter
            self.counter += 1
        return self.assignments[key]

    def fresh(self):
        self.counter += 1
        return self.counter - 1


def plan_aux(p, start: int) -> AuxNamer:
    """Allocate every auxiliary index of ``p`` up front, in preorder."""
    namer = AuxNamer(start)
    for n in walk(p):
        if isinstance(n, If):
            for r in sorted((roles_of(n.then) | roles_of(n.else_)) - {n.role}):
                namer.get(n.index, r, "i")
        elif isinstance(n, While):
            for r in sorted(roles_of(n.body) - {n.role}):
                namer.get(n.index, r, "i")
                namer.get(n.index, r, "j")
    return namer


def pi(p, s: str, namer: AuxNamer | None = None):
    """Project an annotated choreography onto role ``s``."""
    if not is_well_annotated(p):
        raise ValueError("projection needs a well-annotated process")
    if namer is None:
        namer = plan_aux(p, max_index(p) + 1)
    return _pi(p, s, namer)


def _pi(p, s, namer):
    if isinstance(p, (Seq, Par)):
        return map_chain(p, lambda c: _pi(c, s, namer))
    if isinstance(p, One):
        return ONE
    if isinstance(p, Zero):
        return ZERO
    n = p.index
    if isinstance(p, Interaction):
        if s == p.sender:
            return Send(p.op, p.expr, p.receiver, IndexTag(n))
        if s == p.receiver:
            return Recv(p.op, p.var, p.sender, IndexTag(n))
        return ONE
    if isinstance(p, Assign):
        return LAssign(p.var, p.expr, IndexTag(n)) if s == p.role else ONE
    if isinstance(p, If):
        r = p.role
        others = sorted((roles_of(p.then) | roles_of(p.else_)) - {r})
        if s == r:
            def bcast(value):
                return par(*[Send(aux_op(n), Lit(value), o, IndexTag(namer.get(n, o, "i"), value))
                             for o in others])
            return LIf(p.guard,
                       Seq(bcast(True), _pi(p.then, s, namer)),
                       Seq(bcast(False), _pi(p.else_, s, namer)),
                       IndexTag(n))
        if s in others:
            i = IndexTag(namer.get(n, s, "i"))
            return Seq(Recv(aux_op(n), aux_var(n), r, i),
                       LIf(Var(aux_var(n)), _pi(p.then, s, namer), _pi(p.else_, s, namer), IndexTag(n)))
        return ONE
    if isinstance(p, While):
        r = p.role
        others = sorted(roles_of(p.body) - {r})
        if s == r:
            def bcast(value):
                return par(*[Send(aux_op(n), Lit(value), o, IndexTag(namer.get(n, o, "i"), value))
                             for o in others])
            acks = par(*[Recv(aux_op(n), ACK_VAR, o, IndexTag(namer.get(n, o, "j"))) for o in others])
            loop = LWhile(p.guard, seq(bcast(True), _pi(p.body, s, namer), acks), IndexTag(n))
            return Seq(loop, bcast(False))
        if s in others:
            i = IndexTag(namer.get(n, s, "i"))
            j = IndexTag(namer.get(n, s, "j"))
            x = aux_var(n)
            body = seq(_pi(p.body, s, namer), Send(aux_op(n), OK, r, j), Recv(aux_op(n), x, r, i))
            return Seq(Recv(aux_op(n), x, r, i), LWhile(Var(x), body, IndexTag(n)))
        return ONE
    if isinstance(p, Scope):
        r = p.coordinator
        body_roles = roles_of(p.body)
        if s == r:
            return ScopeLead(IndexTag(n), r, _pi(p.body, s, namer), frozenset(body_roles), p.name)
        if s in body_roles:
            return ScopePlain(IndexTag(n), r, _pi(p.body, s, namer), p.name)
        return ONE
    raise TypeError("not a DIOC process: %r" % (p,))


def proj(p, sigma=None, namer: AuxNamer | None = None) -> Network:
    """Project onto every role of ``p``, each with its slice of the global state."""
    if not is_well_annotated(p):
        raise ValueError("projection needs a well-annotated process")
    if namer is None:
        namer = plan_aux(p, max_index(p) + 1)
    sigma = sigma or {}
    return Network(
        RoleState(r, _pi(p, r, namer), Store(sigma.get(r, {})))
        for r in sorted(roles_of(p))
    )


def prefix_ops(p, n: int):
    """Give every user operation in ``p`` the extended prefix ``n``."""
    if isinstance(p, Interaction):
        return replace(p, op=p.op.extended(n))
    if isinstance(p, (Seq, Par)):
        return map_chain(p, lambda c: prefix_ops(c, n))
    if isinstance(p, If):
        return replace(p, then=prefix_ops(p.then, n), else_=prefix_ops(p.else_, n))
    if isinstance(p, (While, Scope)):
        return replace(p, body=prefix_ops(p.body, n))
    return p


def fresh_indexes(upd, n, alloc: int):
    """Copy of ``upd`` with fresh construct indexes from ``alloc`` and ops prefixed by ``n``.

    Returns ``(process, next_alloc)``.
    """
    base = n.base if isinstance(n, IndexTag) else n
    out = prefix_ops(annotate(upd, start=alloc), base)
    return out, alloc + count_indexed(upd)


def project_update(upd, n, alloc: int, roles):
    """Everything the coordinator needs for an update: freshened process,
    per-role projections and the next free index."""
    fresh, alloc = fresh_indexes(upd, n, alloc)
    namer = plan_aux(fresh, alloc)
    procs = {r: _pi(fresh, r, namer) for r in sorted(roles)}
    return fresh, procs, namer.counter, namer


def lead_up_continuation(n: IndexTag, coord: str, roles, procs, alloc: int):
    """``Π o*_n!<P_i> to r_i ; P_coord ; Π o*_n?(_) from r_i``; returns ``(proc, alloc)``."""
    others = sorted(set(roles) - {coord})
    sends, acks = [], []
    for r in others:
        i, j = IndexTag(alloc), IndexTag(alloc + 1)
        alloc += 2
        sends.append(SendHO(aux_op(n.base), Code(procs[r]), r, i, j))
        acks.append(Recv(aux_op(n.base), ACK_VAR, r, j))
    return seq(par(*sends), procs[coord], par(*acks)), alloc


def lead_noup_continuation(n: IndexTag, coord: str, roles, body, alloc: int):
    others = sorted(set(roles) - {coord})
    sends, acks = [], []
    for r in others:
        i, j = IndexTag(alloc), IndexTag(alloc + 1)
        alloc += 2
        sends.append(SendHO(aux_op(n.base), NO, r, i, j))
        acks.append(Recv(aux_op(n.base), ACK_VAR, r, j))
    return seq(par(*sends), body, par(*acks)), alloc
