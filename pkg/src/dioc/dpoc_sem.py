"""Endpoint-level semantics: role steps, rendezvous between roles and the
scope-update protocol with higher-order code shipping."""
from __future__ import annotations

from dataclasses import dataclass, replace

from . import projection
from .ast import (
    LAssign, LIf, Lit, LWhile, NoToken, One, ONE, Par, Recv, ScopeLead, ScopePlain, Send,
    SendHO, Seq, Store, Zero, ZERO, aux_op, max_index, node, roles_of,
)
from .connectedness import is_connected
from .dioc_sem import (
    NOUP, TAU, TICK, Applied, Comm, Ctx, FirstEnabled, HostEnv, can_tick, evaluate,
    freeze_loops, run, truth,
)
from .projection import ACK_VAR, OK, Network, RoleState


@node
class DpocSystem:
    updates: tuple
    network: Network
    alloc: int = 1
    loops: tuple = ()
    ended: bool = False

    @classmethod
    def initial(cls, network, updates=(), alloc=None):
        if alloc is None:
            alloc = 1 + max([0] + [max_index(rs.proc) for rs in network.roles])
        return cls(tuple(updates), network, alloc)

    def with_updates(self, updates):
        return replace(self, updates=tuple(updates))


def role_redexes(p):
    """``(leaf, plug)`` for every enabled leaf of a role process, left to right."""
    if isinstance(p, Seq):
        for leaf, plug in role_redexes(p.left):
            yield leaf, (lambda x, plug=plug, q=p.right: Seq(plug(x), q))
        if can_tick(p.left):
            yield from role_redexes(p.right)
    elif isinstance(p, Par):
        for leaf, plug in role_redexes(p.left):
            yield leaf, (lambda x, plug=plug, q=p.right: Par(plug(x), q))
        for leaf, plug in role_redexes(p.right):
            yield leaf, (lambda x, plug=plug, q=p.left: Par(q, plug(x)))
    elif isinstance(p, (One, Zero)):
        return
    else:
        yield p, (lambda x: x)


@dataclass
class Offer:
    role: str
    leaf: object
    plug: object
    value: object = None
    local: Store | None = None


def offers(sys: DpocSystem, ctx: Ctx):
    """Pending send and receive offers of every role (rule Out/Out-Up/In/Up/NoUp)."""
    sends, recvs = [], []
    for rs in sys.network.roles:
        for leaf, plug in role_redexes(rs.proc):
            if isinstance(leaf, Send):
                v, local = evaluate(leaf.expr, rs.local, ctx.host, rs.role)
                sends.append(Offer(rs.role, leaf, plug, v, local))
            elif isinstance(leaf, SendHO):
                sends.append(Offer(rs.role, leaf, plug, leaf.payload, rs.local))
            elif isinstance(leaf, (Recv, ScopePlain)):
                recvs.append(Offer(rs.role, leaf, plug))
    return sends, recvs


def matches(send: Offer, recv: Offer) -> bool:
    s, r = send.leaf, recv.leaf
    if s.to != recv.role:
        return False
    if isinstance(s, Send) and isinstance(r, Recv):
        return r.frm == send.role and r.op == s.op
    if isinstance(s, SendHO) and isinstance(r, ScopePlain):
        return r.coordinator == send.role and s.op == aux_op(r.index.base)
    return False


def _moves(sys: DpocSystem, ctx: Ctx):
    """All transitions as ``(label, system', fired)`` plus the loop-bound flag.

    ``fired`` lists the ``(role, leaf)`` constructs consumed by the step.
    """
    out = []
    blocked = False
    if sys.ended:
        return out, blocked
    net = sys.network
    loops = dict(sys.loops)
    for rs in net.roles:
        role, local = rs.role, rs.local
        for leaf, plug in role_redexes(rs.proc):
            if isinstance(leaf, LAssign):
                v, l2 = evaluate(leaf.expr, local, ctx.host, role)
                nn = net.update(role, plug(ONE), l2.set(leaf.var, v))
                out.append((TAU, replace(sys, network=nn), [(role, leaf)]))
            elif isinstance(leaf, LIf):
                v, l2 = evaluate(leaf.guard, local, ctx.host, role)
                branch = leaf.then if truth(v, "of if %s " % leaf.index) else leaf.else_
                out.append((TAU, replace(sys, network=net.update(role, plug(branch), l2)), [(role, leaf)]))
            elif isinstance(leaf, LWhile):
                v, l2 = evaluate(leaf.guard, local, ctx.host, role)
                if truth(v, "of while %s " % leaf.index):
                    key = (role, leaf.index.base if leaf.index else None)
                    count = loops.get(key, 0)
                    if ctx.loop_bound is not None and count >= ctx.loop_bound:
                        blocked = True
                        continue
                    nl = dict(loops)
                    nl[key] = count + 1
                    nn = net.update(role, plug(Seq(leaf.body, leaf)), l2)
                    out.append((TAU, replace(sys, network=nn, loops=freeze_loops(nl)), [(role, leaf)]))
                else:
                    out.append((TAU, replace(sys, network=net.update(role, plug(ONE), l2)), [(role, leaf)]))
            elif isinstance(leaf, ScopeLead):
                out.extend(_lead(sys, role, leaf, plug))
    sends, recvs = offers(sys, ctx)
    for s in sends:
        for r in recvs:
            if not matches(s, r):
                continue
            if isinstance(s.leaf, Send):
                rl = r.leaf
                cont = ONE if rl.var == ACK_VAR else LAssign(rl.var, Lit(s.value), rl.index)
                label = Comm(s.leaf.op, s.role, s.value, r.role, rl.var)
            else:
                plain = r.leaf
                body = plain.body if isinstance(s.value, NoToken) else s.value.proc
                cont = Seq(body, Send(s.leaf.op, OK, s.role, s.leaf.ack))
                label = Comm(s.leaf.op, s.role, s.value, r.role, ACK_VAR)
            nn = net.update(s.role, s.plug(ONE), s.local).update(r.role, r.plug(cont))
            out.append((label, replace(sys, network=nn), [(s.role, s.leaf), (r.role, r.leaf)]))
    if all(can_tick(rs.proc) for rs in net.roles):
        nn = net.map_procs(lambda r, p: ZERO)
        out.append((TICK, replace(sys, network=nn, ended=True), []))
    return out, blocked


def _lead(sys, role, leaf, plug):
    """Rules Lead-NoUp and Lead-Up (lifted, with the connectedness premise)."""
    n = leaf.index
    net = sys.network
    cont, alloc = projection.lead_noup_continuation(n, role, leaf.roles, leaf.body, sys.alloc)
    yield NOUP, replace(sys, network=net.update(role, plug(cont)), alloc=alloc), [(role, leaf)]
    for name, body in sys.updates:
        if not roles_of(body) <= leaf.roles or not is_connected(body):
            continue
        _, procs, alloc, _ = projection.project_update(body, n, sys.alloc, leaf.roles | {role})
        cont, alloc = projection.lead_up_continuation(n, role, leaf.roles, procs, alloc)
        yield Applied(name), replace(sys, network=net.update(role, plug(cont)), alloc=alloc), [(role, leaf)]


def system_successors(sys: DpocSystem, host=None):
    ctx = host if isinstance(host, Ctx) else Ctx(host or HostEnv())
    moves, blocked = _moves(sys, ctx)
    return [(label, s2) for label, s2, _ in moves], blocked


def system_enabled(sys: DpocSystem, host=None):
    return system_successors(sys, host)[0]


def role_enabled(proc, local, role: str, sys: DpocSystem | None = None, host=None):
    """Role-level view: ``[(kind, leaf, continuation-or-plug)]`` for one process.

    Communication offers are reported with their plug, to be closed by a partner.
    """
    ctx = host if isinstance(host, Ctx) else Ctx(host or HostEnv())
    probe = DpocSystem((sys.updates if sys else ()), Network([RoleState(role, proc, Store(local))]),
                       sys.alloc if sys else max_index(proc) + 1)
    out = []
    moves, _ = _moves(probe, ctx)
    for label, s2, fired in moves:
        rs = s2.network[role]
        out.append((label, rs.proc, rs.local))
    sends, recvs = offers(probe, ctx)
    for o in sends:
        out.append(("send", o.leaf, o.value))
    for o in recvs:
        out.append(("recv", o.leaf, None))
    return out


def dpoc_trace(sys, host=None, policy=None, max_steps=64, schedule=None):
    ctx = host if isinstance(host, Ctx) else Ctx(host or HostEnv())
    return run(sys, lambda s: system_successors(s, ctx)[0], policy or FirstEnabled(), max_steps, schedule)
