"""Weak traces, network normalization and bounded checks over both LTSs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .ast import (
    Code, ErrorValue, LAssign, LIf, Lit, LWhile, NoToken, ONE, Par, Recv, ScopePlain, Send, SendHO, Seq,
    Var, aux_op, is_initial, map_chain, simplify, value_key,
)
from .connectedness import check_connected
from .dioc_sem import (
    Applied, Comm, Ctx, DiocSystem, HostEnv, NoUp, Tick, UpdatesChanged, dioc_successors, is_weak,
    label_json,
)
from .dpoc_sem import DpocSystem, _moves, offers, matches, role_redexes
from .projection import ACK_VAR, Network, proj

DEFAULT_BUDGET = 200_000


# weak traces

def weak_key(label):
    """Hashable form of a weak label with extended operations stripped."""
    if isinstance(label, Comm):
        return ("comm", label.op.stripped(), label.sender, value_key(label.value), label.receiver, label.var)
    if isinstance(label, Tick):
        return ("tick",)
    if isinstance(label, Applied):
        return ("update", label.name)
    if isinstance(label, NoUp):
        return ("noup",)
    if isinstance(label, UpdatesChanged):
        return ("updates", tuple(label.names))
    raise TypeError("not a weak label: %r" % (label,))


def weaken(trace):
    out = []
    for label in trace:
        if not is_weak(label):
            continue
        if isinstance(label, Comm) and label.op.prefix:
            label = replace(label, op=label.op.stripped())
        out.append(label)
    return out


def key_json(k):
    kind = k[0]
    if kind == "comm":
        _, op, s, (_, v), r, x = k
        if isinstance(v, ErrorValue):
            v = "error"
        return {"kind": "interaction", "op": str(op), "from": s, "to": r, "value": v, "var": x}
    if kind in ("tick", "noup"):
        return {"kind": kind}
    if kind == "update":
        return {"kind": "update", "name": k[1]}
    if kind == "updates":
        return {"kind": "updates-changed", "updates": list(k[1])}
    raise ValueError("unknown weak key %r" % (k,))


# upd = ssim . prop

def _is_aux_var(name):
    return isinstance(name, str) and name.startswith("x_")


def _rewrite(p, fn):
    """Top-down rewrite that never enters a while body; ``fn`` returns a
    replacement or None. Returns ``(process, changed)``."""
    r = fn(p)
    if r is not None:
        return r, True
    if isinstance(p, Seq):
        # patterns are Seq-shaped, so every suffix of the spine is a candidate
        lefts, q = [], p
        while isinstance(q, Seq):
            lefts.append(_rewrite(q.left, fn))
            q = q.right
            r = fn(q)
            if r is not None:
                tail = (r, True)
                break
        else:
            tail = _rewrite(q, fn)
        if not tail[1] and not any(ch for _, ch in lefts):
            return p, False
        out = tail[0]
        for left, _ in reversed(lefts):
            out = Seq(left, out)
        return out, True
    if isinstance(p, Par):
        changed = [False]

        def go(c):
            c2, ch = _rewrite(c, fn)
            changed[0] |= ch
            return c2
        out = map_chain(p, go)
        return (out, True) if changed[0] else (p, False)
    if isinstance(p, LIf):
        t, a = _rewrite(p.then, fn)
        e, b = _rewrite(p.else_, fn)
        return (replace(p, then=t, else_=e), True) if a or b else (p, False)
    if isinstance(p, ScopePlain) or type(p).__name__ == "ScopeLead":
        b, ch = _rewrite(p.body, fn)
        return (replace(p, body=b), True) if ch else (p, False)
    return p, False


def _rewrite_all(p, fn):
    """Like ``_rewrite`` but also enters while bodies and code payloads."""
    r = fn(p)
    if r is not None:
        return r
    if isinstance(p, (Seq, Par)):
        return map_chain(p, lambda c: _rewrite_all(c, fn))
    if isinstance(p, LIf):
        return replace(p, then=_rewrite_all(p.then, fn), else_=_rewrite_all(p.else_, fn))
    if hasattr(p, "body"):
        return replace(p, body=_rewrite_all(p.body, fn))
    if isinstance(p, SendHO) and isinstance(p.payload, Code):
        return replace(p, payload=Code(_rewrite_all(p.payload.proc, fn)))
    return p


def _split_head(p):
    # (head, rest) for a sequence; rest may be None
    if isinstance(p, Seq):
        return p.left, p.right
    return p, None


def _aux_pattern(p, op, frm):
    """Match ``o*_n?(x_n) from frm ; (while|if) x_n ...`` as a Seq node.

    Returns ``(construct, rest)`` or None.
    """
    if not isinstance(p, Seq) or not isinstance(p.left, Recv):
        return None
    rv = p.left
    if rv.op != op or rv.frm != frm or not _is_aux_var(rv.var):
        return None
    head, rest = _split_head(p.right)
    if isinstance(head, (LWhile, LIf)) and head.guard == Var(rv.var):
        return head, rest
    return None


def _with_rest(p, rest):
    return p if rest is None else Seq(p, rest)


def _prop_step(net: Network):
    """Apply one prop item; returns the new network or None at the fixpoint."""
    for rs in net.roles:
        for leaf, plug in role_redexes(rs.proc):
            # items 1, 2, 5, 6: pending broadcast of a guard value
            if isinstance(leaf, Send) and leaf.op.private and isinstance(leaf.expr, Lit) \
                    and isinstance(leaf.expr.value, bool) and leaf.to in net:
                value = leaf.expr.value

                def fire(p, op=leaf.op, frm=rs.role, value=value):
                    m = _aux_pattern(p, op, frm)
                    if m is None:
                        return None
                    head, rest = m
                    if isinstance(head, LWhile):
                        return _with_rest(Seq(head.body, head) if value else ONE, rest)
                    return _with_rest(head.then if value else head.else_, rest)
                target = net[leaf.to]
                new, changed = _rewrite(target.proc, fire)
                if changed:
                    net = net.update(rs.role, plug(ONE)).update(leaf.to, new)
                    return net
            # items 9, 10: pending code or token delivery
            if isinstance(leaf, SendHO) and leaf.to in net:
                def deliver(p, op=leaf.op, frm=rs.role, payload=leaf.payload):
                    if isinstance(p, ScopePlain) and p.coordinator == frm and aux_op(p.index.base) == op:
                        return p.body if isinstance(payload, NoToken) else payload.proc
                    return None
                new, changed = _rewrite(net[leaf.to].proc, deliver)
                if changed:
                    return net.update(rs.role, plug(ONE)).update(leaf.to, new)
            # items 3, 4, 7, 8: guard variable already received
            if isinstance(leaf, (LWhile, LIf)) and isinstance(leaf.guard, Var) and _is_aux_var(leaf.guard.name):
                v = rs.local.get(leaf.guard.name)
                if isinstance(v, bool):
                    if isinstance(leaf, LWhile):
                        return net.update(rs.role, plug(Seq(leaf.body, leaf) if v else ONE))
                    return net.update(rs.role, plug(leaf.then if v else leaf.else_))
            # received but not yet stored guard value
            if isinstance(leaf, LAssign) and _is_aux_var(leaf.var) and isinstance(leaf.expr, Lit):
                return net.update(rs.role, plug(ONE), rs.local.set(leaf.var, leaf.expr.value))
    return None


def prop(net: Network) -> Network:
    seen = 0
    while True:
        nxt = _prop_step(net)
        if nxt is None:
            return net
        net = nxt
        seen += 1
        if seen > 100_000:
            raise RuntimeError("prop did not reach a fixpoint")


def _erase_closing(p):
    if isinstance(p, Send) and p.op.private and p.expr == Lit("ok"):
        return ONE
    if isinstance(p, Recv) and p.op.private and p.var == ACK_VAR:
        return ONE
    return None


def _strip_prefix(p):
    if isinstance(p, (Send, Recv, SendHO)) and p.op.prefix:
        return _rewrite_all(replace(p, op=p.op.stripped()), _strip_prefix) if isinstance(p, SendHO) \
            else replace(p, op=p.op.stripped())
    return None


def strip_prefixes(p):
    """Drop scope prefixes from every operation, code payloads included."""
    return simplify(_rewrite_all(p, _strip_prefix))


def ssim_proc(p):
    p, _ = _rewrite(p, _erase_closing)
    p = _rewrite_all(p, _strip_prefix)
    return simplify(p)


def ssim(net: Network) -> Network:
    return net.map_procs(lambda r, p: ssim_proc(p))


def upd_normalize(net: Network) -> Network:
    """``ssim . prop`` iterated until stable: erasing a closing ack can expose
    another pending broadcast."""
    while True:
        nxt = ssim(prop(net))
        if nxt == net:
            return nxt
        net = nxt


# bounded exploration

class BudgetExceeded(Exception):
    def __init__(self, message, states=0, partial=None):
        super().__init__(message)
        self.states = states
        self.partial = partial


@dataclass
class NodeInfo:
    edges: list
    blocked: bool = False
    truncated: bool = False
    ended: bool = False


def dioc_step_fn(ctx):
    def step(sys):
        out, blocked = dioc_successors(sys, ctx)
        return [(lab, s2, None) for lab, s2 in out], blocked
    return step


def dpoc_step_fn(ctx):
    def step(sys):
        return _moves(sys, ctx)
    return step


def _ended(sys):
    if isinstance(sys, DpocSystem):
        return sys.ended
    return type(sys.proc).__name__ == "Zero"


class Explorer:
    """Lazily built state graph. Nodes are ``(system, weak count, schedule position)``.

    A scheduled update-set change fires as a forced step once the weak count
    reaches its key; paths stop growing at ``max_steps`` weak labels.
    """

    def __init__(self, step, schedule=None, max_steps=40, budget=DEFAULT_BUDGET):
        self.step = step
        self.schedule = dict(schedule or {})
        self.keys = sorted(self.schedule)
        self.max_steps = max_steps
        self.budget = budget
        self.info = {}

    def root(self, sys):
        return (sys, 0, 0)

    def expand(self, node) -> NodeInfo:
        got = self.info.get(node)
        if got is not None:
            return got
        if len(self.info) >= self.budget:
            raise BudgetExceeded("state budget of %d exceeded" % self.budget, len(self.info))
        sys, weak, pos = node
        if pos < len(self.keys) and weak >= self.keys[pos]:
            upd = self.schedule[self.keys[pos]]
            label = UpdatesChanged(tuple(n for n, _ in upd))
            info = NodeInfo([(label, (sys.with_updates(upd), weak, pos + 1), None)])
        elif _ended(sys):
            info = NodeInfo([], ended=True)
        elif weak >= self.max_steps:
            info = NodeInfo([], truncated=True)
        else:
            moves, blocked = self.step(sys)
            edges = [(lab, (s2, weak + (1 if is_weak(lab) else 0), pos), fired) for lab, s2, fired in moves]
            info = NodeInfo(edges, blocked=blocked)
        self.info[node] = info
        return info

    @property
    def states(self):
        return len(self.info)

    # subset construction over weak labels

    def closure(self, nodes):
        seen = set(nodes)
        todo = list(nodes)
        while todo:
            n = todo.pop()
            for lab, m, _ in self.expand(n).edges:
                if not is_weak(lab) and m not in seen:
                    seen.add(m)
                    todo.append(m)
        return frozenset(seen)

    def weak_moves(self, subset):
        out = {}
        for n in subset:
            for lab, m, _ in self.expand(n).edges:
                if is_weak(lab):
                    out.setdefault(weak_key(lab), set()).add(m)
        return {k: self.closure(v) for k, v in out.items()}

    def status(self, subset):
        """Flags of a subset: any terminal node, any loop-blocked node."""
        terminal = blocked = False
        for n in subset:
            info = self.expand(n)
            blocked |= info.blocked
            if not info.edges and not info.blocked:
                terminal = True
        return terminal, blocked


def make_ctx(host=None, loop_bound=2):
    if isinstance(host, Ctx):
        return host
    return Ctx(host or HostEnv(), loop_bound)


def dioc_explorer(host=None, max_steps=40, loop_bound=2, schedule=None, budget=DEFAULT_BUDGET):
    return Explorer(dioc_step_fn(make_ctx(host, loop_bound)), schedule, max_steps, budget)


def dpoc_explorer(host=None, max_steps=40, loop_bound=2, schedule=None, budget=DEFAULT_BUDGET):
    return Explorer(dpoc_step_fn(make_ctx(host, loop_bound)), schedule, max_steps, budget)


@dataclass
class TraceSet:
    prefixes: set = field(default_factory=set)  # every reachable weak trace
    maximal: set = field(default_factory=set)  # traces that can stop there
    truncated: set = field(default_factory=set)  # traces cut by the loop bound

    def __eq__(self, other):
        return (self.prefixes, self.maximal, self.truncated) == (other.prefixes, other.maximal, other.truncated)


def trace_set(sys, host=None, max_steps=40, loop_bound=2, schedule=None, budget=DEFAULT_BUDGET,
              explorer=None) -> TraceSet:
    """Exhaustive set of weak traces up to ``max_steps`` weak labels."""
    if explorer is None:
        make = dpoc_explorer if isinstance(sys, DpocSystem) else dioc_explorer
        explorer = make(host, max_steps, loop_bound, schedule, budget)
    out = TraceSet()
    start = explorer.closure([explorer.root(sys)])
    stack = [((), start)]
    while stack:
        trace, subset = stack.pop()
        out.prefixes.add(trace)
        terminal, blocked = explorer.status(subset)
        if terminal:
            out.maximal.add(trace)
        if blocked:
            out.truncated.add(trace)
        for k, nxt in explorer.weak_moves(subset).items():
            stack.append((trace + (k,), nxt))
    return out


@dataclass
class EquivResult:
    verdict: str  # "equivalent" | "counterexample"
    bound: int
    loop_bound: int
    states: int = 0
    truncated: int = 0
    counterexample: list | None = None
    side: str | None = None  # level where the extra behaviour was found

    @property
    def equivalent(self):
        return self.verdict == "equivalent"

    def to_json(self):
        d = {"verdict": self.verdict, "bound": self.bound, "loopBound": self.loop_bound,
             "states": self.states, "truncated": self.truncated}
        if self.counterexample is not None:
            d["counterexample"] = {"trace": [key_json(k) for k in self.counterexample], "side": self.side}
        return d


class NotApplicable(ValueError):
    pass


def equiv_precheck(proc):
    if not is_initial(proc):
        raise NotApplicable("program is not initial")
    rep = check_connected(proc)
    if not rep.connected:
        raise NotApplicable("program is not connected: " + rep.violations[0].message())


def check_equiv(dioc: DiocSystem, host=None, max_steps=40, loop_bound=2, schedule=None,
                budget=DEFAULT_BUDGET, project=None) -> EquivResult:
    """Compare the bounded weak trace sets of a DIOC system and its projection.

    Both sides are determinized lazily and walked in lockstep; the first weak
    label enabled on one side only is returned as a counterexample.
    """
    equiv_precheck(dioc.proc)
    for name, body in dioc.updates:
        if not check_connected(body).connected:
            raise NotApplicable("update %s is not connected" % name)
    network = (project or proj)(dioc.proc, {r: dict(l) for r, l in dioc.state.items()})
    dpoc = DpocSystem(dioc.updates, network, max(dioc.alloc, DpocSystem.initial(network).alloc))
    left = dioc_explorer(host, max_steps, loop_bound, schedule, budget)
    right = dpoc_explorer(host, max_steps, loop_bound, schedule, budget)
    res = EquivResult("equivalent", max_steps, loop_bound)
    a0 = left.closure([left.root(dioc)])
    b0 = right.closure([right.root(dpoc)])
    seen = {(a0, b0)}
    queue = deque([(a0, b0, ())])
    while queue:
        a, b, trace = queue.popleft()
        ta, ba = left.status(a)
        tb, bb = right.status(b)
        if ba or bb:
            res.truncated += 1
        if ta != tb:
            res.verdict, res.counterexample = "counterexample", list(trace)
            res.side = "dioc" if ta else "dpoc"
            break
        ma, mb = left.weak_moves(a), right.weak_moves(b)
        bad = next((k for k in ma if k not in mb), None)
        if bad is not None:
            res.verdict, res.counterexample, res.side = "counterexample", list(trace) + [bad], "dioc"
            break
        bad = next((k for k in mb if k not in ma), None)
        if bad is not None:
            res.verdict, res.counterexample, res.side = "counterexample", list(trace) + [bad], "dpoc"
            break
        for k in ma:
            pair = (ma[k], mb[k])
            if pair not in seen:
                seen.add(pair)
                queue.append((ma[k], mb[k], trace + (k,)))
    res.states = left.states + right.states
    return res


# freedom properties

@dataclass
class Verdict:
    ok: bool = True
    witness: list | None = None
    detail: str | None = None

    def to_json(self):
        d = {"verdict": "pass" if self.ok else "fail"}
        if self.witness is not None:
            d["witness"] = [label_json(x) for x in self.witness]
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class FreedomReport:
    deadlock: Verdict
    race: Verdict
    orphan: Verdict
    states: int = 0
    truncated: int = 0
    partial: bool = False

    @property
    def ok(self):
        return self.deadlock.ok and self.race.ok and self.orphan.ok

    def to_json(self):
        return {"deadlock": self.deadlock.to_json(), "race": self.race.to_json(),
                "orphan": self.orphan.to_json(), "states": self.states,
                "truncated": self.truncated, "partial": self.partial}


def _path(parents, node):
    out = []
    while parents.get(node) is not None:
        node, label = parents[node]
        out.append(label)
    out.reverse()
    return out


def _races(sys, ctx):
    sends, recvs = offers(sys, ctx)
    for r in recvs:
        m = [s for s in sends if matches(s, r)]
        if len(m) > 1:
            return "receive %s at %s matches %d sends" % (r.leaf.op if hasattr(r.leaf, "op") else "scope",
                                                          r.role, len(m))
    for s in sends:
        m = [r for r in recvs if matches(s, r)]
        if len(m) > 1:
            return "send %s at %s matches %d receives" % (s.leaf.op, s.role, len(m))
    return None


def explore_all(explorer, root, visit=None):
    """Breadth-first walk of every reachable node; ``visit(node, info, parents)``."""
    parents = {root: None}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        info = explorer.expand(node)
        if visit:
            visit(node, info, parents)
        for lab, m, _ in info.edges:
            if m not in parents:
                parents[m] = (node, lab)
                queue.append(m)
    return parents


def check_freedom(dpoc: DpocSystem, host=None, max_steps=40, loop_bound=2, schedule=None,
                  budget=DEFAULT_BUDGET) -> FreedomReport:
    ctx = make_ctx(host, loop_bound)
    ex = Explorer(dpoc_step_fn(ctx), schedule, max_steps, budget)
    rep = FreedomReport(Verdict(), Verdict(), Verdict())

    def visit(node, info, parents):
        sys = node[0]
        if info.blocked or info.truncated:
            rep.truncated += 1
        if not info.edges and not (info.blocked or info.truncated or info.ended) and rep.deadlock.ok:
            rep.deadlock = Verdict(False, _path(parents, node), "stuck before termination")
        if rep.race.ok:
            why = _races(sys, ctx)
            if why:
                rep.race = Verdict(False, _path(parents, node), why)
        for lab, m, _ in info.edges:
            if isinstance(lab, Tick) and rep.orphan.ok:
                sends, _ = offers(sys, ctx)
                if sends:
                    rep.orphan = Verdict(False, _path(parents, node) + [lab],
                                         "%d sends left at termination" % len(sends))

    try:
        explore_all(ex, ex.root(dpoc), visit)
    except BudgetExceeded:
        rep.partial = True
    rep.states = ex.states
    return rep


def check_fired_minimal(dpoc: DpocSystem, host=None, max_steps=40, loop_bound=2, schedule=None,
                        budget=DEFAULT_BUDGET):
    """Every transition taken during exploration must fire causally minimal events.

    Returns ``(violations, states)`` with violations as ``(witness, role, leaf)``.
    """
    from .events import fired_minimal, leq_dpoc

    ex = dpoc_explorer(host, max_steps, loop_bound, schedule, budget)
    bad = []

    def visit(node, info, parents):
        fired = [f for _, _, f in info.edges if f]
        if not fired:
            return
        order = leq_dpoc(node[0].network)
        for lab, _, f in info.edges:
            for role, leaf in fired_minimal(node[0].network, f or [], order):
                bad.append((_path(parents, node) + [lab], role, leaf))

    explore_all(ex, ex.root(dpoc), visit)
    return bad, ex.states
