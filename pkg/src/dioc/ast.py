"""Abstract syntax for choreographies (DIOC) and endpoint processes (DPOC).

Nodes are frozen dataclasses with a cached hash, so terms are plain values
that can be shared and used directly as keys during state-space exploration.
Source spans ride along for diagnostics but never take part in equality.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Optional


class ErrorValue:
    """The distinguished result of any failed evaluation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "error"

    def __reduce__(self):
        return (ErrorValue, ())


ERROR = ErrorValue()


def value_key(v):
    # bool is an int subclass and 1 == 1.0, keep them apart
    return (type(v).__name__, v)


def values_equal(a, b) -> bool:
    return value_key(a) == value_key(b)


def format_value(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(v)


class Store(Mapping):
    """Immutable, hashable variable map used for local and global states."""

    __slots__ = ("_d", "_h")

    def __init__(self, data=None, **kw):
        d = dict(data or {})
        d.update(kw)
        self._d = d
        self._h = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def _key(self):
        return frozenset((k, value_key(v)) for k, v in self._d.items())

    def __hash__(self):
        if self._h is None:
            self._h = hash(self._key())
        return self._h

    def __eq__(self, other):
        if not isinstance(other, Store):
            return NotImplemented
        return self is other or (hash(self) == hash(other) and self._key() == other._key())

    def set(self, key, value) -> "Store":
        d = dict(self._d)
        d[key] = value
        return Store(d)

    def __repr__(self):
        return "Store(%r)" % (self._d,)


EMPTY = Store()


def node(cls):
    """Frozen dataclass whose hash is computed once per instance."""
    cls = dataclass(frozen=True)(cls)
    raw = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = raw(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


def _span():
    return field(default=None, compare=False, hash=False, repr=False)


# expressions


class Expr:
    pass


@node
class Lit(Expr):
    value: Any

    def __eq__(self, other):
        return isinstance(other, Lit) and value_key(self.value) == value_key(other.value)

    def __hash__(self):
        return hash(value_key(self.value))


@node
class Var(Expr):
    name: str


@node
class Unary(Expr):
    op: str  # "not" or "neg"
    arg: Expr


@node
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@node
class Call(Expr):
    name: str
    args: tuple = ()


# operations and indexes


@dataclass(frozen=True, order=True)
class Operation:
    """A channel name; ``prefix`` holds extended-operation indexes, outermost first."""

    name: str
    private: bool = False
    prefix: tuple = ()

    def __str__(self):
        return "".join("%d." % n for n in self.prefix) + self.name

    def stripped(self) -> "Operation":
        return replace(self, prefix=()) if self.prefix else self

    def extended(self, n: int) -> "Operation":
        return replace(self, prefix=(n,) + self.prefix)


def aux_op(n: int) -> Operation:
    return Operation("o*_%d" % n, private=True)


def aux_var(n: int) -> str:
    return "x_%d" % n


@dataclass(frozen=True, order=True)
class IndexTag:
    base: int
    branch: Optional[bool] = None

    def __str__(self):
        if self.branch is None:
            return str(self.base)
        return "(%d,%s)" % (self.base, "true" if self.branch else "false")

    def stripped(self) -> "IndexTag":
        return IndexTag(self.base) if self.branch is not None else self


def tag(n) -> Optional[IndexTag]:
    if n is None or isinstance(n, IndexTag):
        return n
    return IndexTag(n)


# shared process structure


class Process:
    pass


@node
class One(Process):
    pass


@node
class Zero(Process):
    pass


ONE = One()
ZERO = Zero()


@node
class Seq(Process):
    left: Process
    right: Process


@node
class Par(Process):
    left: Process
    right: Process


# DIOC


@node
class Interaction(Process):
    op: Operation
    sender: str
    expr: Expr
    receiver: str
    var: str
    index: Optional[int] = None
    span: Any = _span()


@node
class Assign(Process):
    var: str
    role: str
    expr: Expr
    index: Optional[int] = None
    span: Any = _span()


@node
class If(Process):
    guard: Expr
    role: str
    then: Process
    else_: Process = ONE
    index: Optional[int] = None
    span: Any = _span()


@node
class While(Process):
    guard: Expr
    role: str
    body: Process
    index: Optional[int] = None
    span: Any = _span()


@node
class Scope(Process):
    coordinator: str
    body: Process
    name: Optional[str] = None
    index: Optional[int] = None
    span: Any = _span()


INDEXED_DIOC = (Interaction, Assign, If, While, Scope)


# DPOC


@node
class Recv(Process):
    op: Operation
    var: str
    frm: str
    index: Optional[IndexTag] = None


@node
class Send(Process):
    op: Operation
    expr: Expr
    to: str
    index: Optional[IndexTag] = None


@node
class NoToken:
    """The ``no`` payload of a higher-order send."""

    def __repr__(self):
        return "no"


NO = NoToken()


@node
class Code:
    proc: Process


@node
class SendHO(Process):
    op: Operation
    payload: Any  # NoToken or Code
    to: str
    index: Optional[IndexTag] = None
    ack: Optional[IndexTag] = None  # index the receiver uses for its ok reply


@node
class LAssign(Process):
    var: str
    expr: Expr
    index: Optional[IndexTag] = None


@node
class LIf(Process):
    guard: Expr
    then: Process
    else_: Process = ONE
    index: Optional[IndexTag] = None


@node
class LWhile(Process):
    guard: Expr
    body: Process
    index: Optional[IndexTag] = None


@node
class ScopeLead(Process):
    index: IndexTag
    coordinator: str
    body: Process
    roles: frozenset
    name: Optional[str] = None


@node
class ScopePlain(Process):
    index: IndexTag
    coordinator: str
    body: Process
    name: Optional[str] = None


COMM_DPOC = (Send, Recv, SendHO)


def seq(*parts: Process) -> Process:
    """Right-nested sequence; the empty sequence is One."""
    if not parts:
        return ONE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def par(*parts: Process) -> Process:
    if not parts:
        return ONE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Par(p, out)
    return out


def children(p: Process) -> tuple:
    if isinstance(p, (Seq, Par)):
        return (p.left, p.right)
    if isinstance(p, (If, LIf)):
        return (p.then, p.else_)
    if isinstance(p, (While, LWhile, Scope, ScopeLead, ScopePlain)):
        return (p.body,)
    return ()


def walk(p: Process) -> Iterator[Process]:
    """Preorder traversal, iterative so very deep sequences are fine."""
    stack = [p]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def map_chain(p: Process, fn) -> Process:
    # rebuild a right-nested Seq/Par chain without recursing down its spine
    kind = type(p)
    spine = []
    while type(p) is kind:
        spine.append(p)
        p = p.right
    lefts = [fn(s.left) for s in spine]
    out = fn(p)
    for left in reversed(lefts):
        out = kind(left, out)
    return out


def roles_of(p: Process) -> frozenset:
    out = set()
    for n in walk(p):
        if isinstance(n, Interaction):
            out.add(n.sender)
            out.add(n.receiver)
        elif isinstance(n, (Assign, If, While)):
            out.add(n.role)
        elif isinstance(n, Scope):
            out.add(n.coordinator)
    return frozenset(out)


def operations_of(p: Process) -> frozenset:
    return frozenset((n.op, n.sender, n.receiver) for n in walk(p) if isinstance(n, Interaction))


def is_initial(p: Process) -> bool:
    return not any(isinstance(n, Zero) for n in walk(p))


def annotate(p: Process, start: int = 1) -> Process:
    """Reindex every indexed construct in preorder, counting from ``start``."""
    counter = [start]

    def go(n):
        if isinstance(n, INDEXED_DIOC):
            i = counter[0]
            counter[0] += 1
            if isinstance(n, If):
                then = go(n.then)
                return replace(n, then=then, else_=go(n.else_), index=i)
            if isinstance(n, (While, Scope)):
                return replace(n, body=go(n.body), index=i)
            return replace(n, index=i)
        if isinstance(n, (Seq, Par)):
            return map_chain(n, go)
        return n

    return go(p)


def count_indexed(p: Process) -> int:
    return sum(1 for n in walk(p) if isinstance(n, INDEXED_DIOC))


def strip_indexes(p: Process) -> Process:
    """Copy of a DIOC term with every index dropped."""
    if isinstance(p, INDEXED_DIOC):
        kw = {"index": None}
        if isinstance(p, If):
            kw.update(then=strip_indexes(p.then), else_=strip_indexes(p.else_))
        elif isinstance(p, (While, Scope)):
            kw["body"] = strip_indexes(p.body)
        return replace(p, **kw)
    if isinstance(p, (Seq, Par)):
        return map_chain(p, strip_indexes)
    return p


def max_index(p: Process) -> int:
    best = 0
    for n in walk(p):
        idx = getattr(n, "index", None)
        if isinstance(idx, int):
            best = max(best, idx)
        elif isinstance(idx, IndexTag):
            best = max(best, idx.base)
        if isinstance(n, SendHO):
            if n.ack is not None:
                best = max(best, n.ack.base)
            if isinstance(n.payload, Code):
                best = max(best, max_index(n.payload.proc))
    return best


def is_well_annotated(p: Process) -> bool:
    idx = [n.index for n in walk(p) if isinstance(n, INDEXED_DIOC)]
    return all(i is not None for i in idx) and len(set(idx)) == len(idx)


def global_indexes(p) -> list:
    """``(global_index, node)`` pairs for every indexed construct, in preorder.

    Accepts an annotated DIOC process, a single DPOC process, or a network
    (anything with ``.roles``), in which case nodes are paired with role names.
    """
    if hasattr(p, "roles") and not isinstance(p, Process):
        out = []
        for rs in p.roles:
            out.extend((g, n, rs.role) for g, n in global_indexes(rs.proc))
        return out
    if isinstance(p, Process) and any(isinstance(n, INDEXED_DIOC) for n in walk(p)):
        if not is_well_annotated(p):
            raise ValueError("process is not well-annotated")
    out = []
    stack = [(p, ())]
    while stack:
        n, prefix = stack.pop()
        idx = tag(getattr(n, "index", None))
        inner = prefix
        if idx is not None:
            gidx = prefix + (idx,)
            out.append((gidx, n))
            if isinstance(n, (While, LWhile)):
                inner = gidx
        stack.extend((c, inner) for c in reversed(children(n)))
    return out


def simplify(p: Process) -> Process:
    """Drop inert ``1`` operands and flatten Seq/Par chains to right-nested form.

    Only used for display and comparison; semantics are unaffected.
    """
    if isinstance(p, (Seq, Par)):
        kind = type(p)
        items = []
        stack = [p]
        while stack:
            n = stack.pop()
            if type(n) is kind:
                stack.append(n.right)
                stack.append(n.left)
            else:
                n = simplify(n)
                if type(n) is kind:
                    stack.append(n)
                elif not isinstance(n, One):
                    items.append(n)
        return seq(*items) if kind is Seq else par(*items)
    if isinstance(p, (If, LIf)):
        return replace(p, then=simplify(p.then), else_=simplify(p.else_))
    if isinstance(p, (While, LWhile, Scope, ScopeLead, ScopePlain)):
        return replace(p, body=simplify(p.body))
    if isinstance(p, SendHO) and isinstance(p.payload, Code):
        return replace(p, payload=Code(simplify(p.payload.proc)))
    return p
