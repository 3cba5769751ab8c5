"""Random choreographies and the definitional connectedness oracle."""

from dioc.ast import (
    Assign, Binary, Call, If, Interaction, Lit, ONE, Operation, Par, Scope, Seq, Var, While, walk,
)


def random_expr(rng, depth=0):
    k = rng.randrange(5 if depth < 2 else 2)
    if k == 0:
        return Lit(rng.choice([0, 1, 2, True, False, "s"]))
    if k == 1:
        return Var(rng.choice("xyz"))
    if k == 2:
        return Binary(rng.choice(["+", "*", "<", "==", "and"]), random_expr(rng, depth + 1), random_expr(rng, depth + 1))
    if k == 3:
        return Call("getInput", ())
    return Call("f", (random_expr(rng, depth + 1),))


def random_dioc(rng, size, roles="abcd", ops="pqrs"):
    """A random unannotated DIOC with roughly ``size`` AST nodes."""
    role = lambda: rng.choice(roles)
    if size <= 1:
        k = rng.randrange(5)
        if k == 0:
            return ONE
        if k == 1:
            return Assign(rng.choice("xyz"), role(), random_expr(rng))
        a = role()
        b = rng.choice([r for r in roles if r != a])
        return Interaction(Operation(rng.choice(ops)), a, random_expr(rng), b, rng.choice("xyz"))
    k = rng.randrange(10)
    rest = size - 1
    if k < 4:
        left = rng.randint(1, rest - 1) if rest > 1 else 1
        cls = Seq if k < 3 else Par
        return cls(random_dioc(rng, left, roles, ops), random_dioc(rng, max(1, rest - left), roles, ops))
    if k < 6 and rest >= 2:
        left = rng.randint(1, rest - 1)
        return If(random_expr(rng), role(), random_dioc(rng, left, roles, ops), random_dioc(rng, rest - left, roles, ops))
    if k < 8:
        return While(random_expr(rng), role(), random_dioc(rng, rest, roles, ops))
    if k < 9:
        return Scope(role(), random_dioc(rng, rest, roles, ops))
    return random_dioc(rng, 1, roles, ops)


def size_of(p):
    return sum(1 for _ in walk(p))


# definitional oracle: straight recursion over the tables


def _p(a, b):
    return tuple(sorted((a, b)))


def naive_roles(p):
    if isinstance(p, Interaction):
        return {p.sender, p.receiver}
    if isinstance(p, Assign):
        return {p.role}
    if isinstance(p, (Seq, Par)):
        return naive_roles(p.left) | naive_roles(p.right)
    if isinstance(p, If):
        return {p.role} | naive_roles(p.then) | naive_roles(p.else_)
    if isinstance(p, While):
        return {p.role} | naive_roles(p.body)
    if isinstance(p, Scope):
        return {p.coordinator} | naive_roles(p.body)
    return set()


def naive_ops(p):
    if isinstance(p, Interaction):
        return {(p.op, p.sender, p.receiver)}
    if isinstance(p, (Seq, Par)):
        return naive_ops(p.left) | naive_ops(p.right)
    if isinstance(p, If):
        return naive_ops(p.then) | naive_ops(p.else_)
    if isinstance(p, (While, Scope)):
        return naive_ops(p.body)
    return set()


def naive_ti(p):
    if isinstance(p, Interaction):
        return {_p(p.sender, p.receiver)}
    if isinstance(p, Assign):
        return {(p.role, p.role)}
    if isinstance(p, Par):
        return naive_ti(p.left) | naive_ti(p.right)
    if isinstance(p, Seq):
        return naive_ti(p.left) or naive_ti(p.right)
    if isinstance(p, (If, While)):
        return {(p.role, p.role)}
    if isinstance(p, Scope):
        return {(p.coordinator, p.coordinator)}
    return set()


def naive_tf(p):
    if isinstance(p, Interaction):
        return {_p(p.sender, p.receiver)}
    if isinstance(p, Assign):
        return {(p.role, p.role)}
    if isinstance(p, Par):
        return naive_tf(p.left) | naive_tf(p.right)
    if isinstance(p, Seq):
        return naive_tf(p.right) or naive_tf(p.left)
    if isinstance(p, If):
        return (naive_tf(p.then) | naive_tf(p.else_)) or {(p.role, p.role)}
    if isinstance(p, While):
        return naive_tf(p.body) or {(p.role, p.role)}
    if isinstance(p, Scope):
        r = p.coordinator
        others = naive_roles(p.body) - {r}
        return {_p(o, r) for o in others} if others else {(r, r)}
    return set()


def naive_connected(p):
    for n in walk(p):
        if isinstance(n, Seq):
            for a in naive_tf(n.left):
                for b in naive_ti(n.right):
                    if not set(a) & set(b):
                        return False
        elif isinstance(n, Par):
            if naive_ops(n.left) & naive_ops(n.right):
                return False
    return True


def random_pairs(rng, universe, center=None):
    """A random set of role pairs; a star around ``center`` when one is given."""
    n = rng.randrange(0, 16)
    if center is not None:
        c = center
        return frozenset(_p(c, rng.choice(universe)) for _ in range(n))
    return frozenset(_p(rng.choice(universe), rng.choice(universe)) for _ in range(n))


def scaling_program(n):
    """Connected program with about ``n`` nodes mixing every construct."""
    parts = []
    i = 0
    while sum(map(size_of, parts)) + len(parts) < n:
        a, b, c = "r%d" % (i % 7), "r%d" % ((i + 1) % 7), "r%d" % ((i + 2) % 7)
        body = Seq(Interaction(Operation("p%d" % i), a, Var("x"), b, "y"),
                   Interaction(Operation("q%d" % i), b, Var("y"), c, "z"))
        block = [body,
                 If(Var("z"), c, Interaction(Operation("s%d" % i), c, Lit(1), a, "x"), ONE),
                 Par(Interaction(Operation("u%d" % i), a, Lit(1), c, "w"),
                     Interaction(Operation("v%d" % i), a, Lit(2), c, "w")),
                 While(Var("w"), c, Interaction(Operation("t%d" % i), c, Lit(0), a, "x"))]
        parts.extend(block)
        i += 1
    out = parts[-1]
    for q in reversed(parts[:-1]):
        out = Seq(q, out)
    return out
