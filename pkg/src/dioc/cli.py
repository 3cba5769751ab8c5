"""Command line front end: check, project, run, equiv, props."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ast import annotate, simplify
from .connectedness import check_connected
from .dioc_sem import (
    Ctx, DiocSystem, FirstEnabled, HostEnv, ScheduleError, Scripted, Seeded, dioc_trace, is_weak,
    label_json,
)
from .dpoc_sem import DpocSystem, dpoc_trace
from .parser import ParseError, SourceFile, parse_dioc, parse_network, parse_update, pretty
from .projection import Network, proj
from .verify import BudgetExceeded, NotApplicable, check_equiv, check_freedom

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_IO, EXIT_ROLE, EXIT_SCHEDULE, EXIT_BUDGET = 0, 1, 2, 3, 4, 5, 6


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# configuration files

def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def host_function(spec):
    kind = spec.get("kind")
    if kind == "const":
        value = spec.get("value")
        return lambda *args: value
    if kind == "identity":
        return lambda *args: args[0] if args else None
    if kind == "mult":
        factor = spec.get("factor", 1)

        def mult(*args):
            out = factor
            for a in args:
                if not _num(a):
                    raise TypeError("mult needs numbers")
                out = out * a
            return out
        return mult
    if kind == "concat":
        sep = spec.get("sep", "")
        return lambda *args: sep.join(str(a) for a in args) + spec.get("suffix", "")
    raise ValueError("unknown host function kind %r" % kind)


def load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise CliError(EXIT_IO, "cannot read %s: %s" % (path, e.strerror or e))
    except json.JSONDecodeError as e:
        raise CliError(EXIT_IO, "%s is not valid JSON: %s" % (path, e))


def load_host(args) -> HostEnv:
    funcs = {}
    if args.host:
        for name, spec in load_json(args.host).items():
            try:
                funcs[name] = host_function(spec)
            except ValueError as e:
                raise CliError(EXIT_IO, "%s: %s" % (args.host, e))
    inputs = load_json(args.inputs) if args.inputs else {}
    return HostEnv(funcs, {r: list(v) for r, v in inputs.items()})


def load_updates(directory):
    """Snapshot of every ``.upd`` file, sorted by name."""
    if not directory:
        return []
    d = Path(directory)
    if not d.is_dir():
        raise CliError(EXIT_IO, "updates directory %s not found" % directory)
    out = []
    for f in sorted(d.glob("*.upd")):
        out.append(parse_update(read_source(f)))
    return out


def load_schedule(path, repo):
    """Returns ``(changes by weak-label count, scripted choices)``."""
    if not path:
        return {}, {}
    data = load_json(path)
    byname = dict(repo)
    changes, last = {}, -1
    for entry in data.get("changes", []):
        k = entry.get("afterWeakLabel")
        if not isinstance(k, int) or k <= last:
            raise CliError(EXIT_SCHEDULE, "invalid schedule: afterWeakLabel must be strictly increasing")
        last = k
        names = entry.get("setUpdates", [])
        missing = [n for n in names if n not in byname]
        if missing:
            raise CliError(EXIT_SCHEDULE, "invalid schedule: unknown updates %s" % ", ".join(missing))
        changes[k] = tuple((n, byname[n]) for n in names)
    choices = {c["step"]: c["choiceIndex"] for c in data.get("choices", [])}
    return changes, choices


def read_source(path) -> SourceFile:
    try:
        return SourceFile.read(path)
    except OSError as e:
        raise CliError(EXIT_IO, "cannot read %s: %s" % (path, e.strerror or e))


def load_program(path):
    return annotate(parse_dioc(read_source(path)))


def _diag_line(path, d):
    line, col, _ = d.span
    return "%s:%d:%d: %s %s: %s" % (path, line, col, d.severity.lower(), d.code, d.message)


def _violation_diag(v):
    return {"severity": "Error", "code": v.kind, "span": list(v.span or (0, 0, 0)), "message": v.message()}


# commands

def cmd_check(args, out):
    prog = load_program(args.file)
    rep = check_connected(prog)
    if args.json:
        print(json.dumps({"connected": rep.connected,
                          "violations": [_violation_diag(v) for v in rep.violations]}), file=out)
    else:
        for v in rep.violations:
            line, col = (v.span or (0, 0, 0))[:2]
            print("%s:%d:%d: error %s: %s" % (args.file, line, col, v.kind, v.message()), file=out)
        if rep.connected:
            print("%s: connected" % args.file, file=out)
    return EXIT_OK if rep.connected else EXIT_FAIL


def cmd_project(args, out):
    prog = load_program(args.file)
    rep = check_connected(prog)
    if not rep.connected and not args.force:
        for v in rep.violations:
            print("error %s: %s" % (v.kind, v.message()), file=sys.stderr)
        print("refusing to project a program that is not connected (use --force)", file=sys.stderr)
        return EXIT_FAIL
    net = proj(prog)
    roles = net.names()
    if args.role:
        if args.role not in roles:
            print("unknown role %r (roles: %s)" % (args.role, ", ".join(roles)), file=sys.stderr)
            return EXIT_ROLE
        roles = [args.role]
    texts = {r: pretty(simplify(net[r].proc)) + "\n" for r in roles}
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        stem = Path(args.file).stem
        for r, text in texts.items():
            (d / ("%s.%s.dpoc" % (stem, r))).write_text(text, encoding="utf-8")
    elif args.json:
        print(json.dumps(texts), file=out)
    else:
        for r, text in texts.items():
            if len(texts) > 1:
                print("// role %s" % r, file=out)
            out.write(text)
    return EXIT_OK


def _policy(args, choices):
    if args.seed is not None:
        return Seeded(args.seed)
    script = dict(choices)
    if args.script:
        data = load_json(args.script)
        if isinstance(data, dict):
            data = data.get("choices", [])
        for k, c in enumerate(data):
            if isinstance(c, dict):
                script[c["step"]] = c["choiceIndex"]
            else:
                script[k] = c
    return Scripted(script) if script else FirstEnabled()


def _initial(args, prog, updates):
    if args.level == "dioc":
        return DiocSystem.initial(prog, updates=updates)
    return DpocSystem.initial(proj(prog), updates)


def cmd_run(args, out):
    if args.explore:
        print("--explore is only valid for equiv and props", file=sys.stderr)
        return EXIT_SCHEDULE
    if args.seed is not None and args.script:
        print("--seed and --script are exclusive", file=sys.stderr)
        return EXIT_SCHEDULE
    prog = load_program(args.file)
    repo = load_updates(args.updates)
    schedule, choices = load_schedule(args.schedule, repo)
    ctx = Ctx(load_host(args), args.loop_bound if args.bounded else None)
    sys0 = _initial(args, prog, repo)
    run = dioc_trace if args.level == "dioc" else dpoc_trace
    try:
        trace = run(sys0, ctx, _policy(args, choices), args.max_steps, schedule)
    except ScheduleError as e:
        print(str(e), file=sys.stderr)
        return EXIT_SCHEDULE
    for label in trace:
        if args.weak and not is_weak(label):
            continue
        d = label_json(label)
        if args.weak and d["kind"] == "interaction":
            d["op"] = str(label.op.stripped())
        print(json.dumps(d), file=out)
    return EXIT_OK


def cmd_equiv(args, out):
    prog = load_program(args.file)
    repo = load_updates(args.updates)
    schedule, _ = load_schedule(args.schedule, repo)
    try:
        res = check_equiv(DiocSystem.initial(prog, updates=repo), load_host(args), args.max_steps,
                          args.loop_bound, schedule, args.budget)
    except NotApplicable as e:
        print(json.dumps({"verdict": "refused", "reason": str(e)}), file=out)
        return EXIT_FAIL
    except BudgetExceeded as e:
        print(json.dumps({"verdict": "budget-exceeded", "states": e.states}), file=out)
        return EXIT_BUDGET
    print(json.dumps(res.to_json()), file=out)
    return EXIT_OK if res.equivalent else EXIT_FAIL


def _network_system(path, updates):
    procs = parse_network(read_source(path))
    return DpocSystem.initial(Network.of({r: (p, {}) for r, p in procs.items()}), updates)


def cmd_props(args, out):
    repo = load_updates(args.updates)
    schedule, _ = load_schedule(args.schedule, repo)
    if args.file.endswith(".dpoc") or args.file.endswith(".net"):
        dpoc = _network_system(args.file, repo)
        prog = None
    else:
        prog = load_program(args.file)
        dpoc = DpocSystem.initial(proj(prog), repo)
    rep = check_freedom(dpoc, load_host(args), args.max_steps, args.loop_bound, schedule, args.budget)
    report = rep.to_json()
    ok = rep.ok
    if args.events and prog is not None:
        from .events import check_well_annotated_dpoc, inclusion_violations, order_embedding_violations
        wa = check_well_annotated_dpoc(dpoc.network)
        missing = inclusion_violations(prog, dpoc.network)
        emb = order_embedding_violations(prog, dpoc.network)
        report["events"] = {
            "diagnostics": [{"severity": "Error", "code": c, "message": m} for c, m in wa.violations]
            + [{"severity": "Error", "code": "EVENTS", "message": "missing event %s" % e} for e in missing]
            + [{"severity": "Error", "code": "ORDER", "message": "%s <= %s not preserved" % ab} for ab in emb],
        }
        ok = ok and wa.ok and not missing and not emb
    print(json.dumps(report), file=out)
    if rep.partial:
        return EXIT_BUDGET
    return EXIT_OK if ok else EXIT_FAIL


# argument parsing

def build_parser():
    ap = argparse.ArgumentParser(prog="dioc", description="Choreographies with runtime updates.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("file")
        p.add_argument("--updates", metavar="DIR")
        p.add_argument("--schedule", metavar="FILE")
        p.add_argument("--host", metavar="FILE")
        p.add_argument("--inputs", metavar="FILE")
        p.add_argument("--seed", type=int)
        p.add_argument("--script", metavar="FILE")
        p.add_argument("--explore", action="store_true")
        p.add_argument("--max-steps", type=_positive, default=64)
        p.add_argument("--loop-bound", type=_positive, default=2)
        p.add_argument("--budget", type=_positive, default=200_000)
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("check", help="check connectedness")
    common(p)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("project", help="print per-role endpoint code")
    common(p)
    p.add_argument("--role")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_project)
    p = sub.add_parser("run", help="execute and print a JSON-lines trace")
    common(p)
    p.add_argument("--level", choices=["dioc", "dpoc"], default="dioc")
    p.add_argument("--weak", action="store_true")
    p.add_argument("--bounded", action="store_true", help="apply --loop-bound while running")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("equiv", help="bounded weak trace equivalence")
    common(p)
    p.set_defaults(func=cmd_equiv)
    p = sub.add_parser("props", help="deadlock, race and orphan freedom")
    common(p)
    p.add_argument("--events", action="store_true")
    p.set_defaults(func=cmd_props)
    return ap


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return e.code
    except ParseError as e:
        for d in e.diagnostics:
            print(_diag_line(args.file, d), file=sys.stderr)
        return EXIT_PARSE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
