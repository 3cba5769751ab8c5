"""Connected programs used by the equivalence, freedom and event suites."""
from dataclasses import dataclass, field
from pathlib import Path

from dioc.ast import annotate
from dioc.cli import host_function
from dioc.dioc_sem import DiocSystem, HostEnv
from dioc.dpoc_sem import DpocSystem
from dioc.parser import SourceFile, parse_dioc, parse_update
from dioc.projection import proj

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"

BUYING_HOST = {
    "getPrice": {"kind": "const", "value": 20},
    "payDesc": {"kind": "identity"},
    "payAuth": {"kind": "identity"},
    "isValid": {"kind": "const", "value": True},
}
BUYING_INPUTS = {"buyer": ["book", False, True, "pen", True, 42]}


@dataclass
class Case:
    name: str
    file: str
    updates: list = field(default_factory=list)  # .upd paths
    host: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)  # weak count -> update names

    def program(self):
        return annotate(parse_dioc(SourceFile.read(self.file)))

    def update_set(self):
        return [parse_update(SourceFile.read(u)) for u in self.updates]

    def host_env(self):
        return HostEnv({k: host_function(v) for k, v in self.host.items()},
                       {r: list(v) for r, v in self.inputs.items()})

    def schedule_map(self):
        byname = dict(self.update_set())
        return {k: tuple((n, byname[n]) for n in names) for k, names in self.schedule.items()}

    def dioc(self):
        return DiocSystem.initial(self.program(), updates=self.update_set())

    def dpoc(self):
        return DpocSystem.initial(proj(self.program()), self.update_set())


FIDELITY = str(FIXTURES / "updates" / "fidelity_card.upd")


def _c(name, **kw):
    return Case(name, str(CORPUS / (kw.pop("file", name) + ".dioc")), **kw)


CASES = [
    _c("buying", host=BUYING_HOST, inputs=BUYING_INPUTS),
    _c("buying_fidelity", file="buying", updates=[FIDELITY], host=BUYING_HOST, inputs=BUYING_INPUTS),
    _c("buying_scheduled", file="buying", updates=[FIDELITY], host=BUYING_HOST, inputs=BUYING_INPUTS,
       schedule={0: [], 2: ["fidelity_card"]}),
    _c("single"),
    _c("one"),
    _c("if_broadcast"),
    _c("while_two"),
    _c("scope_update", updates=[str(CORPUS / "updates" / "double.upd"), str(CORPUS / "updates" / "swap.upd")]),
    _c("par_branches"),
    _c("nested_while"),
    _c("scope_in_par", updates=[str(CORPUS / "updates" / "swap.upd")]),
    _c("expressions"),
    _c("if_scope_par"),
]

BY_NAME = {c.name: c for c in CASES}
