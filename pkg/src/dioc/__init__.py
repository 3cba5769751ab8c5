"""Choreographies with runtime updates: parsing, connectedness, projection,
both operational semantics and bounded verification."""
from .ast import annotate, roles_of, operations_of, global_indexes
from .parser import parse_dioc, parse_update, parse_network, pretty, ParseError
from .connectedness import check_connected, is_connected, trans_i, trans_f, pair_cover_check
from .dioc_sem import DiocSystem, HostEnv, dioc_enabled, dioc_trace, eval_expr
from .projection import Network, pi, proj, fresh_indexes
from .dpoc_sem import DpocSystem, system_enabled, role_enabled, dpoc_trace
from .verify import weaken, upd_normalize, trace_set, check_equiv, check_freedom

__version__ = "0.1.0"

__all__ = [
    "annotate", "roles_of", "operations_of", "global_indexes",
    "parse_dioc", "parse_update", "parse_network", "pretty", "ParseError",
    "check_connected", "is_connected", "trans_i", "trans_f", "pair_cover_check",
    "DiocSystem", "HostEnv", "dioc_enabled", "dioc_trace", "eval_expr",
    "Network", "pi", "proj", "fresh_indexes",
    "DpocSystem", "system_enabled", "role_enabled", "dpoc_trace",
    "weaken", "upd_normalize", "trace_set", "check_equiv", "check_freedom",
]
