"""Lossy (modified) DC active power flow: solvers and radial certificates."""

from ._core import (
    Branch,
    Bus,
    Certificate,
    LossyDcError,
    Network,
    System,
    load_network,
    no_solution_band,
    parse_case_json,
    table_csv,
    two_bus_closed_form,
)

__all__ = [
    "Branch",
    "Bus",
    "Certificate",
    "LossyDcError",
    "Network",
    "System",
    "load_network",
    "no_solution_band",
    "parse_case_json",
    "table_csv",
    "two_bus_closed_form",
]
