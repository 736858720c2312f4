"""Delay of traffic through networks of Energy Efficient Ethernet interfaces."""
from .analytic import (
    ModelInput,
    TandemParams,
    delta_w_agg,
    delta_w_tandem,
    per_iface_added_delay_limit,
    tandem_bounds,
    w_eee,
    w_mg1,
    w_tandem_regular,
)
from .core import Engine, Event, EventKind, RngStream, RunReport
from .port import EeeConfig, EeePort, Mode, PortState, serve_fifo, transmission_time
from .scenario import Scenario, load_scenario, parse_scenario
from .topology import build_aggregation, build_tandem, simulate

__version__ = "0.1.0"
