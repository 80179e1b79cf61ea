"""Discrete-event simulation of E911 infrastructure under mobile-botnet TDoS."""
from .engine import RunResult, Scenario, TrafficConfig, run
from .topology import Topology, synthesize_country, synthesize_nc_like, validate

__version__ = "0.1.0"
