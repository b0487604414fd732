"""Replicated XML document with global selective undo."""

from .engine import Add, Del, Redo, ReplicaClock, SetAttr, Undo, deliver
from .gc import GcState, purge
from .model import (
    ROOT_ID,
    AttrValue,
    Document,
    Edge,
    Position,
    Timestamp,
    ValueHistory,
    generate_position,
)
from .render import render, serialize, to_xml
from .simulator import FuzzConfig, Simulation, run_figure1, run_fuzz, run_gc_scenario

__all__ = [
    "Add", "Del", "Redo", "ReplicaClock", "SetAttr", "Undo", "deliver",
    "GcState", "purge",
    "ROOT_ID", "AttrValue", "Document", "Edge", "Position", "Timestamp", "ValueHistory",
    "generate_position",
    "render", "serialize", "to_xml",
    "FuzzConfig", "Simulation", "run_figure1", "run_fuzz", "run_gc_scenario",
]
