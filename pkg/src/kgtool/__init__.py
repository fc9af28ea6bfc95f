"""Four-verb knowledge-graph tool environment, reward ladder and evaluation harness."""

from .classify import Category, classify, entity_in_answer
from .grammar import ToolCall, Trajectory, Turn, normalize_answer, parse_call, parse_transcript, render_transcript
from .graph import KnowledgeGraph, Triple, load_graph, load_graph_files, two_hop_solvable
from .metrics import RunReport, format_table, run_report
from .records import GoldRecord, load_golds, load_trajectories
from .rewards import RUNGS, RewardBreakdown, score

__all__ = [
    "Category",
    "GoldRecord",
    "KnowledgeGraph",
    "RUNGS",
    "RewardBreakdown",
    "RunReport",
    "ToolCall",
    "Trajectory",
    "Triple",
    "Turn",
    "classify",
    "entity_in_answer",
    "format_table",
    "load_golds",
    "load_graph",
    "load_graph_files",
    "load_trajectories",
    "normalize_answer",
    "parse_call",
    "parse_transcript",
    "render_transcript",
    "run_report",
    "score",
    "two_hop_solvable",
]

__version__ = "0.1.0"
