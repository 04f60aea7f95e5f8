"""
LangGraph State Schema for a lab run
"""

from typing import Any, Dict, List, Optional, TypedDict

from .storage.config_loader import RunConfig


class RunState(TypedDict, total=False):
    """LangGraph state for one CLI command"""

    # Resolved configuration
    config: RunConfig
    out_dir: str

    # Header echoed into every artifact
    header: Dict[str, Any]

    # Raw command output (rows, trajectories, summaries)
    results: Dict[str, Any]

    # Pass/fail per check
    checks: List[Dict[str, Any]]
    all_passed: Optional[bool]
    first_failure: Optional[str]

    # Files written, in order
    artifacts: List[str]

    # Phase tracking: "prepared", "executed", "evaluated", "reported"
    phase: str

    # Error handling
    error: Optional[str]
    error_kind: Optional[str]  # "config", "numeric", "internal"
