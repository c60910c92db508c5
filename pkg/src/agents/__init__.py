"""
Preference-conditioned tabular agent
"""

from src.agents.dwrl import QTable, greedy_rollout, oracle_match, snap_preference, train_agent
from src.agents.qlearning import TrainConfig, greedy_action, q_learning
from src.agents.storage import load_qtable, read_sidecar, save_qtable

__all__ = [
    "QTable",
    "TrainConfig",
    "greedy_action",
    "greedy_rollout",
    "load_qtable",
    "oracle_match",
    "q_learning",
    "read_sidecar",
    "save_qtable",
    "snap_preference",
    "train_agent",
]
