"""One-for-all gateway: route one query across many black-box agents."""

__version__ = "0.1.0"

from ofa.model import (
    AgentProfile,
    AgentResponse,
    Dataset,
    DatasetError,
    LabeledExample,
    Query,
    ResponseRecord,
    dataset_stats,
    derive_gold,
    load_agents,
    load_dataset,
    save_dataset,
)

__all__ = [
    "AgentProfile",
    "AgentResponse",
    "Dataset",
    "DatasetError",
    "LabeledExample",
    "Query",
    "ResponseRecord",
    "dataset_stats",
    "derive_gold",
    "load_agents",
    "load_dataset",
    "save_dataset",
]
