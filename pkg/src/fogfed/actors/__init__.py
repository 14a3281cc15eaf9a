from .cmi import Admission, Cmi, JoinRefused
from .csp import Csp, Refused
from .fognode import FogNode, Retrieval, Timeouts, select_majority_ledger
from .world import Declined, PublishRejected, World

__all__ = [
    "Admission",
    "Cmi",
    "Csp",
    "Declined",
    "FogNode",
    "JoinRefused",
    "PublishRejected",
    "Refused",
    "Retrieval",
    "Timeouts",
    "World",
    "select_majority_ledger",
]
