"""Semantic data integration over perspective-scoped meanings."""

from . import errors
from .core import DEFAULT_SAFETY_CAP, SYSTEM_PROCESS_ID, SYSTEM_RULE_ID
from .records import HAS_A, IS_A, STRONG, UNMARKED, WEAK
from .shadow_store import ShadowRef
from .semantic import ident
from .store import Store

__all__ = ["Store", "ShadowRef", "errors", "ident", "IS_A", "HAS_A", "UNMARKED", "STRONG",
           "WEAK", "SYSTEM_PROCESS_ID", "SYSTEM_RULE_ID", "DEFAULT_SAFETY_CAP"]
__version__ = "0.1.0"
