"""optaudit: structural hallucination auditing for optimization-modeling
artifacts — detector, error injector, and metric evaluator."""

__version__ = "0.1.0"

from .taxonomy import Family, LabelPath, hit_level, load_registry  # noqa: E402,F401
from .artifact import AuditTuple, parse_case, serialize_case  # noqa: E402,F401
