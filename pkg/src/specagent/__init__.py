"""Training-free multi-agent tool-calling runtime driven by spec documents."""

from .model import (
    ContextRule,
    DefaultBehavior,
    Diagnostic,
    OutputFieldSpec,
    ParamSpec,
    PostProcessRule,
    RelatedToolLink,
    SlotPattern,
    SpecBundle,
    ToolSpec,
)
from .parser import load_bundle, parse_tool_spec, validate_bundle
from .serializer import serialize_bundle, serialize_tool_spec

__version__ = "0.1.0"

__all__ = [
    "ContextRule",
    "DefaultBehavior",
    "Diagnostic",
    "OutputFieldSpec",
    "ParamSpec",
    "PostProcessRule",
    "RelatedToolLink",
    "SlotPattern",
    "SpecBundle",
    "ToolSpec",
    "load_bundle",
    "parse_tool_spec",
    "validate_bundle",
    "serialize_bundle",
    "serialize_tool_spec",
    "__version__",
]
