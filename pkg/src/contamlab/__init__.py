"""contamlab: simulation laboratory for learning on self-contaminated data.

Subpackages cover exact variance factors for pooled mean estimators, Monte
Carlo simulators for the contaminated-mean process and a biased survival
walk, a recursive classification environment with pluggable learners, and
a CLI that writes schema-stable CSV results.
"""

__version__ = "0.1.0"

from .core import ConfigurationError, ProtocolError, SchemaError

__all__ = ["ConfigurationError", "ProtocolError", "SchemaError", "__version__"]
