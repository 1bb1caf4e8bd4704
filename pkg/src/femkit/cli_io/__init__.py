"""Config parsing, field serialization, the CLI, and the convergence harness."""

from .config import BcSpec, ConfigError, ProblemConfig, parse_config, parse_domain_spec, serialize_config
from .convergence import RateTable, convergence_study
from .expressions import ExpressionError, compile_expression
from .writers import write_field_csv, write_vtk

__all__ = [
    "BcSpec",
    "ConfigError",
    "ProblemConfig",
    "parse_config",
    "parse_domain_spec",
    "serialize_config",
    "RateTable",
    "convergence_study",
    "ExpressionError",
    "compile_expression",
    "write_field_csv",
    "write_vtk",
]
