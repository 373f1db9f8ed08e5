from typegnn.frontend.ir import IrModule, count_occurrences, dump_ir, ir_to_source, lower_to_ir
from typegnn.frontend.syntax import (
    FrontendError,
    SourceProject,
    SubsetAst,
    SyntaxError,
    UnsupportedConstruct,
    parse_project,
)
from typegnn.frontend.loader import load_project

__all__ = [
    "FrontendError", "IrModule", "SourceProject", "SubsetAst", "SyntaxError",
    "UnsupportedConstruct", "count_occurrences", "dump_ir", "ir_to_source",
    "load_project", "lower_to_ir", "parse_project",
]
