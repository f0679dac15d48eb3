"""fmtglean: parse described byte formats to XML and glean RDF from it.

A format description is an XML Schema carrying representation
annotations (delimiters, numeric bases, binary widths, occurrence
expressions).  The parser streams input bytes into element events under
a bounded backtrack window, the emitter writes them as XML, and declared
transforms extract RDF triples from the result.
"""

from .bench import (BenchReport, ShapeReport, fit_linear, generate_csv,
                    run_bench, schema_shape_experiment, table_schema_text)
from .errors import (EmitError, EvalError, ExprError, FmtGleanError,
                     GleanError, ParseError, PatternError, RegistryError,
                     SchemaError, UnsupportedXsltError, WindowOverrunError)
from .events import END, START, VALUE, WARNING, ParseEvent
from .exprs import format_expression, parse_expression
from .glean import glean
from .model import FormatSchema, ResolvedModel, load_schema, resolve, schema_to_xml
from .parser import (choose_branch, eval_expr, external_transform_hook,
                     parse_stream, read_binary_value, read_text_value)
from .pipeline import PipelineResult, build_provenance, load_model, run_pipeline
from .rdf import (IRI, BlankNode, Literal, Triple, TripleSet, isomorphic,
                  parse_rdfxml, serialize_ntriples, serialize_rdfxml)
from .registry import Registry, RegistryRule, detect_format, load_registry
from .report import write_report
from .xmlout import EmitOptions, emit_xml, inject_grddl
from .xslt import Stylesheet, apply_transform, load_transform

__version__ = "0.1.0"

__all__ = [
    "BenchReport", "ShapeReport", "fit_linear", "generate_csv", "run_bench",
    "schema_shape_experiment", "table_schema_text",
    "EmitError", "EvalError", "ExprError", "FmtGleanError", "GleanError",
    "ParseError", "PatternError", "RegistryError", "SchemaError",
    "UnsupportedXsltError", "WindowOverrunError",
    "END", "START", "VALUE", "WARNING", "ParseEvent",
    "format_expression", "parse_expression",
    "glean",
    "FormatSchema", "ResolvedModel", "load_schema", "resolve", "schema_to_xml",
    "choose_branch", "eval_expr", "external_transform_hook", "parse_stream",
    "read_binary_value", "read_text_value",
    "PipelineResult", "build_provenance", "load_model", "run_pipeline",
    "IRI", "BlankNode", "Literal", "Triple", "TripleSet", "isomorphic",
    "parse_rdfxml", "serialize_ntriples", "serialize_rdfxml",
    "Registry", "RegistryRule", "detect_format", "load_registry",
    "write_report",
    "EmitOptions", "emit_xml", "inject_grddl",
    "Stylesheet", "apply_transform", "load_transform",
    "__version__",
]
