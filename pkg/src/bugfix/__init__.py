"""Bugfix: bug patterns, fix templates, and recorded applications over
universal syntax trees."""

from .corpus import Hunk, after_fragment, apply_hunk, before_fragment, parse_unified_diff
from .errors import BugfixError, Diagnostic, SpecSyntaxError
from .mapper import LanguageDef, translate, validate_language
from .matcher import MatchResult, find_matches, match_at
from .model import Registry, Span, UNode, node_has_kind, structural_equals, validate_registry
from .rewriter import apply_fix, check_fix_captures, instantiate
from .specparse import parse_document, parse_pattern, parse_recorded_tree, parse_template, serialize
from .store import Database, emit_html, emit_json, load_repository
from .verify import Stage, Status, VerifyReport, verify_application

__version__ = "0.1.0"

__all__ = [
    "BugfixError", "Database", "Diagnostic", "Hunk", "LanguageDef", "MatchResult", "Registry",
    "Span", "SpecSyntaxError", "Stage", "Status", "UNode", "VerifyReport", "after_fragment",
    "apply_fix", "apply_hunk", "before_fragment", "check_fix_captures", "emit_html", "emit_json",
    "find_matches", "instantiate", "load_repository", "match_at", "node_has_kind",
    "parse_document", "parse_pattern", "parse_recorded_tree", "parse_template",
    "parse_unified_diff", "serialize", "structural_equals", "translate", "validate_language",
    "validate_registry", "verify_application",
]
