"""Declarative language templates.

All language-specific knowledge lives in these templates: file extensions,
test-file patterns, the queries that find entities and complexity signals,
and the injection rules that drive each modifier. Adding a language means
authoring one more config file, not touching the engine.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import yaml

from .cst import Query, compile_query, get_grammar
from .errors import (
    AmbiguousExtension,
    ConfigError,
    DuplicateModifierRule,
    QueryError,
)
from .errors import MissingKey
from .taxonomy import KNOWN_PRECONDITIONS, ModifierId

DEFAULT_INDENT_UNIT = "    "
DEFAULT_COMMENT_PREFIX = "# "
DEFAULT_STUB_BODY = "{indent}pass"


@dataclass
class InjectionRule:
    query: str
    preconditions: tuple[str, ...] = ()


@dataclass
class ValidationIssue:
    kind: str       # malformed_query | unknown_precondition
    subject: str    # which query or rule
    detail: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __iter__(self):
        return iter(self.issues)


@dataclass
class LanguageTemplate:
    """Per-ecosystem rules driving analysis and mutation.

    Optional keys default to: four-space indent, empty test patterns,
    ``"# "`` comment prefix, empty query/rule maps, and a bare ``pass``
    stub body.
    """

    language_id: str
    grammar_ref: str
    file_extensions: tuple[str, ...]
    entity_queries: dict[str, str]
    indent_unit: str = DEFAULT_INDENT_UNIT
    test_file_patterns: tuple[str, ...] = ()
    comment_prefix: str = DEFAULT_COMMENT_PREFIX
    complexity_queries: dict[str, str] = field(default_factory=dict)
    injection_rules: dict[ModifierId, InjectionRule] = field(default_factory=dict)
    operator_groups: dict[str, tuple[str, ...]] = field(default_factory=dict)
    operator_flips: dict[str, str] = field(default_factory=dict)
    stub_body_template: str = DEFAULT_STUB_BODY

    def __post_init__(self):
        self._query_cache: dict[str, Query] = {}

    # -- query access ----------------------------------------------------

    def query(self, text: str) -> Query:
        """Compile (and cache) a query against this template's grammar."""
        cached = self._query_cache.get(text)
        if cached is None:
            grammar = get_grammar(self.grammar_ref)
            cached = compile_query(text, grammar.node_kinds)
            self._query_cache[text] = cached
        return cached

    def entity_query(self, name: str) -> Optional[Query]:
        text = self.entity_queries.get(name)
        return self.query(text) if text else None

    def injection_query(self, modifier: ModifierId) -> Optional[Query]:
        rule = self.injection_rules.get(modifier)
        return self.query(rule.query) if rule else None

    def is_test_path(self, rel_path: str) -> bool:
        """Match a repo-relative posix path against the test patterns.

        Patterns without a slash also match the basename alone.
        """
        basename = rel_path.rsplit("/", 1)[-1]
        for pattern in self.test_file_patterns:
            if fnmatch.fnmatch(rel_path, pattern):
                return True
            if "/" not in pattern and fnmatch.fnmatch(basename, pattern):
                return True
        return False

    def operator_group_of(self, op_text: str) -> Optional[tuple[str, ...]]:
        for group in self.operator_groups.values():
            if op_text in group:
                return tuple(group)
        return None


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys."""


def _strict_map(loader, node):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node)
        if key in mapping:
            if key in {m.value for m in ModifierId}:
                raise DuplicateModifierRule(f"duplicate injection rule {key!r}")
            raise ConfigError(f"duplicate template key {key!r}")
        mapping[key] = loader.construct_object(value_node, deep=True)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _strict_map)


def load_template(doc: dict) -> LanguageTemplate:
    """Build a LanguageTemplate from a parsed config document.

    Query compilation is deferred to validate_template; this only checks
    structure and fills defaults.
    """
    if not isinstance(doc, dict):
        raise ConfigError("template document must be a mapping")
    for key in ("language_id", "grammar_ref", "file_extensions", "entity_queries"):
        if key not in doc or doc[key] in (None, "", []):
            raise MissingKey(key)
    entity_queries = dict(doc["entity_queries"])
    if "function" not in entity_queries:
        raise MissingKey("entity_queries.function")

    rules: dict[ModifierId, InjectionRule] = {}
    for raw_key, raw_rule in (doc.get("injection_rules") or {}).items():
        try:
            modifier = ModifierId(raw_key)
        except ValueError:
            raise ConfigError(f"injection rule for unknown modifier {raw_key!r}") from None
        if modifier in rules:
            raise DuplicateModifierRule(raw_key)
        if isinstance(raw_rule, str):
            rules[modifier] = InjectionRule(query=raw_rule)
        else:
            rules[modifier] = InjectionRule(
                query=raw_rule.get("query", ""),
                preconditions=tuple(raw_rule.get("preconditions") or ()),
            )

    groups = {name: tuple(ops) for name, ops in (doc.get("operator_groups") or {}).items()}
    return LanguageTemplate(
        language_id=str(doc["language_id"]),
        grammar_ref=str(doc["grammar_ref"]),
        file_extensions=tuple(doc["file_extensions"]),
        entity_queries=entity_queries,
        indent_unit=doc.get("indent_unit", DEFAULT_INDENT_UNIT),
        test_file_patterns=tuple(doc.get("test_file_patterns") or ()),
        comment_prefix=doc.get("comment_prefix", DEFAULT_COMMENT_PREFIX),
        complexity_queries=dict(doc.get("complexity_queries") or {}),
        injection_rules=rules,
        operator_groups=groups,
        operator_flips=dict(doc.get("operator_flips") or {}),
        stub_body_template=doc.get("stub_body_template", DEFAULT_STUB_BODY),
    )


def load_template_file(path: Path) -> LanguageTemplate:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.load(fh, Loader=_StrictLoader)
    return load_template(doc)


def validate_template(tpl: LanguageTemplate) -> ValidationReport:
    """Compile every query and check precondition names.

    An empty report means the template is usable. Raises GrammarUnavailable
    when the pinned grammar is not registered at all.
    """
    grammar = get_grammar(tpl.grammar_ref)  # raises GrammarUnavailable
    report = ValidationReport()

    def check_query(subject: str, text: str):
        try:
            compile_query(text, grammar.node_kinds)
        except QueryError as exc:
            report.issues.append(ValidationIssue("malformed_query", subject, str(exc)))

    for name, text in tpl.entity_queries.items():
        check_query(f"entity_queries.{name}", text)
    for name, text in tpl.complexity_queries.items():
        check_query(f"complexity_queries.{name}", text)
    for modifier, rule in tpl.injection_rules.items():
        check_query(f"injection_rules.{modifier.value}", rule.query)
        for pre in rule.preconditions:
            if pre not in KNOWN_PRECONDITIONS:
                report.issues.append(ValidationIssue(
                    "unknown_precondition", f"injection_rules.{modifier.value}", pre))
    return report


def resolve_language(path, registry: Iterable[LanguageTemplate]) -> Optional[str]:
    """Language of a file path by extension, or None when unclaimed.

    Two templates claiming the same extension is a hard error: silent
    first-wins resolution would misanalyze files.
    """
    name = str(path)
    claims = [tpl.language_id for tpl in registry
              if any(name.endswith(ext) for ext in tpl.file_extensions)]
    if len(claims) > 1:
        raise AmbiguousExtension(f"{path}: claimed by {sorted(claims)}")
    return claims[0] if claims else None


class TemplateRegistry:
    """Validated, immutable set of language templates."""

    def __init__(self, templates: Iterable[LanguageTemplate]):
        self._by_language: dict[str, LanguageTemplate] = {}
        for tpl in templates:
            if tpl.language_id in self._by_language:
                raise ConfigError(f"duplicate language_id {tpl.language_id!r}")
            report = validate_template(tpl)
            if not report.ok:
                issues = "; ".join(f"{i.subject}: {i.detail}" for i in report)
                raise ConfigError(f"template {tpl.language_id!r} invalid: {issues}")
            self._by_language[tpl.language_id] = tpl

    @classmethod
    def load_dir(cls, directory: Path) -> "TemplateRegistry":
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"template directory not found: {directory}")
        files = sorted(directory.glob("*.yaml")) + sorted(directory.glob("*.yml"))
        if not files:
            raise ConfigError(f"no template files under {directory}")
        return cls(load_template_file(f) for f in files)

    @classmethod
    def builtin(cls) -> "TemplateRegistry":
        return cls.load_dir(default_templates_dir())

    def get(self, language_id: str) -> LanguageTemplate:
        try:
            return self._by_language[language_id]
        except KeyError:
            raise ConfigError(f"no template for language {language_id!r}") from None

    def resolve(self, path) -> Optional[LanguageTemplate]:
        language = resolve_language(path, self)
        return self._by_language[language] if language else None

    def __iter__(self):
        return iter(self._by_language.values())

    def __len__(self):
        return len(self._by_language)


def default_templates_dir() -> Path:
    """The template directory bundled with the package."""
    return Path(__file__).parent / "templates"
