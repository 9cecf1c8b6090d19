"""Python grammar built on the standard library parser.

The stdlib ``ast`` module supplies exact byte-level positions (line starts
plus UTF-8 column offsets), which this module converts into the uniform
SyntaxNode shape. Operator tokens, which ``ast`` does not materialize, are
recovered by scanning the source gap between operand spans with comments
blanked out.
"""

from __future__ import annotations

import ast
import re

from .node import SyntaxNode, SyntaxTree, line_start_of, line_starts

_KIND_MAP = {
    "Module": "module",
    "FunctionDef": "function_definition",
    "AsyncFunctionDef": "function_definition",
    "ClassDef": "class_definition",
    "If": "if_statement",
    "For": "for_statement",
    "AsyncFor": "for_statement",
    "While": "while_statement",
    "Try": "try_statement",
    "TryStar": "try_statement",
    "With": "with_statement",
    "AsyncWith": "with_statement",
    "Assign": "assignment",
    "AugAssign": "assignment",
    "AnnAssign": "assignment",
    "Return": "return_statement",
    "Raise": "raise_statement",
    "Pass": "pass_statement",
    "Break": "break_statement",
    "Continue": "continue_statement",
    "Import": "import_statement",
    "ImportFrom": "import_from_statement",
    "Expr": "expression_statement",
    "Delete": "delete_statement",
    "Assert": "assert_statement",
    "Global": "global_statement",
    "Nonlocal": "nonlocal_statement",
    "Match": "match_statement",
    "ExceptHandler": "except_clause",
    "BinOp": "binary_operator",
    "BoolOp": "boolean_operator",
    "Compare": "comparison_operator",
    "Name": "identifier",
    "Attribute": "attribute",
    "Call": "call",
    "Subscript": "subscript",
    "List": "list",
    "Tuple": "tuple",
    "Set": "set",
    "Dict": "dictionary",
    "ListComp": "list_comprehension",
    "SetComp": "set_comprehension",
    "DictComp": "dictionary_comprehension",
    "GeneratorExp": "generator_expression",
    "Lambda": "lambda",
    "IfExp": "conditional_expression",
    "Await": "await_expression",
    "Yield": "yield_expression",
    "YieldFrom": "yield_expression",
    "Starred": "starred_expression",
    "JoinedStr": "fstring",
    "FormattedValue": "interpolation",
    "NamedExpr": "named_expression",
    "Slice": "slice",
}

_BINOP_TEXT = {
    ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/",
    ast.FloorDiv: "//", ast.Mod: "%", ast.Pow: "**", ast.MatMult: "@",
    ast.LShift: "<<", ast.RShift: ">>",
    ast.BitAnd: "&", ast.BitOr: "|", ast.BitXor: "^",
}

_CMP_PATTERN = {
    ast.Eq: r"==", ast.NotEq: r"!=",
    ast.LtE: r"<=", ast.GtE: r">=", ast.Lt: r"<", ast.Gt: r">",
    ast.IsNot: r"\bis\s+not\b", ast.Is: r"\bis\b",
    ast.NotIn: r"\bnot\s+in\b", ast.In: r"\bin\b",
}

_BOOL_PATTERN = {ast.And: r"\band\b", ast.Or: r"\bor\b"}

NODE_KINDS = frozenset(
    list(_KIND_MAP.values())
    + [
        "block", "operator", "not_operator", "unary_operator",
        "integer", "float", "complex", "string", "bytes",
        "true", "false", "none", "ellipsis",
        "argument_list",
    ]
)

_COMMENT_RE = re.compile(r"#[^\n]*")


def _blank_comments(text: str) -> str:
    """Replace comment bytes with spaces, preserving offsets."""
    return _COMMENT_RE.sub(lambda m: " " * len(m.group(0)), text)


class _Converter:
    def __init__(self, source: bytes):
        self.src = source
        self.lines = line_starts(source)

    def pos(self, a) -> int:
        return self.lines[a.lineno - 1] + a.col_offset

    def end(self, a) -> int:
        return self.lines[a.end_lineno - 1] + a.end_col_offset

    # -- helpers -------------------------------------------------------

    def _gap_text(self, lo: int, hi: int) -> str:
        return _blank_comments(self.src[lo:hi].decode("utf-8", errors="replace"))

    def _find_pattern(self, pattern: str, lo: int, hi: int) -> tuple[int, int] | None:
        gap = self._gap_text(lo, hi)
        m = re.search(pattern, gap)
        if m is None:
            return None
        # gap is pure ASCII around operators in practice; offsets map 1:1
        return (lo + m.start(), lo + m.end())

    def _operator_node(self, pattern: str, lo: int, hi: int) -> SyntaxNode | None:
        span = self._find_pattern(pattern, lo, hi)
        if span is None:
            return None
        return SyntaxNode("operator", span[0], span[1])

    def _name_node(self, name: str, lo: int, hi: int) -> SyntaxNode | None:
        span = self._find_pattern(r"\b" + re.escape(name) + r"\b", lo, hi)
        if span is None:
            return None
        return SyntaxNode("identifier", span[0], span[1])

    def _block(self, stmts: list, header_start: int) -> SyntaxNode:
        nodes = [self.one(s) for s in stmts]
        first, last = nodes[0], nodes[-1]
        ls = line_start_of(self.src, first.start)
        # inline body (`if x: f()`): the statement shares the header's line
        start = first.start if ls <= header_start else ls
        return SyntaxNode("block", start, last.end, children=nodes)

    def one(self, a) -> SyntaxNode:
        out = self.convert(a)
        if len(out) != 1:  # pragma: no cover - statements are always positioned
            raise AssertionError(f"expected single node for {type(a).__name__}")
        return out[0]

    def _flatten(self, a) -> list[SyntaxNode]:
        out: list[SyntaxNode] = []
        for child in ast.iter_child_nodes(a):
            out.extend(self.convert(child))
        out.sort(key=lambda n: (n.start, -(n.end - n.start)))
        return out

    def _flatten_except(self, a, skip: tuple[str, ...]) -> list[SyntaxNode]:
        """Convert all ast fields except the named ones (used so block
        statements are converted exactly once, under their block node)."""
        out: list[SyntaxNode] = []
        for field_name, value in ast.iter_fields(a):
            if field_name in skip:
                continue
            values = value if isinstance(value, list) else [value]
            for child in values:
                if isinstance(child, ast.AST):
                    out.extend(self.convert(child))
        return out

    @staticmethod
    def _ordered(nodes: list[SyntaxNode]) -> list[SyntaxNode]:
        return sorted(nodes, key=lambda n: (n.start, -(n.end - n.start)))

    # -- conversion ----------------------------------------------------

    def convert_module(self, mod: ast.Module) -> SyntaxNode:
        children = [self.one(s) for s in mod.body]
        return SyntaxNode("module", 0, len(self.src), children=children)

    def convert(self, a) -> list[SyntaxNode]:
        if not hasattr(a, "lineno"):
            return self._flatten(a)
        cls = type(a).__name__
        handler = getattr(self, f"_conv_{cls}", None)
        if handler is not None:
            return [handler(a)]
        kind = _KIND_MAP.get(cls)
        if kind is None:
            kind = re.sub(r"(?<!^)(?=[A-Z])", "_", cls).lower()
        return [SyntaxNode(kind, self.pos(a), self.end(a), children=self._flatten(a))]

    def _decorated_start(self, a) -> int:
        start = self.pos(a)
        if getattr(a, "decorator_list", None):
            dec = self.pos(a.decorator_list[0])
            at = self.src.rfind(b"@", 0, dec)
            if at != -1:
                start = min(start, at)
        return start

    def _conv_FunctionDef(self, a) -> SyntaxNode:
        start = self._decorated_start(a)
        end = self.end(a)
        body = self._block(a.body, self.pos(a))
        name = self._name_node(a.name, self.pos(a), body.start)
        children = self._flatten_except(a, ("body",)) + [body]
        fields = {"body": body, "header_start": self.pos(a),
                  "is_async": isinstance(a, ast.AsyncFunctionDef)}
        if name is not None:
            fields["name"] = name
            children.append(name)
        return SyntaxNode("function_definition", start, end,
                          children=self._ordered(children), fields=fields)

    _conv_AsyncFunctionDef = _conv_FunctionDef

    def _conv_ClassDef(self, a) -> SyntaxNode:
        start = self._decorated_start(a)
        end = self.end(a)
        body = self._block(a.body, self.pos(a))
        name = self._name_node(a.name, self.pos(a), body.start)
        children = self._flatten_except(a, ("body",)) + [body]
        fields: dict = {"body": body, "base_count": len(a.bases),
                        "header_start": self.pos(a)}
        if name is not None:
            fields["name"] = name
            children.append(name)
        elements = list(a.bases) + list(a.keywords)
        if elements and name is not None:
            lparen = self._find_pattern(r"\(", name.end, self.pos(elements[0]) + 1)
            last_end = max(self.end(e) for e in elements)
            rparen = self._find_pattern(r"\)", last_end, body.start)
            if lparen and rparen:
                fields["superclasses"] = SyntaxNode(
                    "argument_list", lparen[0], rparen[1])
        return SyntaxNode("class_definition", start, end,
                          children=self._ordered(children), fields=fields)

    def _conv_If(self, a) -> SyntaxNode:
        cond = self.one(a.test)
        body = self._block(a.body, self.pos(a))
        fields = {"condition": cond, "body": body}
        children = [cond, body]
        if a.orelse:
            alt = self._block(a.orelse, self.pos(a))
            fields["alternative"] = alt
            children.append(alt)
        return SyntaxNode("if_statement", self.pos(a), self.end(a),
                          children=children, fields=fields)

    def _loop(self, a, kind: str) -> SyntaxNode:
        body = self._block(a.body, self.pos(a))
        children = self._flatten_except(a, ("body", "orelse")) + [body]
        fields = {"body": body}
        if a.orelse:
            fields["else_body"] = self._block(a.orelse, self.pos(a))
            children.append(fields["else_body"])
        return SyntaxNode(kind, self.pos(a), self.end(a),
                          children=self._ordered(children), fields=fields)

    def _conv_For(self, a) -> SyntaxNode:
        return self._loop(a, "for_statement")

    _conv_AsyncFor = _conv_For

    def _conv_While(self, a) -> SyntaxNode:
        return self._loop(a, "while_statement")

    def _conv_Try(self, a) -> SyntaxNode:
        body = self._block(a.body, self.pos(a))
        handlers = [self.one(h) for h in a.handlers]
        fields: dict = {"body": body, "handlers": handlers}
        children = [body] + handlers
        if a.orelse:
            fields["else_body"] = self._block(a.orelse, self.pos(a))
            children.append(fields["else_body"])
        if a.finalbody:
            fields["finalizer"] = self._block(a.finalbody, self.pos(a))
            children.append(fields["finalizer"])
        return SyntaxNode("try_statement", self.pos(a), self.end(a),
                          children=children, fields=fields)

    _conv_TryStar = _conv_Try

    def _conv_ExceptHandler(self, a) -> SyntaxNode:
        body = self._block(a.body, self.pos(a))
        children = self._flatten_except(a, ("body",)) + [body]
        return SyntaxNode("except_clause", self.pos(a), self.end(a),
                          children=self._ordered(children), fields={"body": body})

    def _conv_With(self, a) -> SyntaxNode:
        body = self._block(a.body, self.pos(a))
        children = self._flatten_except(a, ("body",)) + [body]
        return SyntaxNode("with_statement", self.pos(a), self.end(a),
                          children=self._ordered(children), fields={"body": body})

    _conv_AsyncWith = _conv_With

    def _conv_BinOp(self, a) -> SyntaxNode:
        left = self.one(a.left)
        right = self.one(a.right)
        op_text = _BINOP_TEXT[type(a.op)]
        op = self._operator_node(re.escape(op_text), left.end, right.start)
        children = [left, right] if op is None else [left, op, right]
        fields = {"left": left, "right": right, "op_text": op_text}
        if op is not None:
            fields["operator"] = op
        return SyntaxNode("binary_operator", self.pos(a), self.end(a),
                          children=children, fields=fields)

    def _conv_BoolOp(self, a) -> SyntaxNode:
        values = [self.one(v) for v in a.values]
        pattern = _BOOL_PATTERN[type(a.op)]
        op = self._operator_node(pattern, values[0].end, values[1].start)
        children = list(values)
        fields = {"left": values[0], "right": values[1],
                  "op_text": "and" if isinstance(a.op, ast.And) else "or"}
        if op is not None:
            fields["operator"] = op
            children.insert(1, op)
        return SyntaxNode("boolean_operator", self.pos(a), self.end(a),
                          children=children, fields=fields)

    def _conv_Compare(self, a) -> SyntaxNode:
        left = self.one(a.left)
        comparators = [self.one(c) for c in a.comparators]
        fields: dict = {"ops_count": len(a.ops)}
        children = [left] + comparators
        if len(a.ops) == 1:
            pattern = _CMP_PATTERN[type(a.ops[0])]
            op = self._operator_node(pattern, left.end, comparators[0].start)
            fields.update(left=left, right=comparators[0],
                          op_text=_cmp_text(a.ops[0]))
            if op is not None:
                fields["operator"] = op
                children.insert(1, op)
        return SyntaxNode("comparison_operator", self.pos(a), self.end(a),
                          children=children, fields=fields)

    def _conv_UnaryOp(self, a) -> SyntaxNode:
        kind = "not_operator" if isinstance(a.op, ast.Not) else "unary_operator"
        return SyntaxNode(kind, self.pos(a), self.end(a), children=self._flatten(a))

    def _conv_Constant(self, a) -> SyntaxNode:
        v = a.value
        if v is True:
            kind = "true"
        elif v is False:
            kind = "false"
        elif v is None:
            kind = "none"
        elif v is Ellipsis:
            kind = "ellipsis"
        elif type(v) is int:
            kind = "integer"
        elif type(v) is float:
            kind = "float"
        elif type(v) is complex:
            kind = "complex"
        elif type(v) is bytes:
            kind = "bytes"
        else:
            kind = "string"
        fields = {"value": v} if kind == "integer" else {}
        return SyntaxNode(kind, self.pos(a), self.end(a), fields=fields)


def _cmp_text(op) -> str:
    return {
        ast.Eq: "==", ast.NotEq: "!=", ast.Lt: "<", ast.LtE: "<=",
        ast.Gt: ">", ast.GtE: ">=", ast.Is: "is", ast.IsNot: "is not",
        ast.In: "in", ast.NotIn: "not in",
    }[type(op)]


class PythonGrammar:
    """Grammar adapter for Python source files."""

    ref = "python/std-ast-1"
    node_kinds = NODE_KINDS

    def parse(self, source: bytes) -> SyntaxTree:
        try:
            mod = ast.parse(source)
        except (SyntaxError, ValueError) as exc:
            root = SyntaxNode("module", 0, len(source))
            return SyntaxTree(root, source, "python",
                              has_root_error=True, error_detail=str(exc))
        root = _Converter(source).convert_module(mod)
        return SyntaxTree(root, source, "python")
