"""JavaScript grammar: a byte-exact recursive-descent parser.

Covers the language subset the engine targets for analysis and mutation:
functions, classes with methods and fields, the usual statements, and a
full expression grammar with standard precedence. Regex literals and
destructuring patterns are not supported; files using them are reported
as parse errors rather than misanalyzed.
"""

from __future__ import annotations

from .node import SyntaxNode, SyntaxTree

_KEYWORDS = {
    "function", "class", "extends", "return", "if", "else", "for", "while",
    "do", "break", "continue", "const", "let", "var", "new", "typeof",
    "instanceof", "in", "of", "try", "catch", "finally", "throw", "delete",
    "void", "this", "null", "true", "false", "static", "get", "set",
    "switch", "case", "default", "async", "await", "yield", "export",
    "import", "super", "undefined",
}

_PUNCTS = [
    ">>>=", "===", "!==", "**=", "<<=", ">>=", ">>>", "...",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "**", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "?.",
    "{", "}", "(", ")", "[", "]", ";", ",", ".", "?", ":", "=", "+", "-",
    "*", "/", "%", "<", ">", "!", "~", "&", "|", "^",
]

NODE_KINDS = frozenset([
    "program", "block", "class_body",
    "function_declaration", "function_expression", "arrow_function",
    "class_declaration", "method_definition", "field_definition",
    "if_statement", "for_statement", "while_statement", "do_statement",
    "switch_statement", "case_clause", "try_statement", "catch_clause",
    "variable_declaration", "variable_declarator", "assignment",
    "expression_statement", "return_statement", "throw_statement",
    "break_statement", "continue_statement", "import_statement",
    "export_statement", "empty_statement",
    "binary_operator", "boolean_operator", "comparison_operator",
    "not_operator", "unary_operator", "update_expression",
    "conditional_expression", "call", "member_expression", "subscript",
    "new_expression", "sequence_expression",
    "identifier", "integer", "float", "string", "template_string",
    "true", "false", "null", "this_expression", "super_expression",
    "array", "object", "pair", "spread_element",
    "operator", "heritage_clause", "parameters",
])


class JsParseError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class _Token:
    __slots__ = ("type", "text", "start", "end", "newline_before")

    def __init__(self, type_: str, text: str, start: int, end: int, newline_before: bool):
        self.type = type_
        self.text = text
        self.start = start
        self.end = end
        self.newline_before = newline_before

    def __repr__(self):  # pragma: no cover
        return f"Token({self.type},{self.text!r}@{self.start})"


def _is_ident_start(b: int) -> bool:
    return (0x41 <= b <= 0x5A) or (0x61 <= b <= 0x7A) or b in (0x5F, 0x24)


def _is_ident_part(b: int) -> bool:
    return _is_ident_start(b) or (0x30 <= b <= 0x39)


def _is_digit(b: int) -> bool:
    return 0x30 <= b <= 0x39


def tokenize(src: bytes) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(src)
    newline = False
    while i < n:
        b = src[i]
        if b in (0x20, 0x09, 0x0D):
            i += 1
            continue
        if b == 0x0A:
            newline = True
            i += 1
            continue
        if src.startswith(b"//", i):
            j = src.find(b"\n", i)
            i = n if j == -1 else j
            continue
        if src.startswith(b"/*", i):
            j = src.find(b"*/", i + 2)
            if j == -1:
                raise JsParseError("unterminated block comment", i)
            if b"\n" in src[i:j]:
                newline = True
            i = j + 2
            continue
        start = i
        if _is_ident_start(b):
            while i < n and _is_ident_part(src[i]):
                i += 1
            text = src[start:i].decode("utf-8")
            ttype = "keyword" if text in _KEYWORDS else "ident"
            tokens.append(_Token(ttype, text, start, i, newline))
        elif _is_digit(b) or (b == 0x2E and i + 1 < n and _is_digit(src[i + 1])):
            is_float = b == 0x2E
            if src.startswith(b"0x", i) or src.startswith(b"0X", i) \
                    or src.startswith(b"0b", i) or src.startswith(b"0o", i):
                i += 2
                while i < n and (_is_ident_part(src[i])):
                    i += 1
            else:
                while i < n and _is_digit(src[i]):
                    i += 1
                if i < n and src[i] == 0x2E:
                    is_float = True
                    i += 1
                    while i < n and _is_digit(src[i]):
                        i += 1
                if i < n and src[i] in (0x65, 0x45):  # e/E exponent
                    is_float = True
                    i += 1
                    if i < n and src[i] in (0x2B, 0x2D):
                        i += 1
                    while i < n and _is_digit(src[i]):
                        i += 1
            text = src[start:i].decode("utf-8")
            tokens.append(_Token("float" if is_float else "integer",
                                 text, start, i, newline))
        elif b in (0x22, 0x27):  # " '
            quote = b
            i += 1
            while i < n and src[i] != quote:
                i += 2 if src[i] == 0x5C else 1
            if i >= n:
                raise JsParseError("unterminated string", start)
            i += 1
            tokens.append(_Token("string", src[start:i].decode("utf-8", "replace"),
                                 start, i, newline))
        elif b == 0x60:  # ` template literal
            i += 1
            depth = 0
            while i < n:
                c = src[i]
                if c == 0x5C:
                    i += 2
                    continue
                if depth == 0 and c == 0x60:
                    break
                if depth == 0 and src.startswith(b"${", i):
                    depth = 1
                    i += 2
                    continue
                if depth > 0:
                    if c == 0x7B:
                        depth += 1
                    elif c == 0x7D:
                        depth -= 1
                i += 1
            if i >= n:
                raise JsParseError("unterminated template literal", start)
            i += 1
            tokens.append(_Token("template", src[start:i].decode("utf-8", "replace"),
                                 start, i, newline))
        else:
            for p in _PUNCTS:
                pb = p.encode()
                if src.startswith(pb, i):
                    i += len(pb)
                    tokens.append(_Token("punct", p, start, i, newline))
                    break
            else:
                raise JsParseError(f"unexpected byte {bytes([b])!r}", i)
        newline = False
    tokens.append(_Token("eof", "", n, n, newline))
    return tokens


_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "**="}
_EQUALITY_OPS = {"==", "!=", "===", "!=="}
_RELATIONAL_OPS = {"<", ">", "<=", ">="}


class _Parser:
    def __init__(self, src: bytes):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0

    # -- token helpers ---------------------------------------------------

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.type != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.type in ("punct", "keyword") and tok.text == text

    def accept(self, text: str) -> _Token | None:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise JsParseError(f"expected {text!r}, found {tok.text!r}", tok.start)
        return tok

    def expect_ident(self) -> _Token:
        tok = self.next()
        if tok.type != "ident":
            raise JsParseError(f"expected identifier, found {tok.text!r}", tok.start)
        return tok

    def _terminator(self) -> int:
        """Consume a statement terminator; returns the end offset."""
        tok = self.peek()
        if tok.text == ";":
            self.next()
            return tok.end
        if tok.type == "eof" or tok.text == "}" or tok.newline_before:
            return self.tokens[self.i - 1].end
        raise JsParseError(f"expected ';' before {tok.text!r}", tok.start)

    # -- program and statements -------------------------------------------

    def parse_program(self) -> SyntaxNode:
        stmts = []
        while self.peek().type != "eof":
            stmts.append(self.statement())
        return SyntaxNode("program", 0, len(self.src), children=stmts)

    def statement(self) -> SyntaxNode:
        tok = self.peek()
        if tok.text == ";":
            self.next()
            return SyntaxNode("empty_statement", tok.start, tok.end)
        if tok.text == "{":
            return self.brace_block(as_statement=True)
        if tok.type == "keyword":
            name = tok.text
            if name == "export":
                return self.export_statement()
            if name == "import":
                return self.import_statement()
            if name == "function" or (name == "async" and self.peek(1).text == "function"):
                return self.function_declaration()
            if name == "class":
                return self.class_declaration()
            if name == "if":
                return self.if_statement()
            if name == "for":
                return self.for_statement()
            if name == "while":
                return self.while_statement()
            if name == "do":
                return self.do_statement()
            if name == "switch":
                return self.switch_statement()
            if name == "try":
                return self.try_statement()
            if name in ("const", "let", "var"):
                return self.variable_declaration()
            if name == "return":
                return self.simple_statement("return_statement", argument=True)
            if name == "throw":
                return self.simple_statement("throw_statement", argument=True)
            if name == "break":
                return self.simple_statement("break_statement")
            if name == "continue":
                return self.simple_statement("continue_statement")
        return self.expression_statement()

    def simple_statement(self, kind: str, argument: bool = False) -> SyntaxNode:
        kw = self.next()
        children = []
        if argument and not self.peek().newline_before \
                and self.peek().text not in (";", "}") and self.peek().type != "eof":
            children.append(self.expression())
        end = self._terminator()
        return SyntaxNode(kind, kw.start, end, children=children)

    def import_statement(self) -> SyntaxNode:
        kw = self.next()
        while self.peek().type != "eof" and self.peek().text != ";" \
                and not self.peek().newline_before:
            self.next()
        end = self._terminator()
        return SyntaxNode("import_statement", kw.start, end)

    def export_statement(self) -> SyntaxNode:
        kw = self.next()
        self.accept("default")
        inner = self.statement()
        return SyntaxNode("export_statement", kw.start, inner.end, children=[inner])

    def expression_statement(self) -> SyntaxNode:
        expr = self.expression()
        end = self._terminator()
        if expr.kind == "assignment":
            # promote to a statement-level assignment covering the terminator
            return SyntaxNode("assignment", expr.start, end,
                              children=expr.children, fields=dict(expr.fields))
        return SyntaxNode("expression_statement", expr.start, end, children=[expr])

    def variable_declaration(self) -> SyntaxNode:
        kw = self.next()
        declarators = []
        while True:
            name = self.expect_ident()
            ident = SyntaxNode("identifier", name.start, name.end)
            children = [ident]
            if self.accept("="):
                children.append(self.assignment_expression())
            declarators.append(SyntaxNode("variable_declarator", name.start,
                                          children[-1].end, children=children,
                                          fields={"name": ident}))
            if not self.accept(","):
                break
        end = self._terminator()
        return SyntaxNode("variable_declaration", kw.start, end, children=declarators)

    def brace_block(self, as_statement: bool = False) -> SyntaxNode:
        lbrace = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().type == "eof":
                raise JsParseError("unterminated block", lbrace.start)
            stmts.append(self.statement())
        rbrace = self.expect("}")
        # span covers the brace interior; braces stay put under edits
        return SyntaxNode("block", lbrace.end, rbrace.start, children=stmts)

    def body_block(self) -> SyntaxNode:
        """A statement body: braced block, or a single statement wrapped."""
        if self.at("{"):
            return self.brace_block()
        stmt = self.statement()
        return SyntaxNode("block", stmt.start, stmt.end, children=[stmt])

    def function_declaration(self) -> SyntaxNode:
        start_tok = self.peek()
        self.accept("async")
        self.expect("function")
        name = self.expect_ident()
        ident = SyntaxNode("identifier", name.start, name.end)
        params = self.parameter_list()
        body = self.brace_block()
        return SyntaxNode("function_declaration", start_tok.start, body.end + 1,
                          children=[ident, params, body],
                          fields={"name": ident, "body": body, "parameters": params})

    def parameter_list(self) -> SyntaxNode:
        lparen = self.expect("(")
        children = []
        while not self.at(")"):
            self.accept("...")
            name = self.expect_ident()
            node = SyntaxNode("identifier", name.start, name.end)
            if self.accept("="):
                default = self.assignment_expression()
                node = SyntaxNode("identifier", name.start, default.end,
                                  children=[default])
            children.append(node)
            if not self.accept(","):
                break
        rparen = self.expect(")")
        return SyntaxNode("parameters", lparen.start, rparen.end, children=children)

    def class_declaration(self) -> SyntaxNode:
        kw = self.expect("class")
        name = self.expect_ident()
        ident = SyntaxNode("identifier", name.start, name.end)
        fields: dict = {"name": ident, "base_count": 0}
        children: list[SyntaxNode] = [ident]
        if self.at("extends"):
            ext = self.next()
            superclass = self.unary_expression()
            heritage = SyntaxNode("heritage_clause", ext.start, superclass.end,
                                  children=[superclass])
            fields["heritage"] = heritage
            fields["base_count"] = 1
            children.append(heritage)
        lbrace = self.expect("{")
        members = []
        while not self.at("}"):
            if self.accept(";"):
                continue
            members.append(self.class_member())
        rbrace = self.expect("}")
        body = SyntaxNode("block", lbrace.end, rbrace.start, children=members)
        fields["body"] = body
        children.append(body)
        return SyntaxNode("class_declaration", kw.start, rbrace.end,
                          children=children, fields=fields)

    def class_member(self) -> SyntaxNode:
        start_tok = self.peek()
        self.accept("static")
        if self.peek().text in ("get", "set") and self.peek(1).text != "(":
            self.next()
        self.accept("async")
        name_tok = self.next()
        if name_tok.type not in ("ident", "keyword", "string"):
            raise JsParseError(f"bad class member {name_tok.text!r}", name_tok.start)
        ident = SyntaxNode("identifier", name_tok.start, name_tok.end)
        if self.at("("):
            params = self.parameter_list()
            body = self.brace_block()
            return SyntaxNode("method_definition", start_tok.start, body.end + 1,
                              children=[ident, params, body],
                              fields={"name": ident, "body": body, "parameters": params})
        children = [ident]
        if self.accept("="):
            children.append(self.assignment_expression())
        end = self._terminator()
        return SyntaxNode("field_definition", start_tok.start, end,
                          children=children, fields={"name": ident})

    def if_statement(self) -> SyntaxNode:
        kw = self.expect("if")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        body = self.body_block()
        fields = {"condition": cond, "body": body}
        children = [cond, body]
        end = self.tokens[self.i - 1].end
        if self.accept("else"):
            if self.at("if"):
                nested = self.if_statement()
                alt = SyntaxNode("block", nested.start, nested.end, children=[nested])
                fields["alternative_is_chained"] = True
            else:
                alt = self.body_block()
            fields["alternative"] = alt
            children.append(alt)
            end = alt.end if alt.children else alt.end
            end = max(end, self.tokens[self.i - 1].end)
        return SyntaxNode("if_statement", kw.start, max(end, children[-1].end),
                          children=children, fields=fields)

    def for_statement(self) -> SyntaxNode:
        kw = self.expect("for")
        self.expect("(")
        children: list[SyntaxNode] = []
        if not self.at(";"):
            if self.peek().text in ("const", "let", "var"):
                decl_kw = self.next()
                name = self.expect_ident()
                ident = SyntaxNode("identifier", name.start, name.end)
                if self.peek().text in ("of", "in"):
                    self.next()
                    iterable = self.expression()
                    children.extend([ident, iterable])
                    self.expect(")")
                    body = self.body_block()
                    children.append(body)
                    return SyntaxNode("for_statement", kw.start,
                                      max(body.end, self.tokens[self.i - 1].end),
                                      children=children, fields={"body": body})
                init_children = [ident]
                if self.accept("="):
                    init_children.append(self.assignment_expression())
                while self.accept(","):
                    nm = self.expect_ident()
                    init_children.append(SyntaxNode("identifier", nm.start, nm.end))
                    if self.accept("="):
                        init_children.append(self.assignment_expression())
                children.append(SyntaxNode("variable_declaration", decl_kw.start,
                                           init_children[-1].end, children=init_children))
            else:
                children.append(self.expression())
                if self.peek().text in ("of", "in"):
                    self.next()
                    iterable = self.expression()
                    children.append(iterable)
                    self.expect(")")
                    body = self.body_block()
                    children.append(body)
                    return SyntaxNode("for_statement", kw.start,
                                      max(body.end, self.tokens[self.i - 1].end),
                                      children=children, fields={"body": body})
        self.expect(";")
        if not self.at(";"):
            children.append(self.expression())
        self.expect(";")
        if not self.at(")"):
            children.append(self.expression())
        self.expect(")")
        body = self.body_block()
        children.append(body)
        return SyntaxNode("for_statement", kw.start,
                          max(body.end, self.tokens[self.i - 1].end),
                          children=children, fields={"body": body})

    def while_statement(self) -> SyntaxNode:
        kw = self.expect("while")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        body = self.body_block()
        return SyntaxNode("while_statement", kw.start,
                          max(body.end, self.tokens[self.i - 1].end),
                          children=[cond, body], fields={"condition": cond, "body": body})

    def do_statement(self) -> SyntaxNode:
        kw = self.expect("do")
        body = self.body_block()
        self.expect("while")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        end = self._terminator()
        return SyntaxNode("do_statement", kw.start, end,
                          children=[body, cond], fields={"body": body})

    def switch_statement(self) -> SyntaxNode:
        kw = self.expect("switch")
        self.expect("(")
        subject = self.expression()
        self.expect(")")
        self.expect("{")
        clauses = []
        while not self.at("}"):
            case_kw = self.next()
            if case_kw.text == "case":
                test = self.expression()
                self.expect(":")
            elif case_kw.text == "default":
                test = None
                self.expect(":")
            else:
                raise JsParseError("expected case/default", case_kw.start)
            stmts = []
            while not self.at("case") and not self.at("default") and not self.at("}"):
                stmts.append(self.statement())
            end = stmts[-1].end if stmts else self.tokens[self.i - 1].end
            clause_children = ([test] if test else []) + stmts
            clauses.append(SyntaxNode("case_clause", case_kw.start, end,
                                      children=clause_children))
        rbrace = self.expect("}")
        return SyntaxNode("switch_statement", kw.start, rbrace.end,
                          children=[subject] + clauses)

    def try_statement(self) -> SyntaxNode:
        kw = self.expect("try")
        body = self.brace_block()
        children: list[SyntaxNode] = [body]
        fields: dict = {"body": body}
        end = body.end + 1
        if self.at("catch"):
            catch_kw = self.next()
            if self.accept("("):
                self.expect_ident()
                self.expect(")")
            catch_body = self.brace_block()
            handler = SyntaxNode("catch_clause", catch_kw.start, catch_body.end + 1,
                                 children=[catch_body], fields={"body": catch_body})
            children.append(handler)
            fields["handlers"] = [handler]
            end = handler.end
        if self.at("finally"):
            self.next()
            fin = self.brace_block()
            fields["finalizer"] = fin
            children.append(fin)
            end = fin.end + 1
        return SyntaxNode("try_statement", kw.start, end, children=children, fields=fields)

    # -- expressions -------------------------------------------------------

    def expression(self) -> SyntaxNode:
        expr = self.assignment_expression()
        if self.at(","):
            parts = [expr]
            while self.accept(","):
                parts.append(self.assignment_expression())
            return SyntaxNode("sequence_expression", parts[0].start, parts[-1].end,
                              children=parts)
        return expr

    def assignment_expression(self) -> SyntaxNode:
        if self._arrow_ahead():
            return self.arrow_function()
        left = self.conditional_expression()
        tok = self.peek()
        if tok.type == "punct" and tok.text in _ASSIGN_OPS:
            op_tok = self.next()
            op = SyntaxNode("operator", op_tok.start, op_tok.end)
            right = self.assignment_expression()
            return SyntaxNode("assignment", left.start, right.end,
                              children=[left, op, right],
                              fields={"left": left, "right": right, "operator": op,
                                      "op_text": op_tok.text})
        return left

    def _arrow_ahead(self) -> bool:
        tok = self.peek()
        if tok.type == "ident" and self.peek(1).text == "=>":
            return True
        if tok.text == "(":
            depth = 0
            j = self.i
            while j < len(self.tokens):
                t = self.tokens[j]
                if t.text == "(":
                    depth += 1
                elif t.text == ")":
                    depth -= 1
                    if depth == 0:
                        return self.tokens[j + 1].text == "=>"
                elif t.type == "eof":
                    return False
                j += 1
        return False

    def arrow_function(self) -> SyntaxNode:
        start_tok = self.peek()
        if start_tok.text == "(":
            params = self.parameter_list()
        else:
            name = self.expect_ident()
            params = SyntaxNode("parameters", name.start, name.end,
                                children=[SyntaxNode("identifier", name.start, name.end)])
        self.expect("=>")
        if self.at("{"):
            body = self.brace_block()
            end = body.end + 1
        else:
            expr = self.assignment_expression()
            body = SyntaxNode("block", expr.start, expr.end, children=[expr])
            end = expr.end
        return SyntaxNode("arrow_function", start_tok.start, end,
                          children=[params, body],
                          fields={"body": body, "parameters": params})

    def conditional_expression(self) -> SyntaxNode:
        cond = self.binary_expression(0)
        if self.at("?") and self.peek().text != "?.":
            self.next()
            then = self.assignment_expression()
            self.expect(":")
            alt = self.assignment_expression()
            return SyntaxNode("conditional_expression", cond.start, alt.end,
                              children=[cond, then, alt])
        return cond

    _BINARY_LEVELS = [
        ({"||", "??"}, "boolean_operator"),
        ({"&&"}, "boolean_operator"),
        ({"|"}, "binary_operator"),
        ({"^"}, "binary_operator"),
        ({"&"}, "binary_operator"),
        (_EQUALITY_OPS, "comparison_operator"),
        (_RELATIONAL_OPS | {"instanceof", "in"}, "comparison_operator"),
        ({"<<", ">>", ">>>"}, "binary_operator"),
        ({"+", "-"}, "binary_operator"),
        ({"*", "/", "%"}, "binary_operator"),
    ]

    def binary_expression(self, level: int) -> SyntaxNode:
        if level >= len(self._BINARY_LEVELS):
            return self.exponent_expression()
        ops, kind = self._BINARY_LEVELS[level]
        left = self.binary_expression(level + 1)
        while True:
            tok = self.peek()
            if tok.text not in ops or tok.type not in ("punct", "keyword"):
                return left
            op_tok = self.next()
            op = SyntaxNode("operator", op_tok.start, op_tok.end)
            right = self.binary_expression(level + 1)
            left = SyntaxNode(kind, left.start, right.end,
                              children=[left, op, right],
                              fields={"left": left, "right": right, "operator": op,
                                      "op_text": op_tok.text, "ops_count": 1})

    def exponent_expression(self) -> SyntaxNode:
        base = self.unary_expression()
        if self.at("**"):
            op_tok = self.next()
            op = SyntaxNode("operator", op_tok.start, op_tok.end)
            right = self.exponent_expression()
            return SyntaxNode("binary_operator", base.start, right.end,
                              children=[base, op, right],
                              fields={"left": base, "right": right, "operator": op,
                                      "op_text": "**", "ops_count": 1})
        return base

    def unary_expression(self) -> SyntaxNode:
        tok = self.peek()
        if tok.text in ("!", "~", "+", "-", "typeof", "void", "delete", "await"):
            self.next()
            operand = self.unary_expression()
            kind = "not_operator" if tok.text == "!" else "unary_operator"
            return SyntaxNode(kind, tok.start, operand.end, children=[operand])
        if tok.text in ("++", "--"):
            self.next()
            operand = self.unary_expression()
            return SyntaxNode("update_expression", tok.start, operand.end,
                              children=[operand])
        return self.postfix_expression()

    def postfix_expression(self) -> SyntaxNode:
        expr = self.call_expression()
        tok = self.peek()
        if tok.text in ("++", "--") and not tok.newline_before:
            self.next()
            return SyntaxNode("update_expression", expr.start, tok.end, children=[expr])
        return expr

    def call_expression(self) -> SyntaxNode:
        if self.at("new"):
            kw = self.next()
            callee = self.call_expression()
            return SyntaxNode("new_expression", kw.start, callee.end, children=[callee])
        expr = self.primary_expression()
        while True:
            tok = self.peek()
            if tok.text == "(":
                self.next()
                args = []
                while not self.at(")"):
                    self.accept("...")
                    args.append(self.assignment_expression())
                    if not self.accept(","):
                        break
                rparen = self.expect(")")
                expr = SyntaxNode("call", expr.start, rparen.end,
                                  children=[expr] + args, fields={"function": expr})
            elif tok.text in (".", "?."):
                self.next()
                prop = self.next()
                if prop.type not in ("ident", "keyword"):
                    raise JsParseError("expected property name", prop.start)
                expr = SyntaxNode("member_expression", expr.start, prop.end,
                                  children=[expr])
            elif tok.text == "[":
                self.next()
                index = self.expression()
                rbrack = self.expect("]")
                expr = SyntaxNode("subscript", expr.start, rbrack.end,
                                  children=[expr, index])
            else:
                return expr

    def primary_expression(self) -> SyntaxNode:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.type == "integer" or tok.type == "float":
            self.next()
            fields = {}
            if tok.type == "integer":
                try:
                    fields["value"] = int(tok.text, 0)
                except ValueError:
                    fields["value"] = 0
            return SyntaxNode(tok.type, tok.start, tok.end, fields=fields)
        if tok.type == "string":
            self.next()
            return SyntaxNode("string", tok.start, tok.end)
        if tok.type == "template":
            self.next()
            return SyntaxNode("template_string", tok.start, tok.end)
        if tok.type == "ident":
            self.next()
            return SyntaxNode("identifier", tok.start, tok.end)
        if tok.type == "keyword":
            if tok.text in ("true", "false", "null"):
                self.next()
                return SyntaxNode(tok.text, tok.start, tok.end)
            if tok.text == "undefined":
                self.next()
                return SyntaxNode("identifier", tok.start, tok.end)
            if tok.text == "this":
                self.next()
                return SyntaxNode("this_expression", tok.start, tok.end)
            if tok.text == "super":
                self.next()
                return SyntaxNode("super_expression", tok.start, tok.end)
            if tok.text == "function" or (tok.text == "async" and self.peek(1).text == "function"):
                start = tok.start
                self.accept("async")
                self.expect("function")
                name_tok = self.peek()
                if name_tok.type == "ident":
                    self.next()
                params = self.parameter_list()
                body = self.brace_block()
                return SyntaxNode("function_expression", start, body.end + 1,
                                  children=[params, body],
                                  fields={"body": body, "parameters": params})
            if tok.text == "class":
                return self.class_declaration()
            if tok.text in ("await", "yield", "typeof", "new", "delete", "void"):
                return self.unary_expression()
        if tok.text == "[":
            lb = self.next()
            elements = []
            while not self.at("]"):
                self.accept("...")
                elements.append(self.assignment_expression())
                if not self.accept(","):
                    break
            rb = self.expect("]")
            return SyntaxNode("array", lb.start, rb.end, children=elements)
        if tok.text == "{":
            return self.object_literal()
        raise JsParseError(f"unexpected token {tok.text!r}", tok.start)

    def object_literal(self) -> SyntaxNode:
        lb = self.expect("{")
        pairs = []
        while not self.at("}"):
            start_tok = self.peek()
            if self.accept("..."):
                value = self.assignment_expression()
                pairs.append(SyntaxNode("spread_element", start_tok.start, value.end,
                                        children=[value]))
            else:
                if self.at("["):
                    self.next()
                    key = self.assignment_expression()
                    self.expect("]")
                else:
                    key_tok = self.next()
                    if key_tok.type not in ("ident", "keyword", "string",
                                            "integer", "float"):
                        raise JsParseError("bad object key", key_tok.start)
                    key = SyntaxNode("identifier", key_tok.start, key_tok.end)
                if self.accept(":"):
                    value = self.assignment_expression()
                    pairs.append(SyntaxNode("pair", key.start, value.end,
                                            children=[key, value]))
                else:
                    pairs.append(SyntaxNode("pair", key.start, key.end, children=[key]))
            if not self.accept(","):
                break
        rb = self.expect("}")
        return SyntaxNode("object", lb.start, rb.end, children=pairs)


class JavaScriptGrammar:
    """Grammar adapter for the supported JavaScript subset."""

    ref = "javascript/rd-1"
    node_kinds = NODE_KINDS

    def parse(self, source: bytes) -> SyntaxTree:
        try:
            root = _Parser(source).parse_program()
        except JsParseError as exc:
            root = SyntaxNode("program", 0, len(source))
            return SyntaxTree(root, source, "javascript",
                              has_root_error=True, error_detail=str(exc))
        return SyntaxTree(root, source, "javascript")
