"""Lexer, AST and recursive-descent parser for the TypeScript subset.

Supported: classes (single inheritance, fields, methods), interfaces,
top-level functions, ``let``/``const`` declarations, assignment, ``return``,
``if``/``while``, member access, calls, ``new C()``, object literals,
number/string/boolean literals and the operators
``+ - * / < <= > >= == != === !== && || !``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union


class FrontendError(Exception):
    pass


class SyntaxError(FrontendError):  # noqa: A001 - mirrors the reported error name
    def __init__(self, path: str, line: int, col: int, message: str):
        self.path, self.line, self.col, self.message = path, line, col, message
        super().__init__(f"{path}:{line}:{col}: syntax error: {message}")


class UnsupportedConstruct(FrontendError):
    def __init__(self, path: str, span: "Span", construct_name: str):
        self.path, self.span, self.construct_name = path, span, construct_name
        super().__init__(f"{path}:{span.line}:{span.col}: unsupported construct: {construct_name}")


@dataclass(frozen=True)
class Span:
    path: str
    line: int
    col: int
    end_line: int
    end_col: int

    def to_json(self) -> dict:
        return {"path": self.path, "line": self.line, "col": self.col,
                "end_line": self.end_line, "end_col": self.end_col}


@dataclass
class SourceProject:
    project_id: str
    files: list[tuple[str, str]]

    def __post_init__(self):
        paths = [p for p, _ in self.files]
        if len(set(paths)) != len(paths):
            raise ValueError(f"duplicate file paths in project {self.project_id}")


# --------------------------------------------------------------------------
# AST

@dataclass
class Ident:
    name: str
    span: Span


@dataclass
class This:
    span: Span


@dataclass
class NumLit:
    value: str
    span: Span


@dataclass
class StrLit:
    value: str
    span: Span


@dataclass
class BoolLit:
    value: bool
    span: Span


@dataclass
class Member:
    obj: "Expr"
    name: str
    span: Span


@dataclass
class CallExpr:
    callee: "Expr"
    args: list["Expr"]
    span: Span


@dataclass
class NewExpr:
    class_name: str
    span: Span


@dataclass
class ObjectLit:
    fields: list[tuple[str, "Expr"]]
    span: Span


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span


@dataclass
class Unary:
    op: str
    operand: "Expr"
    span: Span


Expr = Union[Ident, This, NumLit, StrLit, BoolLit, Member, CallExpr, NewExpr, ObjectLit, Binary, Unary]
ATOMIC_EXPRS = (Ident, This, NumLit, StrLit, BoolLit)


@dataclass
class VarDecl:
    name: str
    annotation: Optional[str]
    init: Expr
    span: Span


@dataclass
class AssignStmt:
    target: Expr  # Ident or Member
    value: Expr
    span: Span


@dataclass
class ReturnStmt:
    value: Optional[Expr]
    span: Span


@dataclass
class IfStmt:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"]
    span: Span


@dataclass
class WhileStmt:
    cond: Expr
    body: list["Stmt"]
    span: Span


@dataclass
class ExprStmt:
    expr: Expr
    span: Span


Stmt = Union[VarDecl, AssignStmt, ReturnStmt, IfStmt, WhileStmt, ExprStmt]


@dataclass
class Param:
    name: str
    annotation: Optional[str]
    span: Span


@dataclass
class FuncDecl:
    name: str
    params: list[Param]
    ret_annotation: Optional[str]
    body: Optional[list[Stmt]]  # None for interface method signatures
    span: Span


@dataclass
class FieldDecl:
    name: str
    annotation: Optional[str]
    init: Optional[Expr]
    span: Span


@dataclass
class ClassDecl:
    name: str
    superclass: Optional[str]
    members: list[Union[FieldDecl, FuncDecl]]
    span: Span
    is_interface: bool = False


TopLevel = Union[ClassDecl, FuncDecl, Stmt]


@dataclass
class SourceFile:
    path: str
    decls: list[TopLevel] = field(default_factory=list)


@dataclass
class SubsetAst:
    project_id: str
    files: list[SourceFile]

    def decls(self):
        for f in self.files:
            yield from f.decls


# --------------------------------------------------------------------------
# Lexer

KEYWORDS = {"class", "extends", "interface", "function", "let", "const", "var", "return",
            "if", "else", "while", "true", "false", "this", "new"}

# Reserved words outside the subset; hitting one is an UnsupportedConstruct.
UNSUPPORTED_KEYWORDS = {"import", "export", "async", "await", "for", "switch", "try", "catch",
                        "throw", "yield", "enum", "namespace", "module", "type", "do", "break",
                        "continue", "delete", "typeof", "instanceof", "void", "declare",
                        "abstract", "static", "public", "private", "protected", "readonly",
                        "constructor", "super", "null", "undefined", "in", "of"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<str>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>===|!==|=>|==|!=|<=|>=|&&|\|\||\.\.\.|\?\.|[{}()\[\];:,.<>=+\-*/!?@`%&|^~])
""", re.VERBOSE | re.DOTALL)


@dataclass
class Token:
    kind: str  # ident, kw, num, str, op, eof
    text: str
    line: int
    col: int
    end_line: int
    end_col: int


def tokenize(path: str, text: str) -> list[Token]:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SyntaxError(path, line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        s = m.group()
        start_line, start_col = line, col
        nls = s.count("\n")
        if nls:
            line += nls
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
        if kind in ("ws", "nl", "comment"):
            continue
        if kind == "ident" and (s in KEYWORDS or s in UNSUPPORTED_KEYWORDS):
            kind = "kw"
        toks.append(Token(kind, s, start_line, start_col, line, col))
    toks.append(Token("eof", "", line, col, line, col))
    return toks


# --------------------------------------------------------------------------
# Parser

_BINARY_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("==", "!=", "===", "!=="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/"),
]


class Parser:
    def __init__(self, path: str, text: str):
        self.path = path
        self.toks = tokenize(path, text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return SyntaxError(self.path, tok.line, tok.col, message)

    def unsupported(self, name: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return UnsupportedConstruct(self.path, self.span_of(tok, tok), name)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind == "ident":
            return self.advance()
        if t.kind == "kw" and t.text in UNSUPPORTED_KEYWORDS:
            raise self.unsupported(t.text)
        raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")

    def span_of(self, start: Token, end: Token) -> Span:
        return Span(self.path, start.line, start.col, end.end_line, end.end_col)

    def span_from(self, start: Token) -> Span:
        return self.span_of(start, self.toks[max(self.i - 1, 0)])

    def check_unsupported(self):
        t = self.tok
        if t.kind == "kw" and t.text in UNSUPPORTED_KEYWORDS:
            raise self.unsupported(t.text)
        if t.kind == "op" and t.text in ("@", "`", "...", "?.", "=>", "[", "%", "&", "|", "^", "~", "?"):
            names = {"@": "decorator", "`": "template literal", "...": "spread", "?.": "optional chaining",
                     "=>": "arrow function", "[": "array or index expression", "?": "conditional expression"}
            raise self.unsupported(names.get(t.text, f"operator {t.text}"))

    # -- entry
    def parse_file(self) -> SourceFile:
        sf = SourceFile(self.path)
        while self.tok.kind != "eof":
            sf.decls.append(self.parse_toplevel())
        return sf

    def parse_toplevel(self) -> TopLevel:
        if self.at("class"):
            return self.parse_class(is_interface=False)
        if self.at("interface"):
            return self.parse_class(is_interface=True)
        if self.at("function"):
            start = self.advance()
            name = self.expect_ident().text
            return self.parse_function_rest(name, start, need_body=True)
        return self.parse_stmt()

    # -- types
    def parse_type(self) -> str:
        """Parse a type annotation, collapsing generics and function types."""
        self.check_type_start()
        if self.at("("):
            # arrow type: (params) => T
            self.skip_balanced("(", ")")
            self.expect("=>")
            self.parse_type()
            name = "Function"
        else:
            t = self.tok
            if t.kind == "kw" and t.text in ("void", "null", "undefined"):
                self.advance()
                name = t.text
            else:
                name = self.expect_ident().text
                while self.at("."):
                    self.advance()
                    name = self.expect_ident().text
                if self.at("<"):
                    self.skip_balanced("<", ">")
        while self.at("[") and self.peek().kind == "op" and self.peek().text == "]":
            self.advance()
            self.advance()
            name = "Array"
        if self.at("|") or self.at("&"):
            raise self.unsupported("union or intersection type")
        return name

    def check_type_start(self):
        if self.at("{"):
            raise self.unsupported("object type literal")
        if self.at("["):
            raise self.unsupported("tuple type")

    def skip_balanced(self, open_: str, close: str):
        depth = 0
        start = self.tok
        while True:
            t = self.tok
            if t.kind == "eof":
                raise self.error(f"unbalanced {open_!r}", start)
            if t.kind == "op":
                if t.text == open_:
                    depth += 1
                elif t.text == close:
                    depth -= 1
                elif close == ">" and t.text == ">=":
                    raise self.error("malformed type arguments", t)
            self.advance()
            if depth == 0:
                return

    def parse_opt_annotation(self) -> Optional[str]:
        if self.at(":"):
            self.advance()
            return self.parse_type()
        return None

    # -- declarations
    def parse_class(self, is_interface: bool) -> ClassDecl:
        start = self.advance()
        name = self.expect_ident().text
        if self.at("<"):
            self.skip_balanced("<", ">")
        superclass = None
        if self.at("extends"):
            self.advance()
            superclass = self.expect_ident().text
            if self.at("<"):
                self.skip_balanced("<", ">")
            if self.at(","):
                raise self.unsupported("multiple inheritance")
        if self.tok.kind == "ident" and self.tok.text == "implements":
            raise self.unsupported("implements clause")
        self.expect("{")
        members: list[Union[FieldDecl, FuncDecl]] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated class body")
            self.check_unsupported()
            mstart = self.tok
            mname = self.expect_ident().text
            if self.at("("):
                members.append(self.parse_function_rest(mname, mstart, need_body=not is_interface))
            else:
                if self.at("?"):
                    raise self.unsupported("optional member")
                ann = self.parse_opt_annotation()
                init = None
                if self.at("="):
                    if is_interface:
                        raise self.error("interface fields cannot have initializers")
                    self.advance()
                    init = self.parse_expr()
                self.expect_member_end()
                members.append(FieldDecl(mname, ann, init, self.span_from(mstart)))
        self.expect("}")
        return ClassDecl(name, superclass, members, self.span_from(start), is_interface)

    def expect_member_end(self):
        if self.at(";") or self.at(","):
            self.advance()
        elif not self.at("}"):
            raise self.error(f"expected ';', found {self.tok.text or 'end of input'!r}")

    def parse_function_rest(self, name: str, start: Token, need_body: bool) -> FuncDecl:
        if self.at("<"):
            self.skip_balanced("<", ">")
        self.expect("(")
        params = []
        while not self.at(")"):
            self.check_unsupported()
            pstart = self.tok
            pname = self.expect_ident().text
            if self.at("?"):
                raise self.unsupported("optional parameter")
            ann = self.parse_opt_annotation()
            if self.at("="):
                raise self.unsupported("default parameter")
            params.append(Param(pname, ann, self.span_from(pstart)))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        ret = self.parse_opt_annotation()
        body = None
        if need_body:
            body = self.parse_block()
        else:
            self.expect_member_end()
        return FuncDecl(name, params, ret, body, self.span_from(start))

    # -- statements
    def parse_block(self) -> list[Stmt]:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt(self) -> Stmt:
        start = self.tok
        if self.at("let") or self.at("const") or self.at("var"):
            self.advance()
            if self.at("{") or self.at("["):
                raise self.unsupported("destructuring")
            name = self.expect_ident().text
            ann = self.parse_opt_annotation()
            if not self.at("="):
                raise self.error("variable declaration requires an initializer")
            self.advance()
            init = self.parse_expr()
            if self.at(","):
                raise self.unsupported("multiple declarators")
            self.expect(";")
            return VarDecl(name, ann, init, self.span_from(start))
        if self.at("return"):
            self.advance()
            value = None
            if not self.at(";"):
                value = self.parse_expr()
            self.expect(";")
            return ReturnStmt(value, self.span_from(start))
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            orelse: list[Stmt] = []
            if self.at("else"):
                self.advance()
                if self.at("if"):
                    orelse = [self.parse_stmt()]
                else:
                    orelse = self.parse_block()
            return IfStmt(cond, then, orelse, self.span_from(start))
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return WhileStmt(cond, body, self.span_from(start))
        if self.at("class") or self.at("function") or self.at("interface"):
            raise self.unsupported(f"nested {self.tok.text} declaration")
        self.check_unsupported()
        expr = self.parse_expr()
        if self.at("="):
            if not isinstance(expr, (Ident, Member)):
                raise self.error("invalid assignment target", start)
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return AssignStmt(expr, value, self.span_from(start))
        self.expect(";")
        return ExprStmt(expr, self.span_from(start))

    # -- expressions
    def parse_expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_PRECEDENCE):
            return self.parse_unary()
        start = self.tok
        left = self.parse_expr(level + 1)
        ops = _BINARY_PRECEDENCE[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            right = self.parse_expr(level + 1)
            left = Binary(op, left, right, self.span_from(start))
        return left

    def parse_unary(self) -> Expr:
        start = self.tok
        if self.at("!") or self.at("-"):
            op = self.advance().text
            operand = self.parse_unary()
            return Unary(op, operand, self.span_from(start))
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        start = self.tok
        expr = self.parse_primary()
        while True:
            if self.at("."):
                self.advance()
                t = self.tok
                if t.kind in ("ident", "kw"):
                    self.advance()
                else:
                    raise self.error("expected member name")
                expr = Member(expr, t.text, self.span_from(start))
            elif self.at("("):
                self.advance()
                args = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
                expr = CallExpr(expr, args, self.span_from(start))
            else:
                self.check_postfix_unsupported()
                return expr

    def check_postfix_unsupported(self):
        t = self.tok
        if t.kind == "op" and t.text in ("[", "?.", "=>", "?"):
            self.check_unsupported()
        if t.kind == "kw" and t.text in ("instanceof", "in"):
            raise self.unsupported(t.text)

    def parse_primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return NumLit(t.text, self.span_of(t, t))
        if t.kind == "str":
            self.advance()
            return StrLit(_unquote(t.text), self.span_of(t, t))
        if t.kind == "ident":
            self.advance()
            return Ident(t.text, self.span_of(t, t))
        if t.kind == "kw":
            if t.text in ("true", "false"):
                self.advance()
                return BoolLit(t.text == "true", self.span_of(t, t))
            if t.text == "this":
                self.advance()
                return This(self.span_of(t, t))
            if t.text == "new":
                self.advance()
                name = self.expect_ident().text
                if self.at("<"):
                    self.skip_balanced("<", ">")
                self.expect("(")
                if not self.at(")"):
                    raise self.unsupported("constructor arguments")
                self.expect(")")
                return NewExpr(name, self.span_from(t))
            if t.text == "function":
                raise self.unsupported("function expression")
            self.check_unsupported()
        if self.at("("):
            paren = self.advance()
            if self.at(")"):
                raise self.unsupported("arrow function")
            if not self.starts_expr():
                raise self.error("expected expression after '('", paren)
            inner = self.parse_expr()
            self.expect(")")
            if self.at("=>"):
                raise self.unsupported("arrow function")
            return inner
        if self.at("{"):
            return self.parse_object()
        self.check_unsupported()
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def starts_expr(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "num", "str"):
            return True
        if t.kind == "kw":
            return t.text in ("true", "false", "this", "new", "function")
        return t.kind == "op" and t.text in ("(", "{", "!", "-")

    def parse_object(self) -> ObjectLit:
        start = self.expect("{")
        fields: list[tuple[str, Expr]] = []
        seen = set()
        while not self.at("}"):
            self.check_unsupported()
            kt = self.tok
            if kt.kind == "str":
                key = _unquote(kt.text)
                self.advance()
            else:
                key = self.expect_ident().text
            if key in seen:
                raise self.error(f"duplicate object key {key!r}", kt)
            seen.add(key)
            self.expect(":")
            fields.append((key, self.parse_expr()))
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return ObjectLit(fields, self.span_from(start))


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def parse_file(path: str, text: str) -> SourceFile:
    return Parser(path, text).parse_file()


def parse_project(src: SourceProject) -> SubsetAst:
    """Parse every file of a project; the first syntax problem is raised."""
    return SubsetAst(src.project_id, [parse_file(p, t) for p, t in src.files])
