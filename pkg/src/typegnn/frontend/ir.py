"""Intermediate representation where every compound subexpression is bound.

Type-variable numbering follows the layout of the worked example in the
documentation: every declared variable (fields, parameters, return slots and
``let`` locals) is numbered first, in declaration order; classes, functions
and fresh intermediates follow in program order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from typegnn import library
from typegnn.frontend import syntax as S
from typegnn.frontend.syntax import FrontendError, Span, UnsupportedConstruct


class DuplicateName(FrontendError):
    def __init__(self, name: str, span: Span):
        self.name, self.span = name, span
        super().__init__(f"{span.path}:{span.line}:{span.col}: duplicate definition of {name!r}")


ROLE_DECLARED = ("field", "param", "return", "local")


@dataclass
class IrVar:
    id: int
    name: str
    role: str  # field | param | return | local | class | function | temp
    span: Span
    annotation: Optional[str] = None

    @property
    def named(self) -> bool:
        """Whether the variable carries a source identifier."""
        return self.role not in ("temp", "return")


# -- atoms

@dataclass(frozen=True)
class VarRef:
    id: int


@dataclass(frozen=True)
class Lit:
    kind: str  # number | string | boolean
    text: str


@dataclass(frozen=True)
class LibRef:
    name: str


Atom = Union[VarRef, Lit, LibRef]


# -- flat compound expressions

@dataclass(frozen=True)
class Access:
    obj: Atom
    label: str


@dataclass(frozen=True)
class Call:
    fn: Atom
    args: tuple[Atom, ...]


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple[Atom, ...]


@dataclass(frozen=True)
class Obj:
    fields: tuple[tuple[str, Atom], ...]


@dataclass(frozen=True)
class New:
    cls: Atom


Flat = Union[Access, Call, Op, Obj, New]


# -- statements

@dataclass
class Bind:
    target: int
    expr: Union[Flat, Atom]
    span: Span


@dataclass
class Assign:
    target: int
    value: Atom
    span: Span


@dataclass
class Return:
    value: Optional[Atom]
    ret: int
    span: Span


@dataclass
class If:
    cond: Atom
    then: list
    orelse: list
    span: Span


@dataclass
class While:
    prelude: list  # bindings that compute the condition
    cond: Atom
    body: list
    span: Span


Stmt = Union[Bind, Assign, Return, If, While]


@dataclass
class IrFunction:
    var: int
    name: str
    params: list[int]
    ret: int
    body: Optional[list]  # None for interface signatures
    span: Span


@dataclass
class IrClass:
    var: int
    name: str
    superclass: Optional[Atom]
    members: list[tuple[str, int]]
    methods: list[IrFunction]
    inits: list  # field initializer statements
    span: Span
    is_interface: bool = False


@dataclass
class IrModule:
    project_id: str
    vars: list[IrVar]
    decls: list  # IrClass | IrFunction | statement
    annotations: dict[int, str]
    occurrences: dict[int, int]
    fresh_prefix: str = "v"

    @property
    def num_declared(self) -> int:
        return sum(1 for v in self.vars if v.role in ROLE_DECLARED)

    @property
    def fresh_vars(self) -> list[IrVar]:
        return [v for v in self.vars if v.role == "temp"]

    def classes(self) -> list[IrClass]:
        return [d for d in self.decls if isinstance(d, IrClass)]

    def functions(self) -> list[IrFunction]:
        out = []
        for d in self.decls:
            if isinstance(d, IrFunction):
                out.append(d)
            elif isinstance(d, IrClass):
                out.extend(d.methods)
        return out


def normalize_annotation(name: Optional[str]) -> Optional[str]:
    """Ground-truth label for an annotation; ``any`` is not a label."""
    if name is None or name == "any":
        return None
    return name


def decl_key(name: str, span: Span) -> str:
    return f"{name}@{span.path}:{span.line}:{span.col}"


# --------------------------------------------------------------------------
# Lowering

class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None):
        self.parent = parent
        self.names: dict[str, int] = {}

    def lookup(self, name: str) -> Optional[int]:
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


_OP_NAMES = {"-": "neg", "!": "!"}


class _Lowerer:
    def __init__(self, ast: S.SubsetAst):
        self.ast = ast
        self.vars: list[IrVar] = []
        self.declared: dict[int, int] = {}  # id(ast node) -> var id
        self.order: list[int] = []  # non-declared vars in program order
        self.occ: dict[int, int] = {}
        self.globals = _Scope()
        self.class_info: dict[str, tuple[int, S.ClassDecl]] = {}
        self.member_tables: dict[int, dict[str, int]] = {}
        self.fresh_prefix = _pick_fresh_prefix(ast)
        self.fresh_count = 0

    def new_var(self, name, role, span, annotation=None) -> int:
        v = IrVar(len(self.vars), name, role, span, normalize_annotation(annotation))
        self.vars.append(v)
        if role in ROLE_DECLARED:
            self.occ[v.id] = 1
        return v.id

    # -- pass A: declared variables, in declaration order
    def allocate_declared(self):
        for d in self.ast.decls():
            if isinstance(d, S.ClassDecl):
                for m in d.members:
                    if isinstance(m, S.FieldDecl):
                        self.declared[id(m)] = self.new_var(m.name, "field", m.span, m.annotation)
                    else:
                        self.allocate_function(m)
            elif isinstance(d, S.FuncDecl):
                self.allocate_function(d)
            else:
                self.allocate_stmts([d])

    def allocate_function(self, f: S.FuncDecl):
        for p in f.params:
            self.declared[id(p)] = self.new_var(p.name, "param", p.span, p.annotation)
        self.declared[id(f)] = self.new_var(f.name, "return", f.span, f.ret_annotation)
        if f.body is not None:
            self.allocate_stmts(f.body)

    def allocate_stmts(self, stmts):
        for s in stmts:
            if isinstance(s, S.VarDecl):
                self.declared[id(s)] = self.new_var(s.name, "local", s.span, s.annotation)
            elif isinstance(s, S.IfStmt):
                self.allocate_stmts(s.then)
                self.allocate_stmts(s.orelse)
            elif isinstance(s, S.WhileStmt):
                self.allocate_stmts(s.body)

    # -- globals: classes, functions, top-level lets
    def collect_globals(self):
        def define(name, vid, span):
            if name in self.globals.names:
                raise DuplicateName(name, span)
            self.globals.names[name] = vid

        for d in self.ast.decls():
            if isinstance(d, S.ClassDecl):
                vid = self.new_var(d.name, "class", d.span)
                define(d.name, vid, d.span)
                self.class_info[d.name] = (vid, d)
            elif isinstance(d, S.FuncDecl):
                vid = self.new_var(d.name, "function", d.span)
                define(d.name, vid, d.span)
                self.declared[("fn", id(d))] = vid
            elif isinstance(d, S.VarDecl):
                define(d.name, self.declared[id(d)], d.span)
        for name, (vid, cd) in self.class_info.items():
            table: dict[str, int] = {}
            for m in cd.members:
                if m.name in table:
                    raise DuplicateName(f"{name}.{m.name}", m.span)
                if isinstance(m, S.FieldDecl):
                    table[m.name] = self.declared[id(m)]
                else:
                    mid = self.new_var(m.name, "function", m.span)
                    self.declared[("fn", id(m))] = mid
                    table[m.name] = mid
            self.member_tables[vid] = table

    def resolved_members(self, class_var: int) -> dict[str, int]:
        """Member table including inherited members (own members win)."""
        chain = []
        seen = set()
        cur = next(cd for vid, cd in self.class_info.values() if vid == class_var)
        while cur is not None and cur.name not in seen:
            seen.add(cur.name)
            chain.append(self.class_info[cur.name][0])
            sup = cur.superclass
            cur = self.class_info[sup][1] if sup in self.class_info else None
        out: dict[str, int] = {}
        for vid in reversed(chain):
            out.update(self.member_tables[vid])
        return out

    # -- pass B
    def fresh(self, span: Span) -> int:
        self.fresh_count += 1
        vid = self.new_var(f"{self.fresh_prefix}{self.fresh_count}", "temp", span)
        self.order.append(vid)
        return vid

    def lower(self) -> IrModule:
        self.allocate_declared()
        self.collect_globals()
        decls = []
        top: list = []
        for d in self.ast.decls():
            if isinstance(d, S.ClassDecl):
                decls.append(self.lower_class(d))
            elif isinstance(d, S.FuncDecl):
                decls.append(self.lower_function(d, self.globals, this=None))
            else:
                out: list = []
                self.lower_stmt(d, out, _Scope(self.globals), this=None, ret=None, top_level=True)
                decls.extend(out)
        return self.renumber(decls)

    def lower_class(self, cd: S.ClassDecl) -> IrClass:
        vid = self.class_info[cd.name][0]
        self.order.append(vid)
        sup = None
        if cd.superclass is not None:
            if cd.superclass in self.class_info:
                sup = VarRef(self.class_info[cd.superclass][0])
            else:
                sup = LibRef(cd.superclass)
        members = [(m.name, self.member_tables[vid][m.name]) for m in cd.members]
        methods, inits = [], []
        for m in cd.members:
            if isinstance(m, S.FieldDecl):
                if m.init is not None:
                    scope = _Scope(self.globals)
                    atom = self.lower_expr(m.init, inits, scope, this=vid)
                    inits.append(Assign(self.declared[id(m)], atom, m.span))
            else:
                methods.append(self.lower_function(m, self.globals, this=vid))
        return IrClass(vid, cd.name, sup, members, methods, inits, cd.span, cd.is_interface)

    def lower_function(self, f: S.FuncDecl, parent: _Scope, this: Optional[int]) -> IrFunction:
        fid = self.declared[("fn", id(f))]
        self.order.append(fid)
        scope = _Scope(parent)
        params = []
        for p in f.params:
            if p.name in scope.names:
                raise DuplicateName(p.name, p.span)
            pid = self.declared[id(p)]
            scope.names[p.name] = pid
            params.append(pid)
        ret = self.declared[id(f)]
        body = None
        if f.body is not None:
            body = []
            for s in f.body:
                self.lower_stmt(s, body, scope, this, ret)
        return IrFunction(fid, f.name, params, ret, body, f.span)

    def lower_block(self, stmts, scope, this, ret) -> list:
        out: list = []
        inner = _Scope(scope)
        for s in stmts:
            self.lower_stmt(s, out, inner, this, ret)
        return out

    def lower_stmt(self, s, out: list, scope: _Scope, this, ret, top_level=False):
        if isinstance(s, S.VarDecl):
            vid = self.declared[id(s)]
            if not top_level:
                if s.name in scope.names:
                    raise DuplicateName(s.name, s.span)
            if isinstance(s.init, S.ATOMIC_EXPRS):
                atom = self.lower_expr(s.init, out, scope, this)
                out.append(Bind(vid, atom, s.span))
            else:
                flat = self.lower_flat(s.init, out, scope, this)
                out.append(Bind(vid, flat, s.span))
            if not top_level:
                scope.names[s.name] = vid
        elif isinstance(s, S.AssignStmt):
            if isinstance(s.target, S.Ident):
                target = self.resolve(s.target, scope, this)
                if not isinstance(target, VarRef):
                    raise UnsupportedConstruct(s.span.path, s.span, "assignment to library global")
            else:
                target = self.lower_expr(s.target, out, scope, this)
            value = self.lower_expr(s.value, out, scope, this)
            out.append(Assign(target.id, value, s.span))
        elif isinstance(s, S.ReturnStmt):
            if ret is None:
                raise UnsupportedConstruct(s.span.path, s.span, "return outside function")
            value = None if s.value is None else self.lower_expr(s.value, out, scope, this)
            out.append(Return(value, ret, s.span))
        elif isinstance(s, S.IfStmt):
            cond = self.lower_expr(s.cond, out, scope, this)
            then = self.lower_block(s.then, scope, this, ret)
            orelse = self.lower_block(s.orelse, scope, this, ret)
            out.append(If(cond, then, orelse, s.span))
        elif isinstance(s, S.WhileStmt):
            prelude: list = []
            cond = self.lower_expr(s.cond, prelude, scope, this)
            body = self.lower_block(s.body, scope, this, ret)
            out.append(While(prelude, cond, body, s.span))
        elif isinstance(s, S.ExprStmt):
            self.lower_expr(s.expr, out, scope, this)
        else:  # pragma: no cover - parser never produces other nodes
            raise TypeError(f"unexpected statement {type(s).__name__}")

    def resolve(self, ident: S.Ident, scope: _Scope, this) -> Atom:
        vid = scope.lookup(ident.name)
        if vid is None:
            return LibRef(ident.name if ident.name in library.LIBRARY_GLOBALS else library.UNKNOWN_GLOBAL)
        if vid in self.occ:
            self.occ[vid] += 1
        return VarRef(vid)

    def lower_expr(self, e, out: list, scope: _Scope, this) -> Atom:
        """Lower ``e`` to an atom, binding compound results to fresh variables."""
        if isinstance(e, S.Ident):
            return self.resolve(e, scope, this)
        if isinstance(e, S.This):
            if this is None:
                raise UnsupportedConstruct(e.span.path, e.span, "this outside class")
            return VarRef(this)
        if isinstance(e, S.NumLit):
            return Lit("number", e.value)
        if isinstance(e, S.StrLit):
            return Lit("string", e.value)
        if isinstance(e, S.BoolLit):
            return Lit("boolean", "true" if e.value else "false")
        flat = self.lower_flat(e, out, scope, this)
        t = self.fresh(e.span)
        out.append(Bind(t, flat, e.span))
        return VarRef(t)

    def lower_flat(self, e, out: list, scope: _Scope, this) -> Flat:
        if isinstance(e, S.Member):
            obj = self.lower_expr(e.obj, out, scope, this)
            if isinstance(e.obj, S.This) and this is not None:
                member = self.resolved_members(this).get(e.name)
                if member is not None and member in self.occ:
                    self.occ[member] += 1
            return Access(obj, e.name)
        if isinstance(e, S.CallExpr):
            fn = self.lower_expr(e.callee, out, scope, this)
            args = tuple(self.lower_expr(a, out, scope, this) for a in e.args)
            return Call(fn, args)
        if isinstance(e, S.NewExpr):
            if e.class_name in self.class_info:
                return New(VarRef(self.class_info[e.class_name][0]))
            return New(LibRef(e.class_name))
        if isinstance(e, S.ObjectLit):
            return Obj(tuple((k, self.lower_expr(v, out, scope, this)) for k, v in e.fields))
        if isinstance(e, S.Binary):
            left = self.lower_expr(e.left, out, scope, this)
            right = self.lower_expr(e.right, out, scope, this)
            return Op(e.op, (left, right))
        if isinstance(e, S.Unary):
            x = self.lower_expr(e.operand, out, scope, this)
            return Op(_OP_NAMES[e.op], (x,))
        raise TypeError(f"unexpected expression {type(e).__name__}")

    # -- final numbering
    def renumber(self, decls) -> IrModule:
        declared = [v.id for v in self.vars if v.role in ROLE_DECLARED]
        final = declared + self.order
        assert len(final) == len(self.vars), "every variable is declared or ordered exactly once"
        perm = {old: new for new, old in enumerate(final)}
        new_vars = [replace(self.vars[old], id=new) for new, old in enumerate(final)]
        decls = [_remap(d, perm) for d in decls]
        annotations = {v.id: v.annotation for v in new_vars if v.annotation is not None}
        occurrences = {perm[k]: c for k, c in self.occ.items()}
        return IrModule(self.ast.project_id, new_vars, decls, annotations,
                        dict(sorted(occurrences.items())), self.fresh_prefix)


def _pick_fresh_prefix(ast: S.SubsetAst) -> str:
    names = set()

    def visit(node):
        if isinstance(node, (S.Ident, S.Param, S.VarDecl, S.FieldDecl, S.FuncDecl, S.ClassDecl)):
            names.add(node.name)
        if isinstance(node, list):
            for x in node:
                visit(x)
        elif hasattr(node, "__dataclass_fields__"):
            for f in node.__dataclass_fields__:
                visit(getattr(node, f))
        elif isinstance(node, tuple):
            for x in node:
                visit(x)

    for f in ast.files:
        visit(f.decls)
    prefix = "v"
    while any(re.fullmatch(re.escape(prefix) + r"\d+", n) for n in names):
        prefix = "_" + prefix
    return prefix


def _remap(node, perm: dict[int, int]):
    if isinstance(node, VarRef):
        return VarRef(perm[node.id])
    if isinstance(node, (Lit, LibRef)) or node is None:
        return node
    if isinstance(node, Access):
        return Access(_remap(node.obj, perm), node.label)
    if isinstance(node, Call):
        return Call(_remap(node.fn, perm), tuple(_remap(a, perm) for a in node.args))
    if isinstance(node, Op):
        return Op(node.op, tuple(_remap(a, perm) for a in node.args))
    if isinstance(node, Obj):
        return Obj(tuple((k, _remap(v, perm)) for k, v in node.fields))
    if isinstance(node, New):
        return New(_remap(node.cls, perm))
    if isinstance(node, Bind):
        return Bind(perm[node.target], _remap(node.expr, perm), node.span)
    if isinstance(node, Assign):
        return Assign(perm[node.target], _remap(node.value, perm), node.span)
    if isinstance(node, Return):
        return Return(_remap(node.value, perm), perm[node.ret], node.span)
    if isinstance(node, If):
        return If(_remap(node.cond, perm), [_remap(s, perm) for s in node.then],
                  [_remap(s, perm) for s in node.orelse], node.span)
    if isinstance(node, While):
        return While([_remap(s, perm) for s in node.prelude], _remap(node.cond, perm),
                     [_remap(s, perm) for s in node.body], node.span)
    if isinstance(node, IrFunction):
        body = None if node.body is None else [_remap(s, perm) for s in node.body]
        return IrFunction(perm[node.var], node.name, [perm[p] for p in node.params],
                          perm[node.ret], body, node.span)
    if isinstance(node, IrClass):
        return IrClass(perm[node.var], node.name, _remap(node.superclass, perm),
                       [(k, perm[v]) for k, v in node.members],
                       [_remap(m, perm) for m in node.methods],
                       [_remap(s, perm) for s in node.inits], node.span, node.is_interface)
    raise TypeError(f"cannot remap {type(node).__name__}")


def lower_to_ir(ast: S.SubsetAst) -> IrModule:
    return _Lowerer(ast).lower()


def count_occurrences(ast: S.SubsetAst) -> dict[str, int]:
    """Occurrence count per declared source variable, keyed by ``name@path:line:col``.

    The declaration itself counts once; every resolved identifier use, and
    every ``this.member`` access for fields, adds one.
    """
    ir = lower_to_ir(ast)
    return {decl_key(v.name, v.span): ir.occurrences[v.id]
            for v in ir.vars if v.role in ROLE_DECLARED}


# --------------------------------------------------------------------------
# Printing

def _atom_text(a: Atom, ir: IrModule) -> str:
    if isinstance(a, VarRef):
        return ir.vars[a.id].name
    if isinstance(a, Lit):
        if a.kind == "string":
            return '"' + a.text.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return a.text
    return a.name


def _flat_text(e, ir: IrModule, this_id: Optional[int] = None) -> str:
    def at(a):
        if isinstance(a, VarRef) and a.id == this_id:
            return "this"
        return _atom_text(a, ir)

    if isinstance(e, Access):
        return f"{at(e.obj)}.{e.label}"
    if isinstance(e, Call):
        return f"{at(e.fn)}({', '.join(at(a) for a in e.args)})"
    if isinstance(e, Op):
        if len(e.args) == 1:
            return f"{'-' if e.op == 'neg' else e.op}{at(e.args[0])}"
        return f"{at(e.args[0])} {e.op} {at(e.args[1])}"
    if isinstance(e, Obj):
        return "{" + ", ".join(f"{k}: {at(v)}" for k, v in e.fields) + "}"
    if isinstance(e, New):
        return f"new {_atom_text(e.cls, ir)}()"
    return at(e)


def dump_ir(ir: IrModule) -> str:
    """Line-oriented dump, one binding per line, with type-variable ids."""
    lines: list[str] = []

    def tv(i: int) -> str:
        return f"t{i}"

    def ann(i: int) -> str:
        a = ir.annotations.get(i)
        return f" : {a}" if a else ""

    def stmts(ss, ind, this_id):
        pad = "  " * ind
        for s in ss:
            if isinstance(s, Bind):
                v = ir.vars[s.target]
                lines.append(f"{pad}let {v.name} {tv(v.id)}{ann(v.id)} = {_flat_text(s.expr, ir, this_id)}")
            elif isinstance(s, Assign):
                lines.append(f"{pad}{ir.vars[s.target].name} = {_flat_text(s.value, ir, this_id)}")
            elif isinstance(s, Return):
                val = "" if s.value is None else " " + _flat_text(s.value, ir, this_id)
                lines.append(f"{pad}return{val}")
            elif isinstance(s, If):
                lines.append(f"{pad}if {_flat_text(s.cond, ir, this_id)} {{")
                stmts(s.then, ind + 1, this_id)
                if s.orelse:
                    lines.append(f"{pad}}} else {{")
                    stmts(s.orelse, ind + 1, this_id)
                lines.append(f"{pad}}}")
            elif isinstance(s, While):
                stmts(s.prelude, ind, this_id)
                lines.append(f"{pad}while {_flat_text(s.cond, ir, this_id)} {{")
                stmts(s.body, ind + 1, this_id)
                lines.append(f"{pad}}}")

    def function(f: IrFunction, ind, kw, this_id):
        pad = "  " * ind
        params = ", ".join(f"{ir.vars[p].name} {tv(p)}{ann(p)}" for p in f.params)
        head = f"{pad}{kw} {f.name} {tv(f.var)} ({params}) -> {tv(f.ret)}{ann(f.ret)}"
        if f.body is None:
            lines.append(head)
            return
        lines.append(head + " {")
        stmts(f.body, ind + 1, this_id)
        lines.append(f"{pad}}}")

    for d in ir.decls:
        if isinstance(d, IrClass):
            kw = "interface" if d.is_interface else "class"
            ext = f" extends {_atom_text(d.superclass, ir)}" if d.superclass is not None else ""
            lines.append(f"{kw} {d.name} {tv(d.var)}{ext} {{")
            methods = {m.var: m for m in d.methods}
            for label, mid in d.members:
                if mid in methods:
                    function(methods[mid], 1, "method", d.var)
                else:
                    lines.append(f"  field {label} {tv(mid)}{ann(mid)}")
            stmts(d.inits, 1, d.var)
            lines.append("}")
        elif isinstance(d, IrFunction):
            function(d, 0, "function", None)
        else:
            stmts([d], 0, None)
    return "\n".join(lines) + ("\n" if lines else "")


def ir_to_source(ir: IrModule) -> str:
    """Render the IR back as subset source, keeping the flat binding structure."""
    lines: list[str] = []

    def ann(i: int) -> str:
        a = ir.annotations.get(i)
        return f": {a}" if a else ""

    def stmts(ss, ind, this_id):
        pad = "  " * ind
        for s in ss:
            if isinstance(s, Bind):
                v = ir.vars[s.target]
                lines.append(f"{pad}let {v.name}{ann(v.id)} = {_flat_text(s.expr, ir, this_id)};")
            elif isinstance(s, Assign):
                lines.append(f"{pad}{ir.vars[s.target].name} = {_flat_text(s.value, ir, this_id)};")
            elif isinstance(s, Return):
                val = "" if s.value is None else " " + _flat_text(s.value, ir, this_id)
                lines.append(f"{pad}return{val};")
            elif isinstance(s, If):
                lines.append(f"{pad}if ({_flat_text(s.cond, ir, this_id)}) {{")
                stmts(s.then, ind + 1, this_id)
                if s.orelse:
                    lines.append(f"{pad}}} else {{")
                    stmts(s.orelse, ind + 1, this_id)
                lines.append(f"{pad}}}")
            elif isinstance(s, While):
                stmts(s.prelude, ind, this_id)
                lines.append(f"{pad}while ({_flat_text(s.cond, ir, this_id)}) {{")
                stmts(s.body, ind + 1, this_id)
                lines.append(f"{pad}}}")

    def function(f: IrFunction, ind, kw, this_id):
        pad = "  " * ind
        params = ", ".join(f"{ir.vars[p].name}{ann(p)}" for p in f.params)
        head = f"{pad}{kw}{f.name}({params}){ann(f.ret)}"
        if f.body is None:
            lines.append(head + ";")
            return
        lines.append(head + " {")
        stmts(f.body, ind + 1, this_id)
        lines.append(f"{pad}}}")

    for d in ir.decls:
        if isinstance(d, IrClass):
            kw = "interface" if d.is_interface else "class"
            ext = f" extends {_atom_text(d.superclass, ir)}" if d.superclass is not None else ""
            lines.append(f"{kw} {d.name}{ext} {{")
            methods = {m.var: m for m in d.methods}
            for label, mid in d.members:
                if mid in methods:
                    function(methods[mid], 1, "", d.var)
                else:
                    lines.append(f"  {label}{ann(mid)};")
            if d.inits:
                raise ValueError("field initializers have no flat source form")
            lines.append("}")
        elif isinstance(d, IrFunction):
            function(d, 0, "function ", None)
        else:
            stmts([d], 0, None)
    return "\n".join(lines) + ("\n" if lines else "")
