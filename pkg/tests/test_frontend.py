import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_project
from typegnn.frontend import (
    SourceProject,
    SyntaxError,
    UnsupportedConstruct,
    count_occurrences,
    dump_ir,
    ir_to_source,
    lower_to_ir,
    parse_project,
)
from typegnn.frontend import syntax as S
from typegnn.frontend.ir import Bind, DuplicateName, decl_key


def project(text, path="a.ts"):
    return SourceProject("t", [(path, text)])


def lower(text):
    return lower_to_ir(parse_project(project(text)))


def test_network_ast_shape(network_source):
    ast = parse_project(network_source)
    cls, fn = list(ast.decls())
    assert isinstance(cls, S.ClassDecl) and cls.name == "MyNetwork"
    assert [m.name for m in cls.members] == ["name", "time", "forward"]
    assert isinstance(cls.members[2], S.FuncDecl)
    assert isinstance(fn, S.FuncDecl) and fn.name == "restore"


def test_empty_file_gives_empty_ast():
    ast = parse_project(project(""))
    assert list(ast.decls()) == []
    assert lower_to_ir(ast).vars == []


def test_syntax_error_points_at_paren():
    with pytest.raises(SyntaxError) as info:
        parse_project(project("let x = (;"))
    assert (info.value.path, info.value.line, info.value.col) == ("a.ts", 1, 9)


@pytest.mark.parametrize("text,construct", [
    ("import x from 'y';", "import"),
    ("let x: number | string = 1;", "union"),
    ("for (;;) {}", "for"),
])
def test_unsupported_constructs_are_reported(text, construct):
    with pytest.raises(UnsupportedConstruct) as info:
        parse_project(project(text))
    assert construct in info.value.construct_name


def test_duplicate_paths_rejected():
    with pytest.raises(ValueError):
        SourceProject("p", [("a.ts", ""), ("a.ts", "")])


def test_duplicate_top_level_names_across_files():
    src = SourceProject("p", [("a.ts", "function f(): number { return 1; }"),
                              ("b.ts", "function f(): number { return 2; }")])
    with pytest.raises(DuplicateName):
        lower_to_ir(parse_project(src))


def test_annotation_normalization():
    ir = lower("function f(a: Array<number>, b: string[], c: (x: number) => number, d: any): Map<string, number> "
               "{ return d; }")
    assert sorted(ir.annotations.values()) == ["Array", "Array", "Function", "Map"]


def test_forward_method_lowering(network_ir):
    text = dump_ir(network_ir)
    assert "let v1 t9 = x.concat" in text
    assert "let v2 t10 = v1(y)" in text
    assert "let v4 t12 = v3(2)" in text
    assert "return v4" in text


def test_flat_let_introduces_no_fresh_variable():
    ir = lower("function f(b: number): number { let a = b; return a; }")
    assert ir.fresh_vars == []


def test_declared_variables_numbered_first(network_ir):
    roles = [v.role for v in network_ir.vars]
    assert roles[:network_ir.num_declared].count("temp") == 0
    assert [v.name for v in network_ir.fresh_vars] == ["v1", "v2", "v3", "v4", "v5", "v6"]


def test_fresh_prefix_avoids_source_names():
    ir = lower("function f(v1: number): number { return v1 + 1; }")
    names = {v.name for v in ir.vars if v.role != "temp"}
    assert all(v.name not in names for v in ir.fresh_vars)
    assert ir.fresh_prefix != "v"


def test_network_occurrences(network_source):
    occ = count_occurrences(parse_project(network_source))
    assert occ["network@network.ts:10:18"] == 3
    assert occ["x@network.ts:5:11"] == 2
    assert occ["name@network.ts:2:3"] == 1


def test_unused_variable_counts_once():
    occ = count_occurrences(parse_project(project("function f(): number { let unused = 1; return 2; }")))
    assert occ["unused@a.ts:1:24"] == 1


def test_lowering_is_deterministic(network_source):
    a = dump_ir(lower_to_ir(parse_project(network_source)))
    b = dump_ir(lower_to_ir(parse_project(network_source)))
    assert a == b


def test_flat_program_round_trips(network_ir):
    printed = ir_to_source(network_ir)
    again = lower_to_ir(parse_project(project(printed)))
    assert ir_to_source(again) == printed


# -- oracles over random generated programs

COMPOUND = (S.Member, S.CallExpr, S.NewExpr, S.ObjectLit, S.Binary, S.Unary)


def _count_compound(e) -> int:
    if isinstance(e, S.Member):
        return 1 + _count_compound(e.obj)
    if isinstance(e, S.CallExpr):
        return 1 + _count_compound(e.callee) + sum(_count_compound(a) for a in e.args)
    if isinstance(e, S.ObjectLit):
        return 1 + sum(_count_compound(v) for _, v in e.fields)
    if isinstance(e, S.Binary):
        return 1 + _count_compound(e.left) + _count_compound(e.right)
    if isinstance(e, S.Unary):
        return 1 + _count_compound(e.operand)
    return 1 if isinstance(e, S.NewExpr) else 0


def _stmt_fresh(s) -> int:
    if isinstance(s, S.VarDecl):
        # the initializer's root binds straight to the declared variable
        return _count_compound(s.init) - (1 if isinstance(s.init, COMPOUND) else 0)
    if isinstance(s, S.AssignStmt):
        return _count_compound(s.target) + _count_compound(s.value)
    if isinstance(s, S.ReturnStmt):
        return 0 if s.value is None else _count_compound(s.value)
    if isinstance(s, S.IfStmt):
        return _count_compound(s.cond) + sum(map(_stmt_fresh, s.then + s.orelse))
    if isinstance(s, S.WhileStmt):
        return _count_compound(s.cond) + sum(map(_stmt_fresh, s.body))
    return _count_compound(s.expr)


def _ast_fresh(ast) -> int:
    n = 0
    for d in ast.decls():
        if isinstance(d, S.ClassDecl):
            for m in d.members:
                if isinstance(m, S.FuncDecl):
                    n += sum(map(_stmt_fresh, m.body or []))
                elif m.init is not None:
                    n += _count_compound(m.init)
        elif isinstance(d, S.FuncDecl):
            n += sum(map(_stmt_fresh, d.body or []))
        else:
            n += _stmt_fresh(d)
    return n


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_fresh_count_matches_compound_subexpressions(seed):
    ast = parse_project(small_project(seed))
    ir = lower_to_ir(ast)
    assert len(ir.fresh_vars) == _ast_fresh(ast)


def _walk_exprs(e):
    yield e
    for child in {S.Member: lambda: [e.obj], S.CallExpr: lambda: [e.callee, *e.args],
                  S.ObjectLit: lambda: [v for _, v in e.fields], S.Binary: lambda: [e.left, e.right],
                  S.Unary: lambda: [e.operand]}.get(type(e), lambda: [])():
        yield from _walk_exprs(child)


def _stmt_exprs(s):
    if isinstance(s, S.VarDecl):
        yield s.init
    elif isinstance(s, S.AssignStmt):
        yield s.target
        yield s.value
    elif isinstance(s, S.ReturnStmt):
        if s.value is not None:
            yield s.value
    elif isinstance(s, S.IfStmt):
        yield s.cond
        for t in s.then + s.orelse:
            yield from _stmt_exprs(t)
    elif isinstance(s, S.WhileStmt):
        yield s.cond
        for t in s.body:
            yield from _stmt_exprs(t)
    else:
        yield s.expr


def _occurrence_oracle(ast):
    """Independent count for programs without shadowing (the generator never shadows)."""
    classes = {d.name: d for d in ast.decls() if isinstance(d, S.ClassDecl)}
    counts = {}

    def fields_of(cname):
        c = classes[cname]
        inherited = fields_of(c.superclass) if c.superclass in classes else {}
        own = {m.name: decl_key(m.name, m.span) for m in c.members if isinstance(m, S.FieldDecl)}
        return {**inherited, **own}

    def function(f, cname):
        counts[decl_key(f.name, f.span)] = 1  # return slot
        local = {}
        for p in f.params:
            local[p.name] = decl_key(p.name, p.span)
            counts[local[p.name]] = 1
        for s in f.body or []:
            for e in _stmt_exprs(s):
                for x in _walk_exprs(e):
                    if isinstance(x, S.Ident) and x.name in local:
                        counts[local[x.name]] += 1
                    elif isinstance(x, S.Member) and isinstance(x.obj, S.This) and x.name in fields_of(cname):
                        counts[fields_of(cname)[x.name]] += 1
            if isinstance(s, S.VarDecl):
                local[s.name] = decl_key(s.name, s.span)
                counts[local[s.name]] = 1

    for d in ast.decls():
        if isinstance(d, S.ClassDecl):
            for m in d.members:
                if isinstance(m, S.FieldDecl):
                    counts.setdefault(decl_key(m.name, m.span), 1)
        elif isinstance(d, S.FuncDecl):
            function(d, None)
    for d in ast.decls():
        if isinstance(d, S.ClassDecl):
            for m in d.members:
                if isinstance(m, S.FuncDecl):
                    function(m, d.name)
    return counts


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_occurrences_match_ast_walk(seed):
    ast = parse_project(small_project(seed))
    assert count_occurrences(ast) == _occurrence_oracle(ast)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_every_annotation_maps_to_one_variable(seed):
    src = small_project(seed)
    ir = lower_to_ir(parse_project(src))
    n_annotated = sum(text.count(": ") for _, text in src.files)
    assert len(ir.annotations) == n_annotated
    assert all(ir.vars[i].role != "temp" for i in ir.annotations)


def test_let_binding_of_call_result():
    ir = lower("function g(): number { return 1; }\nfunction f(): number { let a = g(); return a; }")
    f = ir.functions()[1]
    first = f.body[0]
    assert isinstance(first, Bind) and ir.vars[first.target].name == "a"
