"""Type dependency graph: one node per type variable, labeled hyperedges between them."""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Union

from typegnn import library
from typegnn.frontend import ir as I

GRAPH_FORMAT_VERSION = 1

FIXED, NARY, NPAIRS = "Fixed", "NAry", "NPairs"

EDGE_CATEGORY = {
    "Bool": FIXED,
    "Subtype": FIXED,
    "Assign": FIXED,
    "Function": NARY,
    "Call": NARY,
    "Object": NARY,
    "Access": FIXED,
    "Name": FIXED,
    "NameSimilar": FIXED,
    "Usage": NPAIRS,
}
FIXED_ARITY = {"Bool": 1, "Subtype": 2, "Assign": 2, "Access": 2, "Name": 1, "NameSimilar": 2}
LOGICAL_KINDS = ("Bool", "Subtype", "Assign", "Function", "Call", "Object", "Access")
CONTEXTUAL_KINDS = ("Name", "NameSimilar", "Usage")
EDGE_KINDS = LOGICAL_KINDS + CONTEXTUAL_KINDS

# Fixed kinds whose identifier label is embedded as an extra argument.
LABELED_FIXED = ("Access", "Name")

LITERAL_KINDS = ("number", "string", "boolean")
OPERATORS = ("+", "-", "*", "/", "<", "<=", ">", ">=", "==", "!=", "===", "!==", "&&", "||", "!", "neg")
BOOL_OPERAND_OPS = ("!", "&&", "||")

RETURN_SLOT = 0  # position label of the return slot (Function) / callee slot (Call)


def _constant_vocabulary() -> tuple[str, ...]:
    kinds = list(LITERAL_KINDS)
    kinds += [f"op:{o}" for o in OPERATORS]
    names = sorted(set(library.LIBRARY_GLOBALS) | set(library.LIBRARY_CLASSES) | {library.UNKNOWN_GLOBAL})
    kinds += [f"lib:{n}" for n in names]
    for cls in sorted(library.LIBRARY_CLASSES):
        kinds += [f"lib:{cls}.{m}" for m in library.LIBRARY_CLASSES[cls]]
    return tuple(kinds)


CONSTANT_KINDS = _constant_vocabulary()
_CONSTANT_SET = frozenset(CONSTANT_KINDS)


def tokenize_identifier(name: str) -> list[str]:
    """Split on underscores and camel case; lowercase; digits stay on their token.

    >>> tokenize_identifier("MyNetwork")
    ['my', 'network']
    >>> tokenize_identifier("read_number2")
    ['read', 'number2']
    """
    tokens = []
    for part in re.split(r"[^A-Za-z0-9]+", name):
        if not part:
            continue
        part = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", part)
        part = re.sub(r"(?<=[A-Z])(?=[A-Z][a-z])", "_", part)
        tokens.extend(t.lower() for t in part.split("_") if t)
    return tokens


@dataclass
class TypeNode:
    id: int
    kind: str  # "variable" | "constant"
    const_type: Optional[str] = None
    tokens: tuple[str, ...] = ()
    name: Optional[str] = None
    role: str = "constant"
    span: Optional[dict] = None

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"


Label = Union[str, int]


@dataclass(frozen=True)
class Hyperedge:
    kind: str
    args: tuple[int, ...]
    labels: tuple[Label, ...] = ()

    @property
    def category(self) -> str:
        return EDGE_CATEGORY[self.kind]

    def usage_pairs(self) -> list[tuple[int, int]]:
        a = self.args
        return [(a[i], a[i + 1]) for i in range(2, len(a), 2)]


class GraphError(ValueError):
    pass


@dataclass
class TypeDependencyGraph:
    nodes: list[TypeNode] = field(default_factory=list)
    edges: list[Hyperedge] = field(default_factory=list)
    user_types: dict[str, int] = field(default_factory=dict)
    annotations: dict[int, str] = field(default_factory=dict)
    occurrences: dict[int, int] = field(default_factory=dict)
    project_id: str = ""

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def edges_of(self, kind: str) -> list[Hyperedge]:
        return [e for e in self.edges if e.kind == kind]

    def edge_counts(self) -> dict[str, int]:
        counts = {k: 0 for k in EDGE_KINDS}
        for e in self.edges:
            counts[e.kind] += 1
        return counts

    def validate(self):
        for i, n in enumerate(self.nodes):
            if n.id != i:
                raise GraphError(f"node ids must be dense, found {n.id} at {i}")
            if n.is_constant and n.const_type not in _CONSTANT_SET:
                raise GraphError(f"unknown constant kind {n.const_type!r}")
        for e in self.edges:
            check_edge(e)
            for a in e.args:
                if not 0 <= a < len(self.nodes):
                    raise GraphError(f"edge {e.kind} references missing node {a}")
        for name, nid in self.user_types.items():
            if self.nodes[nid].is_constant:
                raise GraphError(f"user type {name} points at a constant node")
        for nid in self.annotations:
            if self.nodes[nid].is_constant:
                raise GraphError(f"annotation on constant node {nid}")

    def without_kinds(self, kinds) -> "TypeDependencyGraph":
        kinds = set(kinds)
        return TypeDependencyGraph(self.nodes, [e for e in self.edges if e.kind not in kinds],
                                   self.user_types, self.annotations, self.occurrences, self.project_id)

    # -- serialization
    def to_json(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = {"id": n.id, "kind": n.kind}
            if n.is_constant:
                d["const_type"] = n.const_type
            d["tokens"] = list(n.tokens)
            d["name"] = n.name
            d["role"] = n.role
            d["span"] = n.span
            nodes.append(d)
        return {
            "version": GRAPH_FORMAT_VERSION,
            "project_id": self.project_id,
            "nodes": nodes,
            "edges": [{"kind": e.kind, "category": e.category, "args": list(e.args),
                       "labels": list(e.labels)} for e in self.edges],
            "user_types": dict(self.user_types),
            "annotations": {str(k): v for k, v in sorted(self.annotations.items())},
            "occurrences": {str(k): v for k, v in sorted(self.occurrences.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, d: dict) -> "TypeDependencyGraph":
        if d.get("version") != GRAPH_FORMAT_VERSION:
            raise GraphError(f"unsupported graph format version {d.get('version')!r}")
        nodes = [TypeNode(n["id"], n["kind"], n.get("const_type"), tuple(n["tokens"]),
                          n.get("name"), n.get("role", "constant"), n.get("span")) for n in d["nodes"]]
        edges = []
        for e in d["edges"]:
            edge = Hyperedge(e["kind"], tuple(e["args"]), tuple(e["labels"]))
            if e["category"] != edge.category:
                raise GraphError(f"category mismatch for {e['kind']}")
            edges.append(edge)
        g = cls(nodes, edges, dict(d["user_types"]),
                {int(k): v for k, v in d["annotations"].items()},
                {int(k): v for k, v in d.get("occurrences", {}).items()},
                d.get("project_id", ""))
        g.validate()
        return g

    @classmethod
    def loads(cls, text: str) -> "TypeDependencyGraph":
        return cls.from_json(json.loads(text))


def check_edge(e: Hyperedge):
    if e.kind not in EDGE_CATEGORY:
        raise GraphError(f"unknown edge kind {e.kind!r}")
    n = len(e.args)
    if e.kind in FIXED_ARITY:
        if n != FIXED_ARITY[e.kind]:
            raise GraphError(f"{e.kind} expects {FIXED_ARITY[e.kind]} args, got {n}")
        if e.kind in LABELED_FIXED and len(e.labels) != 1:
            raise GraphError(f"{e.kind} needs exactly one identifier label")
    elif e.kind == "Usage":
        if n < 4 or n % 2:
            raise GraphError("Usage needs a head pair and at least one candidate pair")
    else:
        minimum = 1 if e.kind == "Object" else 2
        if n < minimum or len(e.labels) != n - 1:
            raise GraphError(f"{e.kind} arity/label mismatch")


# --------------------------------------------------------------------------
# Extraction

class _Extractor:
    def __init__(self, ir: I.IrModule):
        self.ir = ir
        self.nodes: list[TypeNode] = []
        self.edges: list[Hyperedge] = []
        self.shared_constants: dict[str, int] = {}
        for v in ir.vars:
            tokens = tuple(tokenize_identifier(v.name)) if v.named else ()
            self.nodes.append(TypeNode(v.id, "variable", None, tokens, v.name, v.role, v.span.to_json()))

    def constant(self, kind: str) -> int:
        if kind not in _CONSTANT_SET:
            raise GraphError(f"unknown constant kind {kind!r}")
        nid = len(self.nodes)
        self.nodes.append(TypeNode(nid, "constant", kind))
        return nid

    def shared(self, kind: str) -> int:
        if kind not in self.shared_constants:
            self.shared_constants[kind] = self.constant(kind)
        return self.shared_constants[kind]

    def lib_kind(self, name: str) -> str:
        kind = f"lib:{name}"
        return kind if kind in _CONSTANT_SET else f"lib:{library.UNKNOWN_GLOBAL}"

    def atom(self, a: I.Atom) -> int:
        if isinstance(a, I.VarRef):
            return a.id
        if isinstance(a, I.Lit):
            return self.constant(a.kind)
        return self.shared(self.lib_kind(a.name))

    def edge(self, kind: str, args, labels=()):
        e = Hyperedge(kind, tuple(args), tuple(labels))
        check_edge(e)
        self.edges.append(e)

    def run(self):
        for d in self.ir.decls:
            if isinstance(d, I.IrClass):
                self.klass(d)
            elif isinstance(d, I.IrFunction):
                self.function(d)
            else:
                self.stmts([d])

    def klass(self, c: I.IrClass):
        self.edge("Object", [c.var] + [m for _, m in c.members], [l for l, _ in c.members])
        if c.superclass is not None:
            self.edge("Subtype", [c.var, self.atom(c.superclass)])
        for m in c.methods:
            self.function(m)
        self.stmts(c.inits)

    def function(self, f: I.IrFunction):
        positions = list(range(1, len(f.params) + 1)) + [RETURN_SLOT]
        self.edge("Function", [f.var] + f.params + [f.ret], positions)
        if f.body is not None:
            self.stmts(f.body)

    def stmts(self, ss):
        for s in ss:
            if isinstance(s, I.Bind):
                self.bind(s.target, s.expr)
            elif isinstance(s, I.Assign):
                self.edge("Assign", [s.target, self.atom(s.value)])
            elif isinstance(s, I.Return):
                if s.value is not None:
                    self.edge("Subtype", [self.atom(s.value), s.ret])
            elif isinstance(s, I.If):
                self.edge("Bool", [self.atom(s.cond)])
                self.stmts(s.then)
                self.stmts(s.orelse)
            elif isinstance(s, I.While):
                self.stmts(s.prelude)
                self.edge("Bool", [self.atom(s.cond)])
                self.stmts(s.body)

    def bind(self, t: int, e):
        if isinstance(e, (I.VarRef, I.Lit, I.LibRef)):
            self.edge("Assign", [t, self.atom(e)])
        elif isinstance(e, I.Access):
            self.edge("Access", [t, self.atom(e.obj)], [e.label])
        elif isinstance(e, I.Call):
            fn = self.atom(e.fn)
            args = [self.atom(a) for a in e.args]
            self.call(t, fn, args)
        elif isinstance(e, I.Op):
            op = self.constant(f"op:{e.op}")
            args = [self.atom(a) for a in e.args]
            self.call(t, op, args)
            if e.op in BOOL_OPERAND_OPS:
                for a in args:
                    self.edge("Bool", [a])
        elif isinstance(e, I.Obj):
            self.edge("Object", [t] + [self.atom(v) for _, v in e.fields], [k for k, _ in e.fields])
        elif isinstance(e, I.New):
            self.edge("Assign", [t, self.atom(e.cls)])
        else:  # pragma: no cover
            raise TypeError(type(e).__name__)

    def call(self, t, fn, args):
        positions = [RETURN_SLOT] + list(range(1, len(args) + 1))
        self.edge("Call", [t, fn] + args, positions)

    def name_edges(self):
        for n in self.nodes:
            if not n.is_constant and n.tokens:
                self.edge("Name", [n.id], [n.name])


def user_type_table(ir: I.IrModule) -> dict[str, int]:
    return {c.name: c.var for c in ir.classes()}


def class_member_tables(ir: I.IrModule) -> dict[int, dict[str, int]]:
    """Resolved member table per user class node, inherited members included."""
    own = {c.var: dict(c.members) for c in ir.classes()}
    parent = {c.var: c.superclass.id for c in ir.classes() if isinstance(c.superclass, I.VarRef)}
    out = {}
    for cid in own:
        chain, cur, seen = [], cid, set()
        while cur is not None and cur not in seen and cur in own:
            seen.add(cur)
            chain.append(cur)
            cur = parent.get(cur)
        table: dict[str, int] = {}
        for c in reversed(chain):
            table.update(own[c])
        out[cid] = table
    return out


def _accesses(ir: I.IrModule):
    """Every ``y = x.l`` binding in program order as (x atom, y, l)."""
    def walk(ss):
        for s in ss:
            if isinstance(s, I.Bind) and isinstance(s.expr, I.Access):
                yield s.expr.obj, s.target, s.expr.label
            elif isinstance(s, I.If):
                yield from walk(s.then)
                yield from walk(s.orelse)
            elif isinstance(s, I.While):
                yield from walk(s.prelude)
                yield from walk(s.body)

    for d in ir.decls:
        if isinstance(d, I.IrClass):
            for m in d.methods:
                yield from walk(m.body or [])
            yield from walk(d.inits)
        elif isinstance(d, I.IrFunction):
            yield from walk(d.body or [])
        else:
            yield from walk([d])


def extract_graph(ir: I.IrModule, name_similar: bool = True, usage: bool = True) -> TypeDependencyGraph:
    """Build the full graph: logical edges, Name edges, then NameSimilar and Usage."""
    ex = _Extractor(ir)
    ex.run()
    ex.name_edges()
    g = TypeDependencyGraph(ex.nodes, ex.edges, user_type_table(ir), dict(ir.annotations),
                            dict(ir.occurrences), ir.project_id)
    if name_similar:
        g = add_name_similar_edges(g)
    if usage:
        g = add_usage_edges(g, ir)
    g.validate()
    return g


def _name_similar_eligible(n: TypeNode) -> bool:
    return (not n.is_constant) and bool(n.tokens) and n.role in ("field", "param", "local", "class", "function")


def add_name_similar_edges(g: TypeDependencyGraph) -> TypeDependencyGraph:
    """Connect named variable nodes whose token sets intersect.

    Pairs of two function nodes are skipped: at least one side must be a
    declared variable or a user-type node.
    """
    index: dict[str, list[int]] = defaultdict(list)
    for n in g.nodes:
        if _name_similar_eligible(n):
            for t in set(n.tokens):
                index[t].append(n.id)
    pairs = set()
    for ids in index.values():
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if g.nodes[a].role == "function" and g.nodes[b].role == "function":
                    continue
                pairs.add((min(a, b), max(a, b)))
    edges = list(g.edges) + [Hyperedge("NameSimilar", p) for p in sorted(pairs)]
    return TypeDependencyGraph(g.nodes, edges, g.user_types, g.annotations, g.occurrences, g.project_id)


def add_usage_edges(g: TypeDependencyGraph, ir: I.IrModule) -> TypeDependencyGraph:
    """One Usage edge per member access whose label some class defines."""
    nodes = list(g.nodes)
    shared = {n.const_type: n.id for n in nodes if n.is_constant and n.const_type.startswith("lib:")}

    def lib_node(kind):
        if kind not in shared:
            shared[kind] = len(nodes)
            nodes.append(TypeNode(len(nodes), "constant", kind))
        return shared[kind]

    tables = class_member_tables(ir)
    edges = list(g.edges)
    for obj, y, label in _accesses(ir):
        if isinstance(obj, I.VarRef):
            x = obj.id
        elif isinstance(obj, I.LibRef):
            kind = f"lib:{obj.name}"
            x = lib_node(kind if kind in _CONSTANT_SET else f"lib:{library.UNKNOWN_GLOBAL}")
        else:
            # literal receivers got their own constant node in the Access edge
            x = next(e.args[1] for e in g.edges if e.kind == "Access" and e.args[0] == y)
        pairs = []
        for cid in sorted(tables):
            if label in tables[cid]:
                pairs.append((cid, tables[cid][label]))
        for cls in library.classes_with_member(label):
            pairs.append((lib_node(f"lib:{cls}"), lib_node(f"lib:{cls}.{label}")))
        if pairs:
            args = [x, y] + [v for p in pairs for v in p]
            edges.append(Hyperedge("Usage", tuple(args), (label,)))
    return TypeDependencyGraph(nodes, edges, g.user_types, g.annotations, g.occurrences, g.project_id)


def build_graph(src, **kw) -> TypeDependencyGraph:
    """Source project to graph in one call."""
    from typegnn.frontend import lower_to_ir, parse_project
    return extract_graph(lower_to_ir(parse_project(src)), **kw)
