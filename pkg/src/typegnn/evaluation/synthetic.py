"""Seeded generator of small, fully annotated TypeScript-subset projects.

Each project declares a handful of classes and top-level functions whose
bodies are produced by type-directed expression generation, so every
annotation is consistent with the code. Variable names carry the tokens of
their type with probability ``name_correlation`` and a generic name
otherwise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from typegnn.frontend import SourceProject

PREFIXES = ("Fast", "Simple", "Local", "Remote", "Base", "Main", "Smart", "Shared", "Deep", "Cached",
            "Async", "Linear", "Sparse", "Global", "Static", "Mobile")
NOUNS = ("Network", "Layer", "Buffer", "Record", "Parser", "Client", "Server", "Node", "Tree", "Graph",
         "Queue", "Cache", "Model", "Tensor", "Stream", "Config", "Logger", "Engine", "Vector", "Matrix",
         "Store", "Session", "Request", "Response", "Token", "Router", "Widget", "Canvas", "Player",
         "Account", "Invoice", "Sensor", "Camera", "Printer", "Ticket", "Order")

LIB_POOL = ("number", "string", "boolean", "Date", "Array", "Map", "Error")

# Names that hint at a library type without sharing tokens with its name.
SEMANTIC_NAMES = {
    "number": ("count", "total", "size", "index", "width", "height", "offset", "amount", "score", "limit",
               "depth", "rate", "weight", "capacity"),
    "string": ("label", "title", "text", "message", "path", "key", "url", "prefix", "caption", "slug",
               "description", "host"),
    "boolean": ("enabled", "visible", "done", "active", "valid", "ready", "dirty", "locked", "hidden",
                "verbose"),
    "Date": ("created", "updated", "deadline", "expires", "birthday", "since", "until", "moment"),
    "Array": ("items", "values", "entries", "children", "elements", "rows", "parts", "members"),
    "Map": ("lookup", "registry", "table", "mapping", "dict", "catalog", "directory"),
    "Error": ("failure", "fault", "problem", "exception", "err", "cause"),
}
QUALIFIERS = ("max", "min", "first", "last", "next", "prev", "new", "old", "current", "default", "base",
              "initial")
GENERIC_NAMES = ("value", "data", "tmp", "arg", "obj", "thing", "input", "result", "other", "target",
                 "source", "item", "elem", "entry", "ref", "handle", "payload", "subject", "aux", "state")
VERBS = ("update", "reset", "compute", "load", "save", "render", "process", "validate", "build", "merge",
         "apply", "refresh", "find", "make", "check", "handle", "resolve", "pick")
USER_QUALIFIERS = ("my", "the", "other", "current", "next", "parent", "default", "main")


@dataclass
class SyntheticSpec:
    train: int = 60
    val: int = 10
    test: int = 10
    classes_per_project: tuple[int, int] = (4, 8)
    fields_per_class: tuple[int, int] = (2, 4)
    methods_per_class: tuple[int, int] = (1, 3)
    functions_per_project: tuple[int, int] = (3, 6)
    statements_per_body: tuple[int, int] = (1, 4)
    name_correlation: float = 0.7
    user_type_rate: float = 0.4
    inherit_rate: float = 0.2
    lib_pool: tuple[str, ...] = LIB_POOL

    def validate(self):
        if not 0.0 <= self.name_correlation <= 1.0:
            raise ValueError("name_correlation must be in [0, 1]")
        for lo, hi in (self.classes_per_project, self.fields_per_class, self.methods_per_class,
                       self.functions_per_project, self.statements_per_body):
            if lo < 0 or hi < lo:
                raise ValueError("ranges must satisfy 0 <= lo <= hi")
        if self.classes_per_project[0] < 1:
            raise ValueError("every project needs at least one class")
        unknown = set(self.lib_pool) - set(LIB_POOL)
        if unknown:
            raise ValueError(f"library pool entries without generators: {sorted(unknown)}")


@dataclass
class _Method:
    name: str
    params: list[tuple[str, str]]
    ret: str


@dataclass
class _Class:
    name: str
    fields: list[tuple[str, str]] = field(default_factory=list)
    methods: list[_Method] = field(default_factory=list)
    parent: Optional["_Class"] = None

    def all_fields(self):
        inherited = self.parent.all_fields() if self.parent else []
        return inherited + self.fields

    def all_methods(self):
        inherited = self.parent.all_methods() if self.parent else []
        return inherited + self.methods


def _camel(parts):
    return parts[0] + "".join(p[:1].upper() + p[1:] for p in parts[1:])


class _ProjectGen:
    def __init__(self, spec: SyntheticSpec, rng: random.Random):
        self.spec, self.rng = spec, rng
        self.classes: list[_Class] = []
        self.functions: list[_Method] = []

    # -- naming
    def type_name_choice(self, ty: str, taken: set, qualify: bool = True) -> str:
        """A fresh identifier for a variable of type ``ty``."""
        r = self.rng
        for _ in range(50):
            if r.random() < self.spec.name_correlation:
                if ty in SEMANTIC_NAMES:
                    base = r.choice(SEMANTIC_NAMES[ty])
                    name = _camel([r.choice(QUALIFIERS), base]) if qualify and r.random() < 0.3 else base
                else:
                    words = _split_class(ty)
                    roll = r.random()
                    if roll < 0.5:
                        name = words[-1].lower()
                    elif roll < 0.8:
                        name = _camel([w.lower() for w in words])
                    else:
                        name = _camel([r.choice(USER_QUALIFIERS), words[-1].lower()])
            else:
                name = r.choice(GENERIC_NAMES)
                if r.random() < 0.3:
                    name = _camel([name, r.choice("ABCDXYZ").lower()])
            if name not in taken:
                taken.add(name)
                return name
        name = f"{name}{len(taken)}"
        taken.add(name)
        return name

    def pick_type(self, user_ok: bool = True) -> str:
        r = self.rng
        if user_ok and self.classes and r.random() < self.spec.user_type_rate:
            return r.choice(self.classes).name
        return r.choice(self.spec.lib_pool)

    # -- declarations
    def declare(self):
        r, s = self.rng, self.spec
        n_classes = r.randint(*s.classes_per_project)
        names = set()
        while len(names) < n_classes:
            names.add(r.choice(PREFIXES) + r.choice(NOUNS))
        ordered = sorted(names)
        r.shuffle(ordered)
        self.classes = [_Class(cname) for cname in ordered]
        for c in self.classes[1:]:
            if r.random() < s.inherit_rate:
                c.parent = r.choice(self.classes[:self.classes.index(c)])
        for c in self.classes:
            taken = {m for m, _ in (c.parent.all_fields() if c.parent else [])}
            taken |= {m.name for m in (c.parent.all_methods() if c.parent else [])}
            for _ in range(r.randint(*s.fields_per_class)):
                ty = self.pick_type()
                c.fields.append((self.type_name_choice(ty, taken, qualify=False), ty))
            for _ in range(r.randint(*s.methods_per_class)):
                c.methods.append(self.make_signature(taken))
        taken = set()
        for _ in range(r.randint(*s.functions_per_project)):
            self.functions.append(self.make_signature(taken))

    def make_signature(self, taken: set) -> _Method:
        r = self.rng
        ret = self.pick_type()
        for _ in range(50):
            if r.random() < self.spec.name_correlation:
                obj = _split_class(ret)[-1] if ret not in SEMANTIC_NAMES else r.choice(SEMANTIC_NAMES[ret])
                name = _camel([r.choice(VERBS), obj.lower()])
            else:
                name = r.choice(VERBS)
            if name not in taken:
                break
        else:
            name = f"{name}{len(taken)}"
        taken.add(name)
        ptaken: set = set()
        params = []
        for _ in range(r.randint(0, 3)):
            ty = self.pick_type()
            params.append((self.type_name_choice(ty, ptaken), ty))
        return _Method(name, params, ret)

    # -- expressions
    def expr(self, ty: str, env: list, cls: Optional[_Class], depth: int = 0) -> str:
        r = self.rng
        options = []
        for name, t in env:
            if t == ty:
                options.append((3.0, lambda name=name: name))
        if cls is not None:
            for f, t in cls.all_fields():
                if t == ty:
                    options.append((2.0, lambda f=f: f"this.{f}"))
        if depth < 2:
            for name, t in env + ([("this", cls.name)] if cls is not None else []):
                c = self.class_named(t)
                if c is None:
                    continue
                for f, ft in c.all_fields():
                    if ft == ty and name != "this":
                        options.append((1.5, lambda name=name, f=f: f"{name}.{f}"))
                for m in c.all_methods():
                    if m.ret == ty:
                        options.append((1.0, lambda name=name, m=m: f"{name}.{m.name}({self.args(m, env, cls, depth)})"))
            for fn in self.functions:
                if fn.ret == ty:
                    options.append((1.0, lambda fn=fn: f"{fn.name}({self.args(fn, env, cls, depth)})"))
            for w, gen in self.library_exprs(ty, env, cls, depth):
                options.append((w, gen))
        options.append((1.0, lambda: self.literal(ty)))
        total = sum(w for w, _ in options)
        x = r.random() * total
        for w, gen in options:
            x -= w
            if x <= 0:
                return gen()
        return options[-1][1]()

    def args(self, m: _Method, env, cls, depth) -> str:
        return ", ".join(self.expr(t, env, cls, depth + 1) for _, t in m.params)

    def literal(self, ty: str) -> str:
        r = self.rng
        if ty == "number":
            return str(r.randint(0, 99))
        if ty == "string":
            return '"' + r.choice(("a", "id", "ok", "x.txt", "name", "data")) + '"'
        if ty == "boolean":
            return r.choice(("true", "false"))
        return f"new {ty}()"

    def library_exprs(self, ty, env, cls, depth):
        sub = lambda t: self.expr(t, env, cls, depth + 1)  # noqa: E731
        if ty == "number":
            return [(1.0, lambda: f"{sub('number')} + {sub('number')}"),
                    (0.7, lambda: f"{sub('string')}.length"),
                    (0.4, lambda: f"{sub('Array')}.length"),
                    (0.4, lambda: f"{sub('Date')}.getTime()"),
                    (0.3, lambda: f"{sub('string')}.indexOf({sub('string')})"),
                    (0.3, lambda: f'readNumber({sub("string")})')]
        if ty == "string":
            return [(0.6, lambda: f"{sub('string')}.concat({sub('string')})"),
                    (0.5, lambda: f"{sub('string')}.trim()"),
                    (0.5, lambda: f"{sub('number')}.toFixed(2)"),
                    (0.3, lambda: f"{sub('Date')}.toISOString()"),
                    (0.3, lambda: f"{sub('Array')}.join({sub('string')})"),
                    (0.3, lambda: f"{sub('Error')}.message"),
                    (0.3, lambda: f'readString({sub("string")})')]
        if ty == "boolean":
            return [(0.8, lambda: f"{sub('number')} < {sub('number')}"),
                    (0.5, lambda: f"!{sub('boolean')}"),
                    (0.5, lambda: f"{sub('boolean')} && {sub('boolean')}"),
                    (0.4, lambda: f"{sub('string')}.startsWith({sub('string')})"),
                    (0.4, lambda: f"{sub('Map')}.has({sub('string')})"),
                    (0.3, lambda: f"{sub('Array')}.includes({sub('number')})")]
        if ty == "Array":
            return [(0.6, lambda: f"{sub('string')}.split({sub('string')})"),
                    (0.5, lambda: f"{sub('Array')}.concat({sub('Array')})"),
                    (0.4, lambda: f"{sub('Array')}.slice(0)"),
                    (0.3, lambda: f"{sub('Array')}.reverse()")]
        return []

    def class_named(self, name) -> Optional[_Class]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    # -- statements
    def body(self, env: list, cls: Optional[_Class], ret: str, indent: str, taken: set) -> list[str]:
        r = self.rng
        lines = []
        env = list(env)
        for _ in range(r.randint(*self.spec.statements_per_body)):
            roll = r.random()
            targets = self.assign_targets(env, cls)
            callables = self.call_targets(env, cls)
            if roll < 0.45 or not (targets or callables):
                ty = self.pick_type()
                name = self.type_name_choice(ty, taken)
                lines.append(f"{indent}let {name}: {_annot(ty)} = {self.expr(ty, env, cls)};")
                env.append((name, ty))
            elif roll < 0.7 and targets:
                lhs, ty = r.choice(targets)
                lines.append(f"{indent}{lhs} = {self.expr(ty, env, cls)};")
            elif roll < 0.85 and callables:
                recv, m = r.choice(callables)
                lines.append(f"{indent}{recv}.{m.name}({self.args(m, env, cls, 0)});")
            else:
                kw = "if" if r.random() < 0.8 else "while"
                lhs, ty = r.choice(targets) if targets else (None, None)
                inner = f"{lhs} = {self.expr(ty, env, cls)};" if lhs else "return " + self.expr(ret, env, cls) + ";"
                lines.append(f"{indent}{kw} ({self.expr('boolean', env, cls)}) {{")
                lines.append(f"{indent}  {inner}")
                lines.append(f"{indent}}}")
        lines.append(f"{indent}return {self.expr(ret, env, cls)};")
        return lines

    def assign_targets(self, env, cls):
        out = []
        if cls is not None:
            out += [(f"this.{f}", t) for f, t in cls.all_fields()]
        for name, t in env:
            c = self.class_named(t)
            if c is not None:
                out += [(f"{name}.{f}", ft) for f, ft in c.all_fields()]
        return out

    def call_targets(self, env, cls):
        out = []
        for name, t in env:
            c = self.class_named(t)
            if c is not None:
                out += [(name, m) for m in c.all_methods()]
        return out

    # -- rendering
    def render(self) -> dict[str, str]:
        model_lines = []
        for c in self.classes:
            ext = f" extends {c.parent.name}" if c.parent else ""
            model_lines.append(f"class {c.name}{ext} {{")
            for f, t in c.fields:
                model_lines.append(f"  {f}: {_annot(t)};")
            for m in c.methods:
                model_lines.append("")
                model_lines += self.render_function(m, c, "  ")
            model_lines.append("}")
            model_lines.append("")
        main_lines = []
        for fn in self.functions:
            main_lines += self.render_function(fn, None, "")
            main_lines.append("")
        return {"models.ts": "\n".join(model_lines), "main.ts": "\n".join(main_lines)}

    def render_function(self, m: _Method, cls: Optional[_Class], indent: str) -> list[str]:
        params = ", ".join(f"{n}: {_annot(t)}" for n, t in m.params)
        head = f"{indent}{m.name}({params}): {_annot(m.ret)} {{" if cls else \
            f"function {m.name}({params}): {_annot(m.ret)} {{"
        taken = {n for n, _ in m.params}
        return [head] + self.body(list(m.params), cls, m.ret, indent + "  ", taken) + [f"{indent}}}"]


def _split_class(name: str) -> list[str]:
    words, cur = [], ""
    for ch in name:
        if ch.isupper() and cur:
            words.append(cur)
            cur = ""
        cur += ch
    return words + [cur]


def _annot(ty: str) -> str:
    return "number[]" if ty == "Array" else ty


def generate_project(spec: SyntheticSpec, seed: int, project_id: str) -> SourceProject:
    spec.validate()
    gen = _ProjectGen(spec, random.Random(f"{seed}/{project_id}"))
    gen.declare()
    files = gen.render()
    return SourceProject(project_id, [(k, v) for k, v in sorted(files.items()) if v.strip()])


SPLITS = ("train", "val", "test")


def generate_corpus(spec: SyntheticSpec, seed: int, out_dir=None) -> dict[str, list[SourceProject]]:
    """Projects per split; written as ``out_dir/<split>/<project>/*.ts`` when a directory is given."""
    spec.validate()
    corpus = {}
    for split, n in zip(SPLITS, (spec.train, spec.val, spec.test)):
        corpus[split] = [generate_project(spec, seed, f"{split}{i:03d}") for i in range(n)]
    if out_dir is not None:
        write_corpus(corpus, out_dir)
    return corpus


def write_corpus(corpus: dict[str, list[SourceProject]], out_dir):
    root = Path(out_dir)
    for split, projects in corpus.items():
        for proj in projects:
            d = root / split / proj.project_id
            d.mkdir(parents=True, exist_ok=True)
            for rel, text in proj.files:
                (d / rel).write_text(text)
