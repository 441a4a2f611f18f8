"""Temporal formulas as models over the supplementary logic hierarchy, and
runtime verification by rewriting.

Formulas are ordinary models: operator nodes typed by the logic model, glued
by formula/left/right arrows under a single root marker.  Atomic propositions
are double-typed nodes whose application types form an embedded pattern
fragment, evaluated by matching the fragment against a snapshot.  One monitor
step unrolls the temporal operators (copying subformulas, so the residual
stays intact), evaluates the atoms outside the next-operator region, folds
boolean constants and finally strips the next operators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .graph import Arrow, enumerate_homomorphisms, graph
from .hierarchy import (
    APPLICATION,
    ROOT_MODEL,
    Hierarchy,
    Model,
    SUPPLEMENTARY,
    System,
    TypeRef,
    transitive_types,
)

UNARY_OPS = {"not": "Not", "X": "X", "F": "F", "G": "G"}
BINARY_OPS = {"and": "And", "or": "Or", "impl": "Implication", "U": "U", "R": "R"}
NODE_TO_OP = {v: k for k, v in {**UNARY_OPS, **BINARY_OPS}.items()}


def make_ltl_hierarchy() -> Hierarchy:
    """The supplementary logic hierarchy: one model with the operator grammar
    encoded as nodes, specialisation arrows and the three structure arrows."""
    h = Hierarchy("ltl", SUPPLEMENTARY)
    ops = ["Not", "X", "F", "G", "And", "Or", "Implication", "U", "R"]
    leaves = ["Atomic", "True", "False"]
    nodes = ["Formula", "Unary", "Binary", "Root"] + ops + leaves
    inherits = []
    for n in ["Not", "X", "F", "G"]:
        inherits.append(Arrow(f"s_{n}", n, "Unary"))
    for n in ["And", "Or", "Implication", "U", "R"]:
        inherits.append(Arrow(f"s_{n}", n, "Binary"))
    for n in ["Unary", "Binary"] + leaves:
        inherits.append(Arrow(f"s_{n}", n, "Formula"))
    arrows = [
        Arrow("formula", "Unary", "Formula"),
        Arrow("left", "Binary", "Formula"),
        Arrow("right", "Binary", "Formula"),
        Arrow("rootf", "Root", "Formula"),
    ]
    m = Model("ltl", graph(nodes, arrows + inherits), inherit_arrows=frozenset(inherits))
    m.abstract = frozenset({"Formula", "Unary", "Binary"})
    h.add_model(m, ROOT_MODEL)
    return h


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------
#
# ("const", bool) | ("atom", name) | (op, sub...) with op in UNARY/BINARY_OPS


_TOK = re.compile(r"\s*([()!]|->|&|\||[A-Za-z_][A-Za-z_0-9]*)")


def parse_formula(text: str):
    """Convenience notation: `G(obs -> X(!obs U to))`; `!`, `&`, `|`, `->`,
    `X F G U R` as operators, lowercase names as atoms, true/false constants."""
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad formula at {text[pos:]!r}")
            break
        toks.append(m.group(1))
        pos = m.end()
    out, rest = _parse_impl(toks)
    if rest:
        raise ValueError(f"trailing input {rest!r}")
    return out


def _parse_impl(toks):
    left, toks = _parse_or(toks)
    if toks and toks[0] == "->":
        right, toks = _parse_impl(toks[1:])
        return ("impl", left, right), toks
    return left, toks


def _parse_or(toks):
    left, toks = _parse_and(toks)
    while toks and toks[0] == "|":
        right, toks = _parse_and(toks[1:])
        left = ("or", left, right)
    return left, toks


def _parse_and(toks):
    left, toks = _parse_until(toks)
    while toks and toks[0] == "&":
        right, toks = _parse_until(toks[1:])
        left = ("and", left, right)
    return left, toks


def _parse_until(toks):
    left, toks = _parse_unary(toks)
    if toks and toks[0] in ("U", "R"):
        op = toks[0]
        right, toks = _parse_until(toks[1:])
        return (op, left, right), toks
    return left, toks


def _parse_unary(toks):
    if not toks:
        raise ValueError("unexpected end of formula")
    t = toks[0]
    if t == "!":
        sub, toks = _parse_unary(toks[1:])
        return ("not", sub), toks
    if t in ("X", "F", "G"):
        sub, toks = _parse_unary(toks[1:])
        return (t, sub), toks
    if t == "(":
        sub, toks = _parse_impl(toks[1:])
        if not toks or toks[0] != ")":
            raise ValueError("missing )")
        return sub, toks[1:]
    if t == "true":
        return ("const", True), toks[1:]
    if t == "false":
        return ("const", False), toks[1:]
    if re.fullmatch(r"[a-z_][A-Za-z_0-9]*", t):
        return ("atom", t), toks[1:]
    raise ValueError(f"unexpected token {t!r}")


def render_term(t) -> str:
    op = t[0]
    if op == "const":
        return "true" if t[1] else "false"
    if op == "atom":
        return t[1]
    if op == "not":
        return f"!{render_term(t[1])}"
    if op in ("X", "F", "G"):
        return f"{op}({render_term(t[1])})"
    sym = {"and": "&", "or": "|", "impl": "->", "U": "U", "R": "R"}[op]
    return f"({render_term(t[1])} {sym} {render_term(t[2])})"


# ---------------------------------------------------------------------------
# Formula models
# ---------------------------------------------------------------------------


@dataclass
class FormulaModel:
    """A formula model inside a system, addressed by model name."""

    system: System
    model: str

    def term(self):
        return to_term(self.system, self.model)


def _ltl_model_name(system: System) -> str:
    for name, h in system.supplementary.items():
        for mname in h.model_names():
            if mname != ROOT_MODEL and "Formula" in h.models[mname].graph.nodes:
                return mname
    raise KeyError("no logic hierarchy in the system")


def _supp_type(system: System, model: Model, key):
    t = model.typings.get(key)
    if not t:
        return None
    for _, ref in t.supplementary.items():
        return ref
    return None


def _ltl_kind(system: System, model: Model, key):
    """The logic-operator node typing an element, or None."""
    ref = _supp_type(system, model, key)
    return ref.elem if ref else None


def build_formula_model(
    term,
    name: str = "property",
    fragments: dict | None = None,
) -> Model:
    """A fresh model for the term: operator nodes n1, n2, ... under a root
    marker r0.  `fragments` maps atom names to application TypeRefs, attached
    as second types on the atomic nodes."""
    fragments = fragments or {}
    ltl_name = "ltl"
    m = Model(name, graph())
    nodes: list[str] = []
    arrows: list[Arrow] = []
    counter = [0]

    def supp(key, type_name):
        m.typing(key).supplementary[ltl_name] = TypeRef(ltl_name, type_name)

    def emit(t) -> str:
        counter[0] += 1
        me = f"n{counter[0]}"
        nodes.append(me)
        op = t[0]
        if op == "const":
            supp(me, "True" if t[1] else "False")
        elif op == "atom":
            supp(me, "Atomic")
            if t[1] in fragments:
                m.typing(me).own = fragments[t[1]]
            m.attr_values.setdefault(me, {})["prop"] = t[1]
        elif op in UNARY_OPS:
            supp(me, UNARY_OPS[op])
            child = emit(t[1])
            a = Arrow(f"f{me}", me, child)
            arrows.append(a)
            supp(a, Arrow("formula", "Unary", "Formula"))
        else:
            supp(me, BINARY_OPS[op])
            l = emit(t[1])
            r = emit(t[2])
            la = Arrow(f"l{me}", me, l)
            ra = Arrow(f"r{me}", me, r)
            arrows.extend((la, ra))
            supp(la, Arrow("left", "Binary", "Formula"))
            supp(ra, Arrow("right", "Binary", "Formula"))
        return me

    top = emit(term)
    nodes.append("r0")
    supp("r0", "Root")
    ra = Arrow("rootf0", "r0", top)
    arrows.append(ra)
    supp(ra, Arrow("rootf", "Root", "Formula"))
    m.graph = graph(nodes, arrows)
    return m


def formula_system(term, fragments: dict | None = None) -> System:
    """A standalone system holding one formula model typed by the logic
    hierarchy (application side defaults to the root types)."""
    app = Hierarchy("formulas", APPLICATION)
    system = System(app, {"ltl": make_ltl_hierarchy()})
    model = build_formula_model(term, "property", fragments)
    app.add_model(model, ROOT_MODEL)
    return system


def _structure(system: System, model: Model):
    """root node, child maps and logic kinds for a formula model."""
    kinds = {n: _ltl_kind(system, model, n) for n in model.graph.nodes}
    out: dict[str, dict[str, str]] = {n: {} for n in model.graph.nodes}
    parents: dict[str, list] = {n: [] for n in model.graph.nodes}
    root = None
    for a in model.plain_arrows():
        kind = _ltl_kind(system, model, a)
        if not isinstance(kind, Arrow):
            continue
        slot = kind.name
        if slot == "rootf":
            root = a.tgt
            continue
        out[a.src][slot] = a.tgt
        parents[a.tgt].append((a.src, slot, a))
    return kinds, out, parents, root


def to_term(system: System, model_name: str):
    """Unfold the model from its root into a term; shared subgraphs are
    duplicated, unreachable junk ignored."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    if root is None:
        raise ValueError(f"{model_name} has no root formula")

    def walk(n, depth=0):
        if depth > model.graph.size + 2:
            raise ValueError("formula structure is cyclic")
        k = kinds.get(n)
        if k == "True":
            return ("const", True)
        if k == "False":
            return ("const", False)
        if k == "Atomic":
            return ("atom", model.attr_values.get(n, {}).get("prop", n))
        if k in ("Not", "X", "F", "G"):
            return (NODE_TO_OP[k], walk(children[n]["formula"], depth + 1))
        if k in ("And", "Or", "Implication", "U", "R"):
            return (
                NODE_TO_OP[k],
                walk(children[n]["left"], depth + 1),
                walk(children[n]["right"], depth + 1),
            )
        raise ValueError(f"node {n} is not a formula element (kind {k})")

    return walk(root)


# ---------------------------------------------------------------------------
# The rewriting operations (graph level)
# ---------------------------------------------------------------------------


def _rebuild(system: System, old: Model, new_model: Model) -> System:
    return system.replace_model(new_model)


class _Builder:
    """Accumulates a rewritten formula model with fresh deterministic names."""

    def __init__(self, system: System, model: Model):
        self.system = system
        self.model = model
        self.out = Model(model.name, graph())
        self.nodes: list[str] = []
        self.arrows: list[Arrow] = []
        self.counter = 0
        self.supp_hier = next(iter(model.typings[next(iter(model.graph.nodes))].supplementary))

    def fresh(self, kind: str) -> str:
        self.counter += 1
        name = f"n{self.counter}"
        while name in self.model.graph.nodes or name in self.nodes:
            self.counter += 1
            name = f"n{self.counter}"
        self.nodes.append(name)
        self.out.typing(name).supplementary[self.supp_hier] = TypeRef(
            self.supp_hier, kind
        )
        return name

    def copy_node(self, n: str) -> str:
        self.nodes.append(n)
        old = self.model.typings.get(n)
        if old:
            t = self.out.typing(n)
            t.own = old.own
            t.supplementary = dict(old.supplementary)
            t.data = old.data
        if n in self.model.attr_values:
            self.out.attr_values[n] = dict(self.model.attr_values[n])
        if n in self.model.potencies:
            self.out.potencies[n] = self.model.potencies[n]
        return n

    def link(self, src: str, tgt: str, slot: str):
        self.counter += 1
        a = Arrow(f"{slot[0]}{src}_{self.counter}", src, tgt)
        self.arrows.append(a)
        kind = {
            "formula": Arrow("formula", "Unary", "Formula"),
            "left": Arrow("left", "Binary", "Formula"),
            "right": Arrow("right", "Binary", "Formula"),
            "rootf": Arrow("rootf", "Root", "Formula"),
        }[slot]
        self.out.typing(a).supplementary[self.supp_hier] = TypeRef(self.supp_hier, kind)
        return a

    def finish(self) -> System:
        from .hierarchy import ROOT_ARROW, ROOT_NODE

        self.out.graph = graph(self.nodes, self.arrows)
        for n in self.out.graph.nodes:
            t = self.out.typing(n)
            if t.own is None:
                t.own = TypeRef(ROOT_MODEL, ROOT_NODE)
        for a in self.out.graph.arrows:
            t = self.out.typing(a)
            if t.own is None:
                t.own = TypeRef(ROOT_MODEL, ROOT_ARROW)
        return self.system.replace_model(self.out)


def unroll(system: System, model_name: str) -> System:
    """One unrolling generation: every until/release/eventually/globally node
    is split into its now-part and a next-state copy; subformulas are copied
    so later evaluation cannot corrupt the residual."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    b = _Builder(system, model)

    def copy_subtree(n: str) -> str:
        k = kinds[n]
        me = b.fresh(k)
        if n in model.attr_values:
            b.out.attr_values[me] = dict(model.attr_values[n])
        own = model.typings.get(n)
        if own and own.own:
            b.out.typing(me).own = own.own
        for slot in ("formula", "left", "right"):
            if slot in children.get(n, {}):
                b.link(me, copy_subtree(children[n][slot]), slot)
        return me

    def walk(n: str) -> str:
        # guarded normal form: temporal operators outside an X expand, the
        # next-state copies under the created X stay raw
        k = kinds[n]
        if k == "U":
            phi, psi = children[n]["left"], children[n]["right"]
            or_ = b.fresh("Or")
            and_ = b.fresh("And")
            x = b.fresh("X")
            b.link(or_, walk(psi), "left")
            b.link(or_, and_, "right")
            b.link(and_, walk(phi), "left")
            b.link(and_, x, "right")
            u2 = b.fresh("U")
            b.link(u2, copy_subtree(phi), "left")
            b.link(u2, copy_subtree(psi), "right")
            b.link(x, u2, "formula")
            return or_
        if k == "R":
            phi, psi = children[n]["left"], children[n]["right"]
            and_ = b.fresh("And")
            or_ = b.fresh("Or")
            x = b.fresh("X")
            b.link(and_, walk(psi), "left")
            b.link(and_, or_, "right")
            b.link(or_, walk(phi), "left")
            b.link(or_, x, "right")
            r2 = b.fresh("R")
            b.link(r2, copy_subtree(phi), "left")
            b.link(r2, copy_subtree(psi), "right")
            b.link(x, r2, "formula")
            return and_
        if k == "F":
            phi = children[n]["formula"]
            or_ = b.fresh("Or")
            x = b.fresh("X")
            f2 = b.fresh("F")
            b.link(or_, walk(phi), "left")
            b.link(or_, x, "right")
            b.link(f2, copy_subtree(phi), "formula")
            b.link(x, f2, "formula")
            return or_
        if k == "G":
            phi = children[n]["formula"]
            and_ = b.fresh("And")
            x = b.fresh("X")
            g2 = b.fresh("G")
            b.link(and_, walk(phi), "left")
            b.link(and_, x, "right")
            b.link(g2, copy_subtree(phi), "formula")
            b.link(x, g2, "formula")
            return and_
        if k == "X":
            me = b.fresh(k)
            b.link(me, copy_subtree(children[n]["formula"]), "formula")
            return me
        if k == "Not":
            me = b.fresh(k)
            b.link(me, walk(children[n]["formula"]), "formula")
            return me
        if k in ("And", "Or", "Implication"):
            me = b.fresh(k)
            b.link(me, walk(children[n]["left"]), "left")
            b.link(me, walk(children[n]["right"]), "right")
            return me
        return copy_subtree(n)  # leaves

    if root is None:
        raise ValueError("no root formula")
    top = walk(root)
    r0 = b.fresh("Root")
    b.link(r0, top, "rootf")
    return b.finish()


def evaluate_atomics(system: System, model_name: str, snapshot: str) -> System:
    """Replace each atomic proposition outside the next-operator region by the
    truth of matching its embedded fragment against the snapshot."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    b = _Builder(system, model)

    def protected_walk(n: str) -> str:  # under X: copy verbatim
        return _copy_any(b, model, kinds, children, n)

    def walk(n: str) -> str:
        k = kinds[n]
        if k == "Atomic":
            value = fragment_holds(system, model_name, n, snapshot)
            return b.fresh("True" if value else "False")
        if k == "X":
            me = b.fresh("X")
            b.link(me, protected_walk(children[n]["formula"]), "formula")
            return me
        if k in ("Not", "F", "G"):
            me = b.fresh(k)
            b.link(me, walk(children[n]["formula"]), "formula")
            return me
        if k in ("And", "Or", "Implication", "U", "R"):
            me = b.fresh(k)
            b.link(me, walk(children[n]["left"]), "left")
            b.link(me, walk(children[n]["right"]), "right")
            return me
        return _copy_any(b, model, kinds, children, n)

    top = walk(root)
    r0 = b.fresh("Root")
    b.link(r0, top, "rootf")
    return b.finish()


def _copy_any(b: _Builder, model, kinds, children, n: str) -> str:
    me = b.fresh(kinds[n])
    if n in model.attr_values:
        b.out.attr_values[me] = dict(model.attr_values[n])
    own = model.typings.get(n)
    if own and own.own:
        b.out.typing(me).own = own.own
    for slot in ("formula", "left", "right"):
        if slot in children.get(n, {}):
            b.link(me, _copy_any(b, model, kinds, children, children[n][slot]), slot)
    return me


def fragment_holds(system: System, model_name: str, atomic: str, snapshot: str) -> bool:
    """Match the atomic node's embedded pattern fragment (its application-typed
    projection) into the snapshot; an empty fragment holds trivially."""
    model = system.find_model(model_name)
    snap = system.find_model(snapshot)
    frag = _fragment_elements(system, model, atomic)
    if not frag:
        return True
    pattern = graph(
        (n for n in frag if isinstance(n, str)),
        (a for a in frag if isinstance(a, Arrow)),
    )
    cands_n = {}
    cands_a = {}
    for e in frag:
        want = model.typings[e].own
        pool = []
        targets = snap.graph.nodes if isinstance(e, str) else snap.graph.arrows
        for x in sorted(targets):
            if transitive_types(system, snapshot, x).get(want.model) == want.elem:
                pool.append(x)
        if not pool:
            return False
        if isinstance(e, str):
            cands_n[e] = pool
        else:
            cands_a[e] = pool
    hits = enumerate_homomorphisms(
        pattern, snap.graph, injective=True, node_candidates=cands_n, arrow_candidates=cands_a
    )
    return bool(hits)


def _fragment_elements(system: System, model: Model, atomic: str):
    """Application-typed elements connected to the atomic node (including it),
    via application-typed arrows."""
    from .hierarchy import ROOT_NODE, ROOT_ARROW

    def app_typed(key) -> bool:
        t = model.typings.get(key)
        if not t or not t.own:
            return False
        if t.own.model == ROOT_MODEL:
            return False
        return system.hierarchy_of(t.own.model).dimension == APPLICATION

    if not app_typed(atomic):
        return []
    elems = {atomic}
    changed = True
    while changed:
        changed = False
        for a in model.plain_arrows():
            if not app_typed(a):
                continue
            if (a.src in elems or a.tgt in elems) and a not in elems:
                if app_typed(a.src) and app_typed(a.tgt):
                    elems.update((a, a.src, a.tgt))
                    changed = True
    return sorted(elems, key=repr)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------


def _fold(kinds, children, b, model, n: str, strip_x: bool) -> str:
    k = kinds[n]

    def is_const(term_node, value):
        return kinds.get(term_node) == ("True" if value else "False")

    if k in ("Not", "F", "G", "X"):
        child = children[n]["formula"]
        if k == "X" and strip_x:
            return _fold(kinds, children, b, model, child, strip_x)
        sub = _fold(kinds, children, b, model, child, strip_x)
        sk = b.kind_of(sub)
        if k == "Not" and sk in ("True", "False"):
            return b.fresh("False" if sk == "True" else "True")
        if k == "F" and sk == "True":
            return b.fresh("True")
        if k == "G" and sk == "False":
            return b.fresh("False")
        me = b.fresh(k)
        b.link(me, sub, "formula")
        return me
    if k in ("And", "Or", "Implication", "U", "R"):
        l = _fold(kinds, children, b, model, children[n]["left"], strip_x)
        r = _fold(kinds, children, b, model, children[n]["right"], strip_x)
        lk, rk = b.kind_of(l), b.kind_of(r)
        if k == "And":
            if lk == "False" or rk == "False":
                return b.fresh("False")
            if lk == "True":
                return r
            if rk == "True":
                return l
        if k == "Or":
            if lk == "True" or rk == "True":
                return b.fresh("True")
            if lk == "False":
                return r
            if rk == "False":
                return l
        if k == "Implication":
            if lk == "False" or rk == "True":
                return b.fresh("True")
            if lk == "True":
                return r
            if rk == "False":
                me = b.fresh("Not")
                b.link(me, l, "formula")
                return me
        if k == "U":
            if rk == "True":
                return b.fresh("True")
            if rk == "False" and lk == "False":
                return b.fresh("False")
            if lk == "False":
                return r
        if k == "R":
            if rk == "False":
                return b.fresh("False")
            if lk == "True":
                return r
        me = b.fresh(k)
        b.link(me, l, "left")
        b.link(me, r, "right")
        return me
    return _copy_any(b, model, kinds, children, n)


class _FoldBuilder(_Builder):
    def kind_of(self, n: str):
        t = self.out.typings.get(n)
        if not t or not t.supplementary:
            return None
        ref = next(iter(t.supplementary.values()))
        return ref.elem


def simplify_and_step(system: System, model_name: str) -> System:
    """Fold boolean constants, then strip every next operator so the residual
    is ready for the following snapshot."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    b = _FoldBuilder(system, model)
    folded = _fold(kinds, children, b, model, root, strip_x=False)
    # second phase on the folded structure: strip X operators
    interim = b.finish()
    model2 = interim.find_model(model_name)
    # re-add the root for the interim model
    kinds2 = {n: _ltl_kind(interim, model2, n) for n in model2.graph.nodes}
    b2 = _FoldBuilder(interim, model2)
    kinds2b, children2, _, _ = _structure_no_root(interim, model2)
    stripped = _fold(kinds2b, children2, b2, model2, folded, strip_x=True)
    r0 = b2.fresh("Root")
    b2.link(r0, stripped, "rootf")
    return b2.finish()


def _structure_no_root(system, model):
    kinds = {n: _ltl_kind(system, model, n) for n in model.graph.nodes}
    children: dict[str, dict[str, str]] = {n: {} for n in model.graph.nodes}
    parents: dict[str, list] = {n: [] for n in model.graph.nodes}
    for a in model.plain_arrows():
        kind = _ltl_kind(system, model, a)
        if not isinstance(kind, Arrow):
            continue
        if kind.name == "rootf":
            continue
        children[a.src][kind.name] = a.tgt
        parents[a.tgt].append((a.src, kind.name, a))
    return kinds, children, parents, None


def monitor_step(system: System, model_name: str, snapshot: str) -> System:
    """One verification step against one snapshot: unroll, evaluate the atoms
    outside the next region, simplify, strip the next operators."""
    system = unroll(system, model_name)
    system = evaluate_atomics(system, model_name, snapshot)
    return simplify_and_step(system, model_name)


# ---------------------------------------------------------------------------
# The same step driven by the shipped rewrite rules
# ---------------------------------------------------------------------------


def _unguarded_parents(system: System, model_name: str) -> set:
    """Nodes whose outgoing structure arrows are now-positions: reachable from
    the root without crossing a next operator, and not next operators
    themselves.  The root marker is always one of them."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    seen: set[str] = set()

    def walk(n):
        if n in seen or n is None:
            return
        seen.add(n)
        if kinds.get(n) == "X":
            return  # the operand is the next state
        for slot in ("formula", "left", "right"):
            if slot in children.get(n, {}):
                walk(children[n][slot])

    for a in model.plain_arrows():
        kind = _ltl_kind(system, model, a)
        if isinstance(kind, Arrow) and kind.name == "rootf":
            seen.add(a.src)
    walk(root)
    return {n for n in seen if kinds.get(n) != "X"} | {
        n for n in model.graph.nodes if kinds.get(n) == "Root"
    }


_RULE_TRIGGER = {
    "UnrollU": "U",
    "UnrollR": "R",
    "UnrollF": "F",
    "UnrollG": "G",
    "DeleteNext": "X",
    "FoldNot": "Not",
    "FoldAnd": "And",
    "FoldOr": "Or",
    "FoldImpl": "Implication",
    "FoldUntil": "U",
    "FoldRelease": "R",
    "FoldEventually": "F",
    "FoldGlobally": "G",
}


def _trigger_kind(rule_name: str):
    for prefix, kind in _RULE_TRIGGER.items():
        if rule_name.startswith(prefix):
            return kind
    return None


def _root_depths(system: System, model_name: str) -> dict:
    """Shortest distance from the root marker, next operators included."""
    model = system.find_model(model_name)
    kinds, children, _, root = _structure(system, model)
    depth = {}
    frontier = [(root, 0)]
    while frontier:
        n, d = frontier.pop(0)
        if n is None or n in depth:
            continue
        depth[n] = d
        for slot in ("formula", "left", "right"):
            if slot in children.get(n, {}):
                frontier.append((children[n][slot], d + 1))
    for n in model.graph.nodes:
        if kinds.get(n) == "Root":
            depth[n] = -1
    return depth


def rewrite_with_rules(system: System, model_name: str, rules: dict, cap: int = 4000) -> System:
    """Apply the shipped formula rules in phases: unrolling on the next-free
    region (outermost positions first, so next-state copies stay raw), boolean
    and temporal-constant folding, next removal, folding again.  Equivalent on
    unfolded terms to unroll followed by simplify_and_step.

    The meta bindings only touch the stack above the formula model, which the
    rewrites never change, so they are matched once per rule and reused."""
    from .matching import bind_lhs, match_for_model
    from .rewrite import NotApplicable, apply_rule

    binding_cache: dict[str, list] = {}

    def bindings_for(rule) -> list:
        if rule.name not in binding_cache:
            _, bs = match_for_model(system, rule, model_name)
            binding_cache[rule.name] = bs
        return binding_cache[rule.name]

    def present_kinds() -> set:
        model = system.find_model(model_name)
        return {
            _ltl_kind(system, model, n)
            for n in model.graph.nodes
        }

    spent = 0
    phases = (("Unroll", True), ("Fold", False), ("DeleteNext", False), ("Fold", False))
    for phase, guarded in phases:
        names = [n for n in sorted(rules) if n.startswith(phase)]
        if guarded:
            # outermost-first: always rewrite the shallowest now-position
            while True:
                allowed = _unguarded_parents(system, model_name)
                depths = _root_depths(system, model_name)
                kinds_here = present_kinds()
                best = None
                for name in names:
                    rule = rules[name]
                    if _trigger_kind(name) not in kinds_here:
                        continue
                    for b in bindings_for(rule):
                        for m in bind_lhs(system, rule, b, model_name):
                            p = m.mu_map().get("p")
                            if p not in allowed or p not in depths:
                                continue
                            key = (depths[p], name, m.sort_key())
                            if best is None or key < best[0]:
                                best = (key, rule, m)
                if best is None:
                    break
                _, rule, m = best
                system = apply_rule(system, rule, model_name, m, postfilter=False).system
                spent += 1
                if spent > cap:
                    raise RuntimeError("formula rewriting did not converge")
        else:
            progress = True
            while progress:
                progress = False
                kinds_here = present_kinds()
                for name in names:
                    rule = rules[name]
                    if _trigger_kind(name) not in kinds_here:
                        continue
                    while True:
                        m = None
                        for b in bindings_for(rule):
                            hits = bind_lhs(system, rule, b, model_name)
                            if hits:
                                m = hits[0]
                                break
                        if m is None:
                            break
                        try:
                            system = apply_rule(
                                system, rule, model_name, m, postfilter=False
                            ).system
                        except NotApplicable:
                            break
                        progress = True
                        spent += 1
                        if spent > cap:
                            raise RuntimeError("formula rewriting did not converge")
                        kinds_here = present_kinds()
    return system


def verdict(system: System, model_name: str):
    """True/False once decided, None while still open."""
    t = to_term(system, model_name)
    if t == ("const", True):
        return True
    if t == ("const", False):
        return False
    return None
