"""Coupled transformation rules and their textual form.

A rule has a META block (a chain of pattern levels above the implicit root),
a FROM pattern and a TO pattern; the interface is the union of FROM and TO,
with preserved elements identified by name.  Pattern elements may be
constants (matched by name), may carry potency or multiplicity constraints,
attribute constraints (FROM) and attribute assignments (TO), and integer
parameters substituted before matching.

Grammar (two-space indent, ``//`` comments, ``;`` or newline separators)::

    rule NAME {
      param x;
      meta {
        mm1 { DECLS }
        mm2 { DECLS }
      }
      from { DECLS CLAUSES }
      to { DECLS CLAUSES }
    }

    node decl:   x : Task @ mm1          constants:  x$   or   x : Task$ @ mm1
    arrow decl:  f : in @ mm1 (t -> x)   bare arrow: f (t -> x)
    multiplicity suffix on the name:  f[1..2] : ...   or   f[n]
    potency constraint:  ... pot 1-2-*
    attribute clause:  x.attr = 5 | x.attr = ? | x.attr = p | x.attr = x.attr + 1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .graph import Arrow, Graph, GraphMorphism, graph
from .hierarchy import Multiplicity, Potency, parse_potency

ROOT_LEVEL = 0


class RuleError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass(frozen=True)
class TypeExpr:
    """Reference to a pattern element at a meta level (0 = the root)."""

    level: int
    name: str
    constant_marker: bool = False  # the `$` sits after the type name


@dataclass(frozen=True)
class AttrValue:
    """Right-hand side of an attribute clause."""

    kind: str  # "lit" | "any" | "param" | "ref"
    value: object = None
    elem: str = ""
    attr: str = ""
    delta: object = 0  # int or parameter name

    def render(self) -> str:
        if self.kind == "any":
            return "?"
        if self.kind == "lit":
            return _render_literal(self.value)
        if self.kind == "param":
            return str(self.value)
        out = f"{self.elem}.{self.attr}"
        if self.delta:
            out += f" + {self.delta}"
        return out


def _render_literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


@dataclass
class PatternElement:
    name: str
    kind: str  # "node" | "arrow"
    constant: bool = False
    type: Optional[TypeExpr] = None
    src: Optional[str] = None
    tgt: Optional[str] = None
    potency: Optional[Potency] = None
    mult: Union[Multiplicity, str, None] = None  # Multiplicity or the symbolic "n"
    attrs: dict = field(default_factory=dict)  # attr name -> AttrValue

    @property
    def key(self):
        if self.kind == "arrow":
            return Arrow(self.name, self.src, self.tgt)
        return self.name


@dataclass
class PatternBlock:
    elements: dict = field(default_factory=dict)  # key -> PatternElement

    def add(self, el: PatternElement):
        if el.key in self.elements:
            raise RuleError(f"duplicate declaration {el.name}")
        self.elements[el.key] = el

    def nodes(self) -> list[PatternElement]:
        return sorted(
            (e for e in self.elements.values() if e.kind == "node"), key=lambda e: e.name
        )

    def arrows(self) -> list[PatternElement]:
        return sorted(
            (e for e in self.elements.values() if e.kind == "arrow"),
            key=lambda e: (e.name, e.src, e.tgt),
        )

    def graph(self) -> Graph:
        return graph(
            (e.name for e in self.nodes()),
            ((e.name, e.src, e.tgt) for e in self.arrows()),
        )

    def by_name(self, name: str) -> Optional[PatternElement]:
        hits = [e for e in self.elements.values() if e.name == name]
        return hits[0] if len(hits) == 1 else None


@dataclass
class McmtRule:
    name: str
    params: list = field(default_factory=list)
    meta: list = field(default_factory=list)  # PatternBlock per level, index 0 = mm1
    lhs: PatternBlock = field(default_factory=PatternBlock)
    rhs: PatternBlock = field(default_factory=PatternBlock)

    @property
    def depth(self) -> int:
        """Number of meta levels (the root above them is implicit level 0)."""
        return len(self.meta)

    def meta_level(self, k: int) -> PatternBlock:
        """Meta pattern at level k, 1-based like the mmK syntax."""
        return self.meta[k - 1]

    def meta_graphs(self) -> list[Graph]:
        """[root graph placeholder index 0] is owned by the matcher; this
        returns the declared pattern graphs for levels 1..n."""
        return [blk.graph() for blk in self.meta]

    def element_at(self, level: int, key) -> Optional[PatternElement]:
        blk = self.block(level)
        if blk is None:
            return None
        return blk.elements.get(key)

    def block(self, level: int) -> Optional[PatternBlock]:
        if 1 <= level <= self.depth:
            return self.meta[level - 1]
        return None

    def bottom_level(self) -> int:
        return self.depth + 1

    # -- interface ---------------------------------------------------------

    def interface(self) -> PatternBlock:
        """Union of FROM and TO; shared names identify preserved elements."""
        out = PatternBlock()
        for el in list(self.lhs.elements.values()):
            out.elements[el.key] = el
        for el in self.rhs.elements.values():
            if el.key in out.elements:
                prev = out.elements[el.key]
                if (prev.type, prev.constant) != (el.type, el.constant):
                    raise RuleError(
                        f"element {el.name} declared differently in from and to blocks"
                    )
            else:
                out.elements[el.key] = el
        return out

    def preserved(self) -> set:
        return set(self.lhs.elements) & set(self.rhs.elements)

    def created(self) -> set:
        return set(self.rhs.elements) - set(self.lhs.elements)

    def deleted(self) -> set:
        return set(self.lhs.elements) - set(self.rhs.elements)

    # -- rule-internal typing ----------------------------------------------

    def type_chain_of(self, level: int, key) -> dict[int, object]:
        """Transitive pattern types of an element: meta level -> element key,
        following declared types up to (but excluding) the root."""
        out: dict[int, object] = {}
        cur_level, cur_key = level, key
        while True:
            el = (
                self.element_at(cur_level, cur_key)
                if cur_level <= self.depth
                else self._bottom_element(cur_key)
            )
            if el is None or el.type is None or el.type.level == ROOT_LEVEL:
                break
            tlevel = el.type.level
            blk = self.meta[tlevel - 1]
            tel = blk.by_name(el.type.name)
            if tel is None:
                break
            out[tlevel] = tel.key
            cur_level, cur_key = tlevel, tel.key
        return out

    def _bottom_element(self, key) -> Optional[PatternElement]:
        return self.interface().elements.get(key)

    def sigma(self, block: PatternBlock) -> list[GraphMorphism]:
        """Partial typing morphisms from a block's graph into each meta level
        graph; index 0 is the total root typing (left implicit as names)."""
        g = block.graph()
        out = []
        for i in range(1, self.depth + 1):
            mg = self.meta[i - 1].graph()
            nodes, arrows = {}, {}
            for el in block.elements.values():
                chain = self._typing_chain_for(block, el)
                if i in chain:
                    if el.kind == "node":
                        nodes[el.name] = chain[i] if isinstance(chain[i], str) else chain[i]
                    else:
                        arrows[el.key] = chain[i]
            out.append(GraphMorphism(g, mg, nodes, arrows))
        return out

    def _typing_chain_for(self, block: PatternBlock, el: PatternElement) -> dict:
        out: dict[int, object] = {}
        cur = el
        while cur is not None and cur.type is not None and cur.type.level != ROOT_LEVEL:
            tlevel = cur.type.level
            blk = self.meta[tlevel - 1]
            tel = blk.by_name(cur.type.name)
            if tel is None:
                break
            out[tlevel] = tel.key
            cur = tel
        return out


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_rule(rule: McmtRule) -> list[str]:
    out = []
    if not rule.meta or all(not blk.elements for blk in rule.meta):
        out.append("meta block must contain a non-empty pattern")
    blocks = [(f"mm{k}", rule.meta[k - 1], k) for k in range(1, rule.depth + 1)]
    bottom = rule.bottom_level()
    try:
        iface = rule.interface()
    except RuleError as e:
        return out + [str(e)]
    blocks += [("from", rule.lhs, bottom), ("to", rule.rhs, bottom), ("interface", iface, bottom)]
    for label, blk, level in blocks:
        for el in blk.elements.values():
            if el.kind == "arrow":
                if el.src not in {n.name for n in blk.nodes()}:
                    out.append(f"{label}: arrow {el.name} has unknown source {el.src}")
                if el.tgt not in {n.name for n in blk.nodes()}:
                    out.append(f"{label}: arrow {el.name} has unknown target {el.tgt}")
            if el.type is not None and el.type.level != ROOT_LEVEL:
                if el.type.level >= level:
                    out.append(
                        f"{label}: {el.name} typed from level mm{el.type.level}, "
                        f"which is not above it"
                    )
                    continue
                blk_t = rule.block(el.type.level)
                tel = blk_t.by_name(el.type.name) if blk_t else None
                if tel is None:
                    out.append(f"{label}: {el.name} has unknown type {el.type.name}@mm{el.type.level}")
                elif (tel.kind == "arrow") != (el.kind == "arrow"):
                    out.append(f"{label}: {el.name} typed by a different kind of element")
    # rule-internal non-dangling: the endpoints of a typed arrow must at least
    # be typed at the same level (exact agreement can rest on target-side
    # specialisation, which only match-time type consistency can see)
    for label, blk, level in blocks:
        if label == "interface":
            continue
        for el in blk.arrows():
            if el.type is None or el.type.level == ROOT_LEVEL:
                continue
            tblk = rule.block(el.type.level)
            tel = tblk.by_name(el.type.name) if tblk else None
            if tel is None or tel.kind != "arrow":
                continue
            src_chain = rule_chain_types(rule, blk, blk.by_name(el.src))
            tgt_chain = rule_chain_types(rule, blk, blk.by_name(el.tgt))
            if src_chain.get(el.type.level) is None:
                out.append(f"{label}: arrow {el.name} dangles at source over {tel.name}")
            if tgt_chain.get(el.type.level) is None:
                out.append(f"{label}: arrow {el.name} dangles at target over {tel.name}")
    return out


def rule_chain_types(rule: McmtRule, block: PatternBlock, el: Optional[PatternElement]) -> dict:
    if el is None:
        return {}
    out: dict[int, str] = {}
    cur = el
    while cur is not None and cur.type is not None and cur.type.level != ROOT_LEVEL:
        blk = rule.block(cur.type.level)
        tel = blk.by_name(cur.type.name) if blk else None
        if tel is None:
            break
        out[cur.type.level] = tel.name
        cur = tel
    return out


# ---------------------------------------------------------------------------
# Parameter substitution
# ---------------------------------------------------------------------------


def substitute_parameters(rule: McmtRule, bindings: dict) -> McmtRule:
    """Replace every parameter occurrence with its integer value."""
    missing = [p for p in rule.params if p not in bindings]
    if missing:
        raise RuleError(f"unbound parameters: {', '.join(missing)}")

    def subst_value(v: AttrValue) -> AttrValue:
        if v.kind == "param":
            return AttrValue("lit", bindings[v.value])
        if v.kind == "ref" and isinstance(v.delta, str):
            return replace(v, delta=bindings[v.delta])
        return v

    def subst_block(blk: PatternBlock) -> PatternBlock:
        out = PatternBlock()
        for key, el in blk.elements.items():
            out.elements[key] = replace(
                el, attrs={a: subst_value(v) for a, v in el.attrs.items()}
            )
        return out

    return McmtRule(
        rule.name,
        [],
        [subst_block(b) for b in rule.meta],
        subst_block(rule.lhs),
        subst_block(rule.rhs),
    )


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<pot>\d+-(?:\d+|\*)-(?:\d+|\*))
  | (?P<arrowsep>->)
  | (?P<dotdot>\.\.)
  | (?P<num>-?\d+)
  | (?P<str>"[^"]*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9#]*)
  | (?P<sym>[{}()\[\]:;=@$?.+*&])
""",
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    out, line, col, pos = [], 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise RuleError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            out.append(Token("nl", "\n", line, col))
            line += 1
            col = 1
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, tok, line, col))
            col += len(tok)
        else:
            col += len(tok)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        j = self.i
        seen = 0
        while j < len(self.toks):
            if self.toks[j].kind != "nl":
                if seen == k:
                    return self.toks[j]
                seen += 1
            j += 1
        return self.toks[-1]

    def next(self) -> Token:
        while self.toks[self.i].kind == "nl":
            self.i += 1
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise RuleError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_kind(self, kind: str) -> Token:
        t = self.next()
        if t.kind != kind:
            raise RuleError(f"expected {kind}, found {t.text!r}", t.line, t.col)
        return t

    # -- grammar -----------------------------------------------------------

    def parse_rules(self) -> list[McmtRule]:
        rules = []
        while self.peek().kind != "eof":
            rules.append(self.parse_rule())
        return rules

    def parse_rule(self) -> McmtRule:
        self.expect("rule")
        name = self.expect_kind("ident").text
        self.expect("{")
        rule = McmtRule(name)
        while self.peek().text == "param":
            self.next()
            rule.params.append(self.expect_kind("ident").text)
            if self.peek().text == ";":
                self.next()
        self.expect("meta")
        self.expect("{")
        expected = 1
        while self.peek().text != "}":
            t = self.expect_kind("ident")
            if not re.fullmatch(r"mm\d+", t.text):
                raise RuleError(f"expected mm<level>, found {t.text!r}", t.line, t.col)
            lvl = int(t.text[2:])
            if lvl != expected:
                raise RuleError(f"meta levels must be consecutive, found {t.text}", t.line, t.col)
            expected += 1
            self.expect("{")
            blk = PatternBlock()
            self._parse_block_body(blk, allow_assign=False)
            rule.meta.append(blk)
        self.expect("}")
        self.expect("from")
        self.expect("{")
        self._parse_block_body(rule.lhs, allow_assign=True)
        self.expect("to")
        self.expect("{")
        self._parse_block_body(rule.rhs, allow_assign=True)
        self.expect("}")
        return rule

    def _parse_block_body(self, blk: PatternBlock, allow_assign: bool):
        while self.peek().text != "}":
            if self.peek().text == ";":
                self.next()
                continue
            self._parse_statement(blk, allow_assign)
        self.expect("}")

    def _parse_statement(self, blk: PatternBlock, allow_assign: bool):
        name_tok = self.expect_kind("ident")
        name = name_tok.text
        # attribute clause?
        if self.peek().text == ".":
            self.next()
            attr = self.expect_kind("ident").text
            self.expect("=")
            value = self._parse_attr_value(name)
            el = blk.by_name(name)
            if el is None:
                raise RuleError(f"attribute on undeclared element {name}", name_tok.line, name_tok.col)
            el.attrs[attr] = value
            return
        constant = False
        mult: Union[Multiplicity, str, None] = None
        if self.peek().text == "$":
            self.next()
            constant = True
        if self.peek().text == "[":
            self.next()
            first = self.next()
            if first.kind == "num" and self.peek().text == "..":
                self.next()
                hi = self.next()
                mult = Multiplicity(
                    int(first.text), None if hi.text == "*" else int(hi.text)
                )
            elif first.kind == "ident":
                mult = first.text  # symbolic count
            else:
                raise RuleError("bad multiplicity", first.line, first.col)
            self.expect("]")
        type_expr = None
        if self.peek().text == ":":
            self.next()
            tname = self.expect_kind("ident").text
            marker = False
            if self.peek().text == "$":
                self.next()
                marker = True
                constant = True
            level = ROOT_LEVEL
            if self.peek().text == "@":
                self.next()
                lvl_tok = self.expect_kind("ident")
                if not re.fullmatch(r"mm\d+", lvl_tok.text):
                    raise RuleError("expected mm<level>", lvl_tok.line, lvl_tok.col)
                level = int(lvl_tok.text[2:])
            type_expr = TypeExpr(level, tname, marker)
        potency = None
        if self.peek().text == "pot":
            self.next()
            potency = parse_potency(self._parse_potency_text())
        if self.peek().text == "(":
            self.next()
            src = self.expect_kind("ident").text
            self.expect("->")
            tgt = self.expect_kind("ident").text
            self.expect(")")
            if potency is None and self.peek().text == "pot":
                self.next()
                potency = parse_potency(self._parse_potency_text())
            blk.add(
                PatternElement(
                    name, "arrow", constant, type_expr, src, tgt, potency, mult
                )
            )
        else:
            if mult is not None:
                raise RuleError(f"multiplicity on node {name}", name_tok.line, name_tok.col)
            blk.add(PatternElement(name, "node", constant, type_expr, None, None, potency))

    def _parse_potency_text(self) -> str:
        t = self.next()
        if t.kind != "pot":
            raise RuleError(f"expected min-max-depth potency, found {t.text!r}", t.line, t.col)
        return t.text

    def _parse_attr_value(self, owner: str) -> AttrValue:
        t = self.next()
        if t.text == "?":
            return AttrValue("any")
        if t.kind == "num":
            return AttrValue("lit", int(t.text))
        if t.kind == "str":
            return AttrValue("lit", t.text[1:-1])
        if t.kind == "ident":
            if t.text in ("true", "false"):
                return AttrValue("lit", t.text == "true")
            if self.peek().text == ".":
                self.next()
                attr = self.expect_kind("ident").text
                delta: object = 0
                if self.peek().text == "+":
                    self.next()
                    d = self.next()
                    delta = int(d.text) if d.kind == "num" else d.text
                return AttrValue("ref", None, t.text, attr, delta)
            return AttrValue("param", t.text)
        raise RuleError(f"bad attribute value {t.text!r}", t.line, t.col)


def parse_rules(text: str) -> list[McmtRule]:
    """Parse a rule file; raises RuleError with line/column on bad input."""
    rules = _Parser(text).parse_rules()
    seen = set()
    for r in rules:
        if r.name in seen:
            raise RuleError(f"duplicate rule {r.name}")
        seen.add(r.name)
        problems = validate_rule(r)
        if problems:
            raise RuleError(f"rule {r.name}: " + "; ".join(problems))
    return rules


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------


def _render_element(el: PatternElement) -> str:
    out = el.name
    if el.constant and el.type is None:
        out += "$"
    if isinstance(el.mult, str):
        out += f"[{el.mult}]"
    elif isinstance(el.mult, Multiplicity):
        out += f"[{el.mult}]"
    if el.type is not None:
        out += f" : {el.type.name}"
        if el.constant:
            out += "$"
        if el.type.level != ROOT_LEVEL:
            out += f" @ mm{el.type.level}"
    if el.kind == "arrow":
        out += f" ({el.src} -> {el.tgt})"
    if el.potency is not None:
        out += f" pot {el.potency}"
    return out


def _render_block(blk: PatternBlock, indent: str) -> list[str]:
    lines = []
    for el in blk.nodes() + blk.arrows():
        lines.append(indent + _render_element(el))
    for el in blk.nodes() + blk.arrows():
        for attr in sorted(el.attrs):
            lines.append(indent + f"{el.name}.{attr} = {el.attrs[attr].render()}")
    return lines


def render_rule(rule: McmtRule) -> str:
    lines = [f"rule {rule.name} {{"]
    for p in sorted(rule.params):
        lines.append(f"  param {p};")
    lines.append("  meta {")
    for k, blk in enumerate(rule.meta, start=1):
        lines.append(f"    mm{k} {{")
        lines += _render_block(blk, "      ")
        lines.append("    }")
    lines.append("  }")
    lines.append("  from {")
    lines += _render_block(rule.lhs, "    ")
    lines.append("  }")
    lines.append("  to {")
    lines += _render_block(rule.rhs, "    ")
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_rules(rules: list[McmtRule]) -> str:
    return "\n".join(render_rule(r) for r in rules)
