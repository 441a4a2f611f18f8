"""Independent reference constructions the implementation is checked against.

Everything here is deliberately written with different machinery than the
library: the pushout is a quotient of a disjoint sum, the final pullback
complement is found by enumerating all subgraphs, temporal rewriting runs on
plain tuples, and bindings are enumerated by unfiltered homomorphism search.
"""

from __future__ import annotations

import itertools

from mlmkit.graph import (
    Arrow,
    Graph,
    GraphMorphism,
    enumerate_homomorphisms,
    enumerate_subgraphs,
)


# ---------------------------------------------------------------------------
# Pushout by quotient of a disjoint sum
# ---------------------------------------------------------------------------


class _Union:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def quotient_pushout(phi: GraphMorphism, psi: GraphMorphism):
    """Pushout of K <-psi- G -phi-> H as a quotient of the disjoint union of
    H and K by the equivalence generated by phi(x) ~ psi(x).  Returns the
    graph and the two legs; element names are canonical class representatives.
    """
    g, h, k = phi.dom, phi.cod, psi.cod
    uf = _Union()
    for n in g.nodes:
        uf.union(("H", phi.nodes[n]), ("K", psi.nodes[n]))
    for a in g.arrows:
        uf.union(("H", phi.arrows[a]), ("K", psi.arrows[a]))
    for n in h.nodes:
        uf.find(("H", n))
    for n in k.nodes:
        uf.find(("K", n))
    for a in h.arrows:
        uf.find(("H", a))
    for a in k.arrows:
        uf.find(("K", a))

    def node_class(tag, n):
        root = uf.find((tag, n))
        members = sorted(
            f"{t}.{x}" for (t, x), _ in uf.parent.items() if uf.find((t, x)) == root and not isinstance(x, Arrow)
        )
        return "|".join(members)

    def arrow_class(tag, a):
        root = uf.find((tag, a))
        members = sorted(
            f"{t}.{x!r}"
            for (t, x), _ in uf.parent.items()
            if uf.find((t, x)) == root and isinstance(x, Arrow)
        )
        rep = next(
            (t, x) for (t, x), _ in uf.parent.items() if uf.find((t, x)) == root and isinstance(x, Arrow)
        )
        t, x = rep
        src = node_class(t, x.src)
        tgt = node_class(t, x.tgt)
        return Arrow("|".join(members), src, tgt)

    nodes = {node_class("H", n) for n in h.nodes} | {node_class("K", n) for n in k.nodes}
    arrows = {arrow_class("H", a) for a in h.arrows} | {arrow_class("K", a) for a in k.arrows}
    p = Graph(frozenset(nodes), frozenset(arrows))
    leg_h = GraphMorphism(
        h, p, {n: node_class("H", n) for n in h.nodes}, {a: arrow_class("H", a) for a in h.arrows}
    )
    leg_k = GraphMorphism(
        k, p, {n: node_class("K", n) for n in k.nodes}, {a: arrow_class("K", a) for a in k.arrows}
    )
    return p, leg_k, leg_h


def isomorphic(g1: Graph, g2: Graph) -> bool:
    if len(g1.nodes) != len(g2.nodes) or len(g1.arrows) != len(g2.arrows):
        return False
    hits = enumerate_homomorphisms(g1, g2, injective=True)
    return any(
        set(m.nodes.values()) == set(g2.nodes) and set(m.arrows.values()) == set(g2.arrows)
        for m in hits
    )


def pushout_isomorphism(p1, leg_k1, leg_h1, p2, leg_k2, leg_h2) -> bool:
    """Do the two cocones present the same pushout?  There must be an
    isomorphism commuting with both legs."""
    if len(p1.nodes) != len(p2.nodes) or len(p1.arrows) != len(p2.arrows):
        return False
    node_cands = {}
    for n in p1.nodes:
        want = set()
        for x, img in leg_k1.nodes.items():
            if img == n:
                want.add(leg_k2.nodes[x])
        for x, img in leg_h1.nodes.items():
            if img == n:
                want.add(leg_h2.nodes[x])
        if len(want) > 1:
            return False
        node_cands[n] = sorted(want) if want else sorted(p2.nodes)
    arrow_cands = {}
    for a in p1.arrows:
        want = set()
        for x, img in leg_k1.arrows.items():
            if img == a:
                want.add(leg_k2.arrows[x])
        for x, img in leg_h1.arrows.items():
            if img == a:
                want.add(leg_h2.arrows[x])
        if len(want) > 1:
            return False
        arrow_cands[a] = sorted(want) if want else sorted(p2.arrows)
    hits = enumerate_homomorphisms(
        p1, p2, injective=True, node_candidates=node_cands, arrow_candidates=arrow_cands
    )
    return any(
        set(m.nodes.values()) == set(p2.nodes) and set(m.arrows.values()) == set(p2.arrows)
        for m in hits
    )


def mediating_morphisms(p, leg_k, leg_h, x, cone_k, cone_h):
    """All morphisms p -> x commuting with both cocones; the universal
    property demands exactly one."""
    node_cands = {}
    for n in p.nodes:
        want = set()
        for a, img in leg_k.nodes.items():
            if img == n:
                want.add(cone_k.nodes[a])
        for a, img in leg_h.nodes.items():
            if img == n:
                want.add(cone_h.nodes[a])
        if len(want) > 1:
            return []
        node_cands[n] = sorted(want) if want else sorted(x.nodes)
    arrow_cands = {}
    for a in p.arrows:
        want = set()
        for b, img in leg_k.arrows.items():
            if img == a:
                want.add(cone_k.arrows[b])
        for b, img in leg_h.arrows.items():
            if img == a:
                want.add(cone_h.arrows[b])
        if len(want) > 1:
            return []
        arrow_cands[a] = sorted(want) if want else sorted(x.arrows)
    return enumerate_homomorphisms(
        p, x, node_candidates=node_cands, arrow_candidates=arrow_cands
    )


# ---------------------------------------------------------------------------
# Final pullback complement by exhaustive subgraph search
# ---------------------------------------------------------------------------


def fpbc_by_enumeration(rho: GraphMorphism, delta: GraphMorphism):
    """Largest subgraph T of D whose delta-preimage is exactly R (None when no
    subgraph qualifies)."""
    r, i, d = rho.dom, delta.dom, delta.cod
    best = None
    for sub in enumerate_subgraphs(d):
        pre_nodes = {n for n in i.nodes if delta.nodes[n] in sub.nodes}
        pre_arrows = {a for a in i.arrows if delta.arrows[a] in sub.arrows}
        if pre_nodes == set(r.nodes) and pre_arrows == set(r.arrows):
            if best is None or sub.to_graph().size > best.size:
                best = sub.to_graph()
    return best


# ---------------------------------------------------------------------------
# Temporal terms
# ---------------------------------------------------------------------------


def term_unroll(t):
    op = t[0]
    if op in ("const", "atom"):
        return t
    if op == "not":
        return ("not", term_unroll(t[1]))
    if op == "X":
        return t
    if op in ("and", "or", "impl"):
        return (op, term_unroll(t[1]), term_unroll(t[2]))
    if op == "F":
        return ("or", term_unroll(t[1]), ("X", t))
    if op == "G":
        return ("and", term_unroll(t[1]), ("X", t))
    if op == "U":
        return ("or", term_unroll(t[2]), ("and", term_unroll(t[1]), ("X", t)))
    if op == "R":
        return ("and", term_unroll(t[2]), ("or", term_unroll(t[1]), ("X", t)))
    raise ValueError(op)


def term_simplify(t):
    op = t[0]
    if op in ("const", "atom"):
        return t
    if op in ("not", "X", "F", "G"):
        s = term_simplify(t[1])
        if op == "not" and s[0] == "const":
            return ("const", not s[1])
        if op == "F" and s == ("const", True):
            return s
        if op == "G" and s == ("const", False):
            return s
        return (op, s)
    l, r = term_simplify(t[1]), term_simplify(t[2])
    if op == "and":
        if ("const", False) in (l, r):
            return ("const", False)
        if l == ("const", True):
            return r
        if r == ("const", True):
            return l
    if op == "or":
        if ("const", True) in (l, r):
            return ("const", True)
        if l == ("const", False):
            return r
        if r == ("const", False):
            return l
    if op == "impl":
        if l == ("const", False) or r == ("const", True):
            return ("const", True)
        if l == ("const", True):
            return r
        if r == ("const", False):
            return term_simplify(("not", l))
    if op == "U":
        if r == ("const", True):
            return ("const", True)
        if l == ("const", False):
            return r
    if op == "R":
        if r == ("const", False):
            return ("const", False)
        if l == ("const", True):
            return r
    return (op, l, r)


def term_strip_next(t):
    op = t[0]
    if op in ("const", "atom"):
        return t
    if op == "X":
        return term_strip_next(t[1])
    if op in ("not", "F", "G"):
        return (op, term_strip_next(t[1]))
    return (op, term_strip_next(t[1]), term_strip_next(t[2]))


def term_step(t):
    return term_simplify(term_strip_next(term_simplify(term_unroll(t))))


# ---------------------------------------------------------------------------
# Brute-force binding enumeration
# ---------------------------------------------------------------------------


def brute_force_bindings(system, rule, stack):
    """Every (f, beta family) built by unfiltered level assignment and
    injective homomorphism search, kept iff all binding requirements hold:
    constants by name, types through the earlier levels, narrowing bounds.
    Written against the same postconditions but via plain enumeration."""
    from mlmkit.hierarchy import Multiplicity, type_closure
    from mlmkit.matching import ROOT_IDENTITY

    n = rule.depth
    positions = range(1, len(stack))
    results = []
    for combo in itertools.combinations(positions, n):
        f = (0,) + combo
        level_maps = [dict(ROOT_IDENTITY)]
        families = [level_maps]
        ok_combo = True
        families = [[dict(ROOT_IDENTITY)]]
        for i in range(1, n + 1):
            blk = rule.meta_level(i)
            model = system.find_model(stack[f[i]])
            target = Graph(model.graph.nodes, frozenset(model.plain_arrows()))
            hits = enumerate_homomorphisms(blk.graph(), target, injective=True)
            level_options = []
            for m in hits:
                assignment = {}
                assignment.update(m.nodes)
                assignment.update(m.arrows)
                level_options.append(assignment)
            if not level_options:
                ok_combo = False
                break
            families = [fam + [opt] for fam in families for opt in level_options]
        if not ok_combo:
            continue
        for fam in families:
            if _binding_ok(system, rule, stack, f, fam):
                results.append((f, fam))
    return results


def _binding_ok(system, rule, stack, f, fam):
    from mlmkit.hierarchy import Multiplicity, type_closure

    for i in range(1, rule.depth + 1):
        blk = rule.meta_level(i)
        model = system.find_model(stack[f[i]])
        for el in blk.elements.values():
            img = fam[i][el.key]
            img_name = img.name if isinstance(img, Arrow) else img
            if el.constant and img_name != el.name:
                return False
            if el.type is not None and el.type.level > 0:
                tblk = rule.block(el.type.level)
                tel = tblk.by_name(el.type.name)
                bound = fam[el.type.level].get(tel.key)
                refs = {
                    (t.model, t.elem)
                    for t in type_closure(system, stack[f[i]], img)
                    if t.steps > 0 or (t.model, t.elem) != (stack[f[i]], img)
                }
                if (stack[f[el.type.level]], bound) not in refs:
                    return False
            if isinstance(el.mult, Multiplicity):
                if not isinstance(img, Arrow):
                    return False
                if not el.mult.narrows(model.multiplicity(img)):
                    return False
            if el.potency is not None:
                from mlmkit.hierarchy import effective_potency

                if not el.potency.narrows(effective_potency(system, stack[f[i]], img)):
                    return False
    return True
