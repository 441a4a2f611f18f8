"""Rule execution: proliferation into plain two-level rules and direct
application by pushout plus final pullback complement, with retyping through
the chain machinery and potency/multiplicity post-filtering.

Only the target model changes; everything above it is read-only.  Created
elements are named after their pattern variables with the smallest unused
``_k`` suffix, recorded in the trace.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chains import ChainMorphism, chain_pushout, inclusion_chain, reduct
from .graph import (
    Arrow,
    Graph,
    GraphMorphism,
    enumerate_homomorphisms,
    final_pullback_complement,
    inclusion,
    pushout_along_inclusion,
)
from .hierarchy import (
    APPLICATION,
    ROOT_MODEL,
    ElementTyping,
    Model,
    Multiplicity,
    System,
    TypeRef,
    domain_between,
    elem_str,
    transitive_types,
    validate_hierarchy,
)
from .matching import Binding, LhsMatch, bind_lhs, match_for_model
from .rules import McmtRule, PatternBlock, PatternElement, RuleError


class NotApplicable(Exception):
    """The match is valid but the rewrite result violates a constraint."""


@dataclass
class ApplicationResult:
    system: System
    model: str
    binding: Binding
    mu: dict
    created: list
    deleted: list
    preserved: list

    def summary(self) -> str:
        c = ",".join(sorted(map(elem_str, self.created)))
        d = ",".join(sorted(map(elem_str, self.deleted)))
        return f"created=[{c}] deleted=[{d}]"


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------


def _fresh_name(base: str, taken: set) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


def _rename_created(rule, mu: dict, target: Graph) -> tuple[dict, dict]:
    """Fresh instance names for created elements: pattern name with the
    smallest unused numeric suffix, avoiding both target and pattern names."""
    iface = rule.interface()
    lhs_keys = set(rule.lhs.elements)
    node_names = set(target.nodes) | {el.name for el in iface.nodes()}
    arrow_names = {a.name for a in target.arrows} | {el.name for el in iface.arrows()}
    fresh_nodes: dict = {}
    for el in iface.nodes():
        if el.key in lhs_keys:
            continue
        fresh = _fresh_name(el.name, node_names)
        node_names.add(fresh)
        fresh_nodes[el.name] = fresh
    fresh_arrows: dict = {}
    for el in iface.arrows():
        if el.key in lhs_keys:
            continue
        fresh = _fresh_name(el.name, arrow_names)
        arrow_names.add(fresh)
        fresh_arrows[el.key] = fresh
    return fresh_nodes, fresh_arrows


def _instance_block_graph(rule, block: PatternBlock, fresh_nodes: dict, fresh_arrows: dict) -> Graph:
    """The block's graph with created elements under their fresh instance
    names; elements also present in the FROM block keep their pattern names
    (which makes the interface inclusion of the FROM graph literal)."""
    lhs_keys = set(rule.lhs.elements)
    nodes = set()
    for el in block.nodes():
        nodes.add(el.name if el.name in {e.name for e in rule.lhs.nodes()} else fresh_nodes.get(el.name, el.name))
    arrows = set()
    for el in block.arrows():
        if el.key in lhs_keys:
            arrows.add(el.key)
        else:
            src = el.src if el.src in {e.name for e in rule.lhs.nodes()} else fresh_nodes[el.src]
            tgt = el.tgt if el.tgt in {e.name for e in rule.lhs.nodes()} else fresh_nodes[el.tgt]
            arrows.add(Arrow(fresh_arrows[el.key], src, tgt))
    return Graph(frozenset(nodes), frozenset(arrows))


# ---------------------------------------------------------------------------
# Direct application
# ---------------------------------------------------------------------------


def apply_rule(
    system: System,
    rule: McmtRule,
    model_name: str,
    lhs_match: LhsMatch,
    postfilter: bool = True,
) -> ApplicationResult:
    """Apply one rule at one match: glue in the interface by a chain-level
    pushout, delete the FROM-only part by final pullback complement, retype
    the result by reduct, then re-validate potency and multiplicity.  Callers
    that guarantee validity themselves may skip the post-filter."""
    from .graph import SubgraphRef

    if rule.params:
        raise RuleError(f"rule {rule.name} has unbound parameters")
    binding = lhs_match.binding
    mu = lhs_match.mu_map()
    model = system.find_model(model_name)
    target = model.graph

    iface = rule.interface()
    lhs_graph = rule.lhs.graph()
    fresh_nodes, fresh_arrows = _rename_created(rule, mu, target)
    i_graph = _instance_block_graph(rule, iface, fresh_nodes, fresh_arrows)
    r_graph = _instance_block_graph(rule, _rhs_block(rule), fresh_nodes, fresh_arrows)

    mu_morph = GraphMorphism(
        lhs_graph,
        target,
        {el.name: mu[el.name] for el in rule.lhs.nodes()},
        {el.key: mu[el.key] for el in rule.lhs.arrows()},
    )

    # typing chains over the binding's stack
    stack = list(binding.stack)
    sigma_s = [domain_between(system, model_name, stack[a]) for a in range(1, len(stack))]
    s_chain = inclusion_chain(target, [s.definedness().to_graph() for s in sigma_s])
    sigma_l = rule.sigma(rule.lhs)
    l_chain = inclusion_chain(lhs_graph, [s.definedness().to_graph() for s in sigma_l])
    i_levels = [
        _rename_level(rule, s.definedness(), fresh_nodes, fresh_arrows)
        for s in rule.sigma(iface)
    ]
    i_chain = inclusion_chain(i_graph, i_levels)

    lam = ChainMorphism(
        l_chain,
        i_chain,
        tuple(range(rule.depth + 1)),
        tuple(
            inclusion(l_chain.levels[i], i_chain.levels[i])
            for i in range(rule.depth + 1)
        ),
    )
    mu_phis = []
    for i in range(rule.depth + 1):
        sub = SubgraphRef(lhs_graph, l_chain.levels[i].nodes, l_chain.levels[i].arrows)
        mu_phis.append(mu_morph.restrict(sub).corestrict(s_chain.levels[binding.f[i]]))
    mu_cm = ChainMorphism(l_chain, s_chain, binding.f, tuple(mu_phis))

    po = chain_pushout(lam, mu_cm)
    delta = po.glued.phis[0]

    fpbc = final_pullback_complement(inclusion(r_graph, i_graph), delta)
    t_graph = fpbc.graph
    # the rewritten chain: every level of the pushout chain cut down to T
    t_chain = reduct(po.chain, tuple(range(len(stack))), fpbc.into_d)
    assert t_chain.base == t_graph

    new_model = _rebuild_model(
        system, rule, model, binding, mu, fresh_nodes, fresh_arrows, t_graph
    )
    new_system = system.replace_model(new_model)

    if postfilter:
        baseline = set(validate_hierarchy(system).violations)
        after = set(validate_hierarchy(new_system).violations)
        fresh_violations = sorted(after - baseline)
        if fresh_violations:
            raise NotApplicable("; ".join(str(v) for v in fresh_violations))

    preserved = sorted(t_graph.nodes & target.nodes) + sorted(t_graph.arrows & target.arrows)
    created = sorted(t_graph.nodes - target.nodes) + sorted(t_graph.arrows - target.arrows)
    deleted = sorted(target.nodes - t_graph.nodes) + sorted(target.arrows - t_graph.arrows)
    return ApplicationResult(
        new_system, model_name, binding, mu, created, deleted, preserved
    )


def _rhs_block(rule: McmtRule) -> PatternBlock:
    return rule.rhs


def _rename_level(rule, sub, fresh_nodes: dict, fresh_arrows: dict) -> Graph:
    lhs_node_names = {e.name for e in rule.lhs.nodes()}
    lhs_keys = set(rule.lhs.elements)
    nodes = {n if n in lhs_node_names else fresh_nodes[n] for n in sub.nodes}
    arrows = set()
    for a in sub.arrows:
        if a in lhs_keys:
            arrows.add(a)
        else:
            src = a.src if a.src in lhs_node_names else fresh_nodes[a.src]
            tgt = a.tgt if a.tgt in lhs_node_names else fresh_nodes[a.tgt]
            arrows.add(Arrow(fresh_arrows[a], src, tgt))
    return Graph(frozenset(nodes), frozenset(arrows))


def _rebuild_model(
    system: System,
    rule: McmtRule,
    model: Model,
    binding: Binding,
    mu: dict,
    fresh_nodes: dict,
    fresh_arrows: dict,
    t_graph: Graph,
) -> Model:
    """Assemble the rewritten model: survivors keep their records, created
    elements are typed by the binding images of their pattern types, and TO
    attribute assignments are applied last."""
    lhs_node_names = {e.name for e in rule.lhs.nodes()}

    def inst_node(name: str) -> str:
        return mu[name] if name in lhs_node_names else fresh_nodes[name]

    def inst_key(el: PatternElement):
        if el.key in rule.lhs.elements:
            return mu[el.key]
        if el.kind == "node":
            return fresh_nodes[el.name]
        return Arrow(fresh_arrows[el.key], inst_node(el.src), inst_node(el.tgt))

    new = Model(model.name, t_graph)
    for e in t_graph.elements():
        if model.graph.has(e):
            if e in model.typings:
                old = model.typings[e]
                new.typings[e] = ElementTyping(old.own, dict(old.supplementary), old.data)
            if e in model.potencies:
                new.potencies[e] = model.potencies[e]
            if isinstance(e, Arrow) and e in model.multiplicities:
                new.multiplicities[e] = model.multiplicities[e]
    new.abstract = model.abstract & t_graph.nodes
    new.inherit_arrows = model.inherit_arrows & t_graph.arrows
    for owner, decls in model.attr_decls.items():
        if owner in t_graph.nodes:
            new.attr_decls[owner] = dict(decls)
    for owner, values in model.attr_values.items():
        if owner in t_graph.nodes:
            new.attr_values[owner] = dict(values)

    # created elements: pattern type -> binding image
    for el in rule.interface().elements.values():
        if el.key in rule.lhs.elements:
            continue
        _type_created(system, rule, binding, new, el, inst_key(el))

    # attribute effects of the TO block
    for el in rule.rhs.elements.values():
        target_key = inst_key(el)
        for attr, clause in sorted(el.attrs.items()):
            if clause.kind == "any":
                continue
            if clause.kind == "lit":
                new.attr_values.setdefault(target_key, {})[attr] = clause.value
            elif clause.kind == "ref":
                src_key = inst_node(clause.elem)
                base = model.attr_values.get(src_key, {}).get(clause.attr)
                if base is None:
                    raise NotApplicable(
                        f"attribute {clause.elem}.{clause.attr} absent in the match"
                    )
                if not isinstance(clause.delta, int):
                    raise RuleError(f"unsubstituted parameter {clause.delta}")
                new.attr_values.setdefault(target_key, {})[attr] = base + clause.delta
            elif clause.kind == "param":
                raise RuleError(f"unsubstituted parameter {clause.value}")
    return new


def _type_created(
    system: System,
    rule: McmtRule,
    binding: Binding,
    new: Model,
    el: PatternElement,
    key,
):
    typing = new.typing(key)
    if el.type is None or el.type.level == 0:
        from .hierarchy import ROOT_ARROW, ROOT_NODE

        typing.own = TypeRef(
            ROOT_MODEL, ROOT_ARROW if isinstance(key, Arrow) else ROOT_NODE
        )
        return
    blk = rule.block(el.type.level)
    tel = blk.by_name(el.type.name)
    bound = binding.lookup(el.type.level, tel.key)
    bound_model = binding.model_at(el.type.level)
    ref = TypeRef(bound_model, bound)
    hier = system.hierarchy_of(bound_model)
    if hier is system.data:
        typing.data = ref
        typing.own = TypeRef(
            ROOT_MODEL,
            Arrow("EReference", "EClass", "EClass") if isinstance(key, Arrow) else "EClass",
        )
    elif hier.dimension == APPLICATION:
        typing.own = ref
    else:
        typing.supplementary[hier.name] = ref
        from .hierarchy import ROOT_ARROW, ROOT_NODE

        typing.own = TypeRef(
            ROOT_MODEL, ROOT_ARROW if isinstance(key, Arrow) else ROOT_NODE
        )


# ---------------------------------------------------------------------------
# Application discovery
# ---------------------------------------------------------------------------


def list_applications(
    system: System, rules: list[McmtRule], model_name: str
) -> list[tuple[McmtRule, LhsMatch]]:
    """Every applicable (rule, match) pair for the model, canonically ordered
    and post-filtered by a dry-run application."""
    out = []
    for rule in rules:
        if rule.params:
            continue
        found, bindings = match_for_model(system, rule, model_name)
        for b in bindings:
            for m in bind_lhs(system, rule, b, model_name):
                try:
                    apply_rule(system, rule, model_name, m)
                except NotApplicable:
                    continue
                out.append((rule, m))
    out.sort(key=lambda rm: (rm[0].name, rm[1].sort_key()))
    return out


# ---------------------------------------------------------------------------
# Proliferation
# ---------------------------------------------------------------------------


@dataclass
class TwoLevelRule:
    """A concrete rule over one flattened type graph, produced from a coupled
    rule and one binding by replacing variable types with their images."""

    name: str
    source: str
    binding: Binding
    lhs: PatternBlock
    rhs: PatternBlock
    types: dict  # pattern key -> TypeRef

    def interface(self) -> PatternBlock:
        out = PatternBlock()
        for el in list(self.lhs.elements.values()) + list(self.rhs.elements.values()):
            out.elements.setdefault(el.key, el)
        return out

    def type_graph(self) -> Graph:
        nodes, arrows = set(), set()
        for ref in self.types.values():
            if isinstance(ref.elem, Arrow):
                arrows.add(ref.elem)
                nodes.update((ref.elem.src, ref.elem.tgt))
            else:
                nodes.add(ref.elem)
        return Graph(frozenset(nodes), frozenset(arrows))


def proliferate(system: System, rule: McmtRule, model_name: str) -> list[TwoLevelRule]:
    """One two-level rule per complete binding: FROM/TO variable types are
    replaced by their binding images and the META block drops away."""
    found, bindings = match_for_model(system, rule, model_name)
    out = []
    for k, b in enumerate(bindings, start=1):
        types = {}
        iface = rule.interface()
        ok = True
        for el in iface.elements.values():
            if el.type is None or el.type.level == 0:
                continue
            blk = rule.block(el.type.level)
            tel = blk.by_name(el.type.name)
            bound = b.lookup(el.type.level, tel.key)
            if bound is None:
                ok = False
                break
            types[el.key] = TypeRef(b.model_at(el.type.level), bound)
        if not ok:
            continue
        out.append(
            TwoLevelRule(f"{rule.name}#{k}", rule.name, b, rule.lhs, rule.rhs, types)
        )
    return out


def render_two_level_rule(tlr: TwoLevelRule) -> str:
    """Print a proliferated rule in the rule grammar, with its flattened type
    graph as a single constant meta level."""
    tg = tlr.type_graph()
    lines = [f"rule {tlr.name} {{", "  meta {", "    mm1 {"]
    for n in sorted(tg.nodes):
        lines.append(f"      {n}$")
    for a in sorted(tg.arrows):
        lines.append(f"      {a.name}$ ({a.src} -> {a.tgt})")
    lines += ["    }", "  }"]
    for label, blk in (("from", tlr.lhs), ("to", tlr.rhs)):
        lines.append(f"  {label} {{")
        for el in blk.nodes() + blk.arrows():
            ref = tlr.types.get(el.key)
            tname = (
                (ref.elem.name if isinstance(ref.elem, Arrow) else ref.elem)
                if ref
                else None
            )
            txt = el.name
            if tname:
                txt += f" : {tname} @ mm1"
            if el.kind == "arrow":
                txt += f" ({el.src} -> {el.tgt})"
            lines.append(f"    {txt}")
        for el in blk.nodes() + blk.arrows():
            for attr in sorted(el.attrs):
                lines.append(f"    {el.name}.{attr} = {el.attrs[attr].render()}")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def two_level_matches(system: System, tlr: TwoLevelRule, model_name: str) -> list[dict]:
    """Matches of a proliferated rule's FROM block: injective homomorphisms
    whose images are transitively typed by the concrete types."""
    model = system.find_model(model_name)
    target = Graph(model.graph.nodes, frozenset(model.plain_arrows()))
    pattern = tlr.lhs.graph()

    def cands(el):
        ref = tlr.types.get(el.key)
        pool = sorted(target.nodes) if el.kind == "node" else sorted(target.arrows)
        keep = []
        for x in pool:
            if el.constant and (x.name if isinstance(x, Arrow) else x) != el.name:
                continue
            if ref is not None:
                tt = transitive_types(system, model_name, x)
                if tt.get(ref.model) != ref.elem:
                    continue
            if not _attr_match(model, el, x):
                continue
            keep.append(x)
        return keep

    node_candidates = {el.name: cands(el) for el in tlr.lhs.nodes()}
    arrow_candidates = {el.key: cands(el) for el in tlr.lhs.arrows()}
    if any(not v for v in node_candidates.values()) or any(
        not v for v in arrow_candidates.values()
    ):
        return []
    hits = enumerate_homomorphisms(
        pattern,
        target,
        injective=True,
        node_candidates=node_candidates,
        arrow_candidates=arrow_candidates,
    )
    out = []
    for m in hits:
        a = {}
        a.update(m.nodes)
        a.update(m.arrows)
        out.append(a)
    return out


def _attr_match(model: Model, el: PatternElement, key) -> bool:
    for attr, clause in el.attrs.items():
        if clause.kind == "ref":
            continue
        have = model.attr_values.get(key, {})
        if attr not in have:
            return False
        if clause.kind == "lit" and have[attr] != clause.value:
            return False
    return True


def apply_two_level(
    system: System, tlr: TwoLevelRule, model_name: str, mu: dict
) -> ApplicationResult:
    """Standard co-span rewrite of a proliferated rule: plain pushout along
    the interface inclusion, then final pullback complement; created elements
    are typed directly by the rule's concrete types."""
    model = system.find_model(model_name)
    target = model.graph
    lhs_graph = tlr.lhs.graph()

    pseudo = McmtRule(tlr.name, [], [], tlr.lhs, tlr.rhs)
    iface = pseudo.interface()
    fresh_nodes, fresh_arrows = _rename_created(pseudo, mu, target)
    i_graph = _instance_block_graph(pseudo, iface, fresh_nodes, fresh_arrows)
    r_graph = _instance_block_graph(pseudo, tlr.rhs, fresh_nodes, fresh_arrows)

    mu_morph = GraphMorphism(
        lhs_graph,
        target,
        {el.name: mu[el.name] for el in tlr.lhs.nodes()},
        {el.key: mu[el.key] for el in tlr.lhs.arrows()},
    )
    po = pushout_along_inclusion(inclusion(lhs_graph, i_graph), mu_morph)
    fpbc = final_pullback_complement(inclusion(r_graph, i_graph), po.glued)
    t_graph = fpbc.graph

    lhs_node_names = {e.name for e in tlr.lhs.nodes()}

    def inst_node(name: str) -> str:
        return mu[name] if name in lhs_node_names else fresh_nodes[name]

    def inst_key(el: PatternElement):
        if el.key in tlr.lhs.elements:
            return mu[el.key]
        if el.kind == "node":
            return fresh_nodes[el.name]
        return Arrow(fresh_arrows[el.key], inst_node(el.src), inst_node(el.tgt))

    new = Model(model.name, t_graph)
    for e in t_graph.elements():
        if model.graph.has(e):
            if e in model.typings:
                old = model.typings[e]
                new.typings[e] = ElementTyping(old.own, dict(old.supplementary), old.data)
            if e in model.potencies:
                new.potencies[e] = model.potencies[e]
            if isinstance(e, Arrow) and e in model.multiplicities:
                new.multiplicities[e] = model.multiplicities[e]
    new.abstract = model.abstract & t_graph.nodes
    new.inherit_arrows = model.inherit_arrows & t_graph.arrows
    for owner, values in model.attr_values.items():
        if owner in t_graph.nodes:
            new.attr_values[owner] = dict(values)
    for owner, decls in model.attr_decls.items():
        if owner in t_graph.nodes:
            new.attr_decls[owner] = dict(decls)

    from .hierarchy import ROOT_ARROW, ROOT_NODE

    for el in iface.elements.values():
        if el.key in tlr.lhs.elements:
            continue
        key = inst_key(el)
        ref = tlr.types.get(el.key)
        t = new.typing(key)
        default = TypeRef(ROOT_MODEL, ROOT_ARROW if isinstance(key, Arrow) else ROOT_NODE)
        if ref is None:
            t.own = default
        else:
            hier = system.hierarchy_of(ref.model)
            if hier is system.data:
                t.data = ref
                t.own = default
            elif hier.dimension == APPLICATION:
                t.own = ref
            else:
                t.supplementary[hier.name] = ref
                t.own = default

    for el in tlr.rhs.elements.values():
        target_key = inst_key(el)
        for attr, clause in sorted(el.attrs.items()):
            if clause.kind == "lit":
                new.attr_values.setdefault(target_key, {})[attr] = clause.value
            elif clause.kind == "ref":
                src_key = inst_node(clause.elem)
                base = model.attr_values.get(src_key, {}).get(clause.attr)
                if base is not None and isinstance(clause.delta, int):
                    new.attr_values.setdefault(target_key, {})[attr] = base + clause.delta

    new_system = system.replace_model(new)
    baseline = set(validate_hierarchy(system).violations)
    after = set(validate_hierarchy(new_system).violations)
    fresh = sorted(after - baseline)
    if fresh:
        raise NotApplicable("; ".join(map(str, fresh)))
    created = sorted(t_graph.nodes - target.nodes) + sorted(t_graph.arrows - target.arrows)
    deleted = sorted(target.nodes - t_graph.nodes) + sorted(target.arrows - t_graph.arrows)
    preserved = sorted(t_graph.nodes & target.nodes) + sorted(t_graph.arrows & target.arrows)
    return ApplicationResult(
        new_system, model_name, tlr.binding, mu, created, deleted, preserved
    )


# ---------------------------------------------------------------------------
# Cardinality-driven expansion
# ---------------------------------------------------------------------------


def expand_cardinality_variants(
    system: System,
    rule: McmtRule,
    binding: Binding,
    model_name: str,
    cap: int = 8,
) -> list[McmtRule]:
    """Concretize counted patterns for one binding.

    A bottom meta-level arrow whose binding image carries a bounded
    multiplicity makes the instance elements of its target type replicate once
    per possible count (one rule variant per count when the bounds differ).
    A FROM/TO arrow with the symbolic [n] multiplicity replicates its target
    node per the count observed in the target model, capped."""
    jobs: list[tuple[set, list[int]]] = []
    if rule.depth:
        blk = rule.meta_level(rule.depth)
        for el in blk.arrows():
            bound = binding.lookup(rule.depth, el.key)
            if not isinstance(bound, Arrow):
                continue
            tmodel = system.find_model(binding.model_at(rule.depth))
            mult = tmodel.multiplicity(bound)
            if mult.max is None:
                continue
            counts = list(range(max(mult.min, 1), min(mult.max, cap) + 1))
            pivots = {
                e.name
                for b in (rule.lhs, rule.rhs)
                for e in b.nodes()
                if e.type is not None
                and e.type.level == rule.depth
                and e.type.name == el.tgt
            }
            if pivots and counts != [1]:
                jobs.append((pivots, counts))
    for el in list(rule.lhs.arrows()) + [
        a for a in rule.rhs.arrows() if a.key not in rule.lhs.elements
    ]:
        if isinstance(el.mult, str):
            n = min(_observed_count(system, rule, binding, model_name, el), cap)
            jobs.append(({el.tgt}, [max(n, 0)]))
    if not jobs:
        return [rule]
    variants = [rule]
    for pivots, counts in jobs:
        expanded = []
        for base_rule in variants:
            for c in counts:
                expanded.append(_replicate(base_rule, pivots, c))
        variants = expanded
    return variants


def _observed_count(system, rule, binding, model_name, el) -> int:
    """Resolve a symbolic [n] multiplicity: how many target elements could
    play the replicated endpoint, given the binding."""
    blk = rule.lhs if el.key in rule.lhs.elements else rule.rhs
    tgt_el = blk.by_name(el.tgt) or rule.interface().by_name(el.tgt)
    if tgt_el is None or tgt_el.type is None or tgt_el.type.level == 0:
        return 1
    tblk = rule.block(tgt_el.type.level)
    tel = tblk.by_name(tgt_el.type.name)
    bound = binding.lookup(tgt_el.type.level, tel.key)
    ref_model = binding.model_at(tgt_el.type.level)
    from .hierarchy import TypeRef, has_type

    count = 0
    model = system.find_model(model_name)
    for n in sorted(model.graph.nodes):
        if has_type(system, model_name, n, TypeRef(ref_model, bound)):
            count += 1
    return count


def _replicate(rule: McmtRule, pivots: set, copies: int) -> McmtRule:
    """Duplicate the pivot nodes of the FROM/TO blocks (and their incident
    pattern arrows) so the pattern demands exactly `copies` instances."""
    import copy as _copy

    out = McmtRule(
        f"{rule.name}x{copies}", list(rule.params), rule.meta, PatternBlock(), PatternBlock()
    )

    def clone_block(blk: PatternBlock) -> PatternBlock:
        nb = PatternBlock()
        for el in blk.nodes():
            nb.add(_copy.deepcopy(el))
            if el.name in pivots:
                for k in range(2, copies + 1):
                    c = _copy.deepcopy(el)
                    c.name = f"{el.name}_{k}"
                    nb.add(c)
        for el in blk.arrows():
            cloned = _copy.deepcopy(el)
            cloned.mult = None if isinstance(el.mult, str) else el.mult
            nb.add(cloned)
            if el.src in pivots or el.tgt in pivots:
                for k in range(2, copies + 1):
                    c = _copy.deepcopy(el)
                    c.name = f"{el.name}_{k}"
                    c.src = f"{el.src}_{k}" if el.src in pivots else el.src
                    c.tgt = f"{el.tgt}_{k}" if el.tgt in pivots else el.tgt
                    c.mult = None
                    nb.add(c)
        return nb

    out.lhs = clone_block(rule.lhs)
    out.rhs = clone_block(rule.rhs)
    return out
