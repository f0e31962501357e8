"""Networks of bipartite pure states and the GMNL certification pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .behavior import Behavior, Bipartition, Scenario, canonical_bipartitions, tensor_product
from .errors import (ConnectivityError, GMNLError, InvalidNetworkError, MappingError,
                     ShapeError)
from .hardy import HardyParams, build_hardy_measurements, hardy_success_probability
from .inequality import (LiftingSpec, LinearFunctional, chsh_functional, combine_gmnl,
                         evaluate, evaluate_group, evaluate_tables, _components)
from .polytope import (HybridClass, bipartite_epr2_decomposition, membership_in_Bn,
                       sample_hybrid_behavior)
from .quantum import (DEFAULT_CLASS_TOL, Entanglement, MeasurementFamily,
                      StateVector, born_behavior, classify_entanglement, schmidt_decompose)

CERTIFIED = "GMNL-certified"
BOUNDED = "bounded-evidence"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    state: StateVector
    id: int


@dataclass(frozen=True)
class NetworkGraph:
    """Parties are vertices, bipartite pure states are edges.

    The first subsystem of each edge state belongs to party ``i``.
    """

    n_parties: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(self.edges)
        ids = set()
        for e in edges:
            if e.i == e.j:
                raise InvalidNetworkError(f"edge {e.id} joins party {e.i} to itself")
            if not (0 <= e.i < self.n_parties and 0 <= e.j < self.n_parties):
                raise InvalidNetworkError(f"edge {e.id} names a party outside 0..{self.n_parties - 1}")
            if e.state.n_parties != 2:
                raise InvalidNetworkError(f"edge {e.id} state is not bipartite")
            if e.id in ids:
                raise InvalidNetworkError(f"duplicate edge id {e.id}")
            ids.add(e.id)
        object.__setattr__(self, "edges", tuple(sorted(edges, key=lambda e: e.id)))

    @classmethod
    def from_edges(cls, n_parties, triples):
        """``triples`` of ``(i, j, state)``; ids are assigned 1, 2, ... in order."""
        return cls(n_parties, tuple(Edge(i, j, s, k + 1) for k, (i, j, s) in enumerate(triples)))

    def edge(self, k) -> Edge:
        for e in self.edges:
            if e.id == k:
                return e
        raise KeyError(k)

    def incident(self, p):
        """Sorted ids of the edges at party ``p`` (the set E_p)."""
        return [e.id for e in self.edges if p in (e.i, e.j)]

    def slot(self, p, k):
        """Digit position of edge ``k`` inside party ``p``."""
        return self.incident(p).index(k)

    def components(self):
        return _components(self.n_parties, [(e.i, e.j) for e in self.edges])

    def to_json(self):
        return {"parties": self.n_parties,
                "edges": [{"i": e.i, "j": e.j, "id": e.id, "state": e.state.to_json()}
                          for e in self.edges]}

    @classmethod
    def from_json(cls, data):
        if "parties" not in data or "edges" not in data:
            raise InvalidNetworkError("network JSON needs 'parties' and 'edges'")
        edges = []
        for k, e in enumerate(data["edges"]):
            for key in ("i", "j", "state"):
                if key not in e:
                    raise InvalidNetworkError(f"edges[{k}] is missing field '{key}'")
            edges.append(Edge(int(e["i"]), int(e["j"]), StateVector.from_json(e["state"]),
                              int(e.get("id", k + 1))))
        return cls(int(data["parties"]), tuple(edges))


def spanning_tree(g: NetworkGraph) -> NetworkGraph:
    """Keep edges in increasing id order whenever they join two new components."""
    comps = g.components()
    if len(comps) > 1:
        raise ConnectivityError(f"network is disconnected: components {comps}", components=comps)
    parent = list(range(g.n_parties))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    kept = []
    for e in g.edges:
        ri, rj = find(e.i), find(e.j)
        if ri != rj:
            parent[ri] = rj
            kept.append(e)
    return NetworkGraph(g.n_parties, tuple(kept))


@dataclass
class EdgeClassification:
    classes: dict  # edge id -> EntanglementClass
    case: int
    hardy_edges: list  # edge ids, k <= K
    maxent_edges: list  # edge ids, k > K


def classify_edges(g: NetworkGraph, tol: float = DEFAULT_CLASS_TOL) -> EdgeClassification:
    classes = {}
    for e in g.edges:
        ent = classify_entanglement(schmidt_decompose(e.state), tol)
        if ent.kind is Entanglement.SEPARABLE:
            raise InvalidNetworkError(f"edge {e.id} carries a separable state")
        classes[e.id] = ent
    hardy = [k for k, c in classes.items() if c.kind is Entanglement.PARTIALLY_ENTANGLED]
    maxent = [k for k, c in classes.items() if c.kind is Entanglement.MAXIMALLY_ENTANGLED]
    case = 1 if not maxent else 2 if not hardy else 3
    return EdgeClassification(classes, case, hardy, maxent)


def chsh_measurements(sf, tol: float = DEFAULT_CLASS_TOL):
    """CHSH-optimal qubit observables on the two leading Schmidt components.

    Alice measures Z and X, Bob (Z + X)/sqrt2 and (Z - X)/sqrt2 in the Schmidt
    bases; the part of each space outside those components goes to outcome 1.
    """
    u, v = sf.left_basis, sf.right_basis
    if sf.coefficients.size < 2 or sf.coefficients[1] <= tol:
        raise InvalidNetworkError("CHSH measurements need Schmidt rank >= 2")

    def family(basis, angles):
        d = basis.shape[1]
        effects = np.zeros((2, 2, d, d), dtype=complex)
        for x, theta in enumerate(angles):
            # +1 eigenvector of cos(theta) Z + sin(theta) X.
            ket = math.cos(theta / 2) * basis[0] + math.sin(theta / 2) * basis[1]
            p0 = np.outer(ket, ket.conj())
            effects[x, 0], effects[x, 1] = p0, np.eye(d) - p0
        return MeasurementFamily(effects)

    # Conjugate coefficients on Bob's side are unnecessary: the coefficients are real.
    return family(u, (0.0, math.pi / 2)), family(v, (math.pi / 4, -math.pi / 4))


def assemble_network_behavior(g: NetworkGraph, assignments) -> Behavior:
    """Product of per-edge Born behaviors; edge ``k`` sits on digit ``slot(p, k)`` of each endpoint."""
    parts = []
    for e in g.edges:
        if e.id not in assignments:
            raise MappingError(f"no measurements assigned to edge {e.id}")
        fam_i, fam_j = assignments[e.id]
        beh = born_behavior(e.state, [fam_i, fam_j])
        parts.append((beh, [(e.i, g.slot(e.i, e.id)), (e.j, g.slot(e.j, e.id))]))
    isolated = [p for p in range(g.n_parties) if not g.incident(p)]
    if isolated:
        raise MappingError(f"parties {isolated} hold no edge")
    return tensor_product(parts)


def edge_marginal(g: NetworkGraph, b: Behavior, k: int) -> Behavior:
    """Bipartite behavior of edge ``k``: other digits at input 0, outputs summed."""
    e = g.edge(k)
    n = g.n_parties
    dig = [b.scenario.party_digits(p) for p in range(n)]
    view = b.table.reshape([x for p in range(n) for x, _ in dig[p]] +
                           [a for p in range(n) for _, a in dig[p]])
    keep = [(e.i, g.slot(e.i, k)), (e.j, g.slot(e.j, k))]
    flat_keys = [(p, d) for p in range(n) for d in range(len(dig[p]))]
    index = [slice(None) if key in keep else 0 for key in flat_keys]
    n_digits = len(flat_keys)
    sum_axes = tuple(n_digits + a for a, key in enumerate(flat_keys) if key not in keep)
    t = view.sum(axis=sum_axes)[tuple(index)]
    return Behavior(Scenario(tuple(dig[p][d][0] for p, d in keep),
                             tuple(dig[p][d][1] for p, d in keep)), t)


def lifting_specs(g: NetworkGraph, edge_ids, marginal_edges=()):
    marginal = frozenset((p, g.slot(p, k)) for k in marginal_edges
                         for p in (g.edge(k).i, g.edge(k).j))
    return [LiftingSpec(edge=k, i=g.edge(k).i, j=g.edge(k).j,
                        digit_i=g.slot(g.edge(k).i, k), digit_j=g.slot(g.edge(k).j, k),
                        marginal_digits=marginal) for k in edge_ids]


def coarse_grain_center(g: NetworkGraph, b: Behavior) -> Behavior:
    """Three-party path: the center feeds one input to both digits and outputs their parity."""
    if g.n_parties != 3 or len(g.edges) != 2:
        raise ShapeError("coarse graining is defined for three-party trees")
    center = [p for p in range(3) if len(g.incident(p)) == 2][0]
    n = 3
    sc = b.scenario
    if any(sc.party_digits(p) != ((2, 2),) for p in range(3) if p != center) or \
            sc.party_digits(center) != ((2, 2), (2, 2)):
        raise ShapeError("coarse graining needs binary digits")
    t = b.table
    new = np.zeros((2,) * (2 * n))
    out = [0] * n
    for idx in np.ndindex(*([2] * (2 * n + 1))):
        x = idx[:n]
        a = list(idx[n:2 * n])
        a2 = idx[2 * n]  # second output digit of the center
        xin = list(x)
        xin[center] = 2 * x[center] + x[center]
        aa = list(a)
        aa[center] = 2 * a[center] + a2
        out = list(a)
        out[center] = a[center] ^ a2
        new[tuple(x) + tuple(out)] += t[tuple(xin) + tuple(aa)]
    return Behavior(Scenario((2,) * n, (2,) * n), new)


# -- certification ----------------------------------------------------------

@dataclass
class CertifyOptions:
    hardy: HardyParams = field(default_factory=HardyParams)
    tol_zero: float = 1e-12
    tol_value: float = 1e-10
    tol_lp: float = 1e-9
    tol_class: float = DEFAULT_CLASS_TOL
    hclass: HybridClass = HybridClass.NS_RESTRICTED
    soundness_samples: int = 500
    soundness_tol: float = 1e-9
    seed: int = 0
    best_effort: bool = False


@dataclass
class CertificationReport:
    case: int | None
    verdict: str
    explanation: str
    edge_classes: dict = field(default_factory=dict)
    tree_edges: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    behavior: Behavior | None = None
    functional: LinearFunctional | None = None
    value: float | None = None
    checks: dict = field(default_factory=dict)
    lp: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict == CERTIFIED

    def to_json(self, witness: bool = True):
        out = {
            "case": self.case,
            "verdict": self.verdict,
            "explanation": self.explanation,
            "edges": {str(k): str(v) for k, v in self.edge_classes.items()},
            "tree_edges": list(self.tree_edges),
            "value": self.value,
            "checks": self.checks,
            "lp": self.lp,
        }
        if witness:
            out["measurements"] = self.measurements
            out["behavior"] = None if self.behavior is None else self.behavior.to_json()
            out["functional"] = None if self.functional is None else self.functional.to_json()
        return out


def functional_soundness(f: LinearFunctional, samples: int, seed, hclass=HybridClass.NS_RESTRICTED,
                         batch: int = 1000):
    """Largest value of ``f`` over seeded random elements of B_n."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    done = 0
    while done < samples:
        count = min(batch, samples - done)
        tables = np.array([sample_hybrid_behavior(f.scenario, rng, hclass).flat()
                           for _ in range(count)])
        worst = max(worst, float(np.max(evaluate_tables(f, tables))))
        done += count
    return worst


def _hardy_edge(e: Edge, opts: CertifyOptions):
    sf = schmidt_decompose(e.state)
    alice, bob = build_hardy_measurements(sf, opts.hardy)
    return (alice, bob), hardy_success_probability(sf, opts.hardy)


def _measurement_json(assignments):
    return {str(k): {"i": a.to_json(), "j": b.to_json()} for k, (a, b) in sorted(assignments.items())}


def certify_gmnl(g: NetworkGraph, options: CertifyOptions = None) -> CertificationReport:
    opts = options or CertifyOptions()
    try:
        return _certify(g, opts)
    except GMNLError as exc:
        if not opts.best_effort or isinstance(exc, ConnectivityError):
            raise
        return CertificationReport(None, INCONCLUSIVE, f"{type(exc).__name__}: {exc}")


def _certify(g: NetworkGraph, opts: CertifyOptions) -> CertificationReport:
    tree = spanning_tree(g)
    cls = classify_edges(tree, opts.tol_class)
    report = CertificationReport(cls.case, INCONCLUSIVE, "", cls.classes,
                                 [e.id for e in tree.edges])
    assignments, hardy_p = {}, {}
    for k in cls.hardy_edges:
        assignments[k], hardy_p[k] = _hardy_edge(tree.edge(k), opts)
    for k in cls.maxent_edges:
        assignments[k] = chsh_measurements(schmidt_decompose(tree.edge(k).state), opts.tol_class)
    b = assemble_network_behavior(tree, assignments)
    report.behavior = b
    report.measurements = _measurement_json(assignments)
    report.checks["hardy_probabilities"] = {str(k): v for k, v in sorted(hardy_p.items())}
    if cls.case == 1:
        return _case1(tree, b, cls, hardy_p, opts, report)
    if cls.case == 2:
        return _case2(tree, b, cls, opts, report)
    return _case3(tree, b, cls, hardy_p, opts, report)


def _case1(tree, b, cls, hardy_p, opts, report):
    f = combine_gmnl(b.scenario, lifting_specs(tree, cls.hardy_edges))
    value = evaluate(f, b)
    report.functional, report.value = f, value
    zeros = {name: evaluate_group(f, b, name) for name in sorted(f.groups)
             if name != "P0|0" and not name.endswith("P00|00")}
    product = math.prod(hardy_p[k] for k in sorted(hardy_p))
    worst = functional_soundness(f, opts.soundness_samples, opts.seed)
    zeros_ok = all(v <= opts.tol_zero for v in zeros.values())
    sound = worst <= opts.soundness_tol
    report.checks.update({
        "negative_terms": zeros, "negative_terms_ok": zeros_ok,
        "hardy_product": product, "value_minus_product": value - product,
        "soundness_samples": opts.soundness_samples, "soundness_max": worst,
        "soundness_ok": sound,
    })
    if value > opts.tol_value and zeros_ok and sound:
        report.verdict = CERTIFIED
        report.explanation = (f"I_n = {value:.12g} > {opts.tol_value:g}; every edge shows "
                              f"Hardy's paradox and the functional stayed <= "
                              f"{opts.soundness_tol:g} on sampled hybrid behaviors")
    else:
        report.explanation = "Hardy functional not violated beyond tolerance"
    return report


def _edge_epr2(tree, b, k, opts):
    pk = edge_marginal(tree, b, k)
    e = tree.edge(k)
    dec = bipartite_epr2_decomposition(pk, Bipartition(frozenset({0}), 2), tol=opts.tol_lp)
    chsh = evaluate(chsh_functional(), pk) if pk.scenario.shape == (2, 2, 2, 2) else None
    return {"edge": k, "parties": [e.i, e.j], "local_content": dec.local_content,
            "upper_bound": dec.upper_bound, "lower_bound": dec.lower_bound, "chsh": chsh}


def _coarse_membership(tree, b, opts, report):
    if tree.n_parties != 3:
        return None
    cg = coarse_grain_center(tree, b)
    cert = membership_in_Bn(cg, opts.hclass, tol=opts.tol_lp, separate=False)
    report.lp["coarse_grained_membership"] = {"class": str(opts.hclass), "feasible": cert.feasible,
                                              "status": cert.status}
    return cert


def _case2(tree, b, cls, opts, report):
    epr2 = [_edge_epr2(tree, b, k, opts) for k in cls.maxent_edges]
    report.lp["edge_epr2"] = epr2
    if tree.n_parties == 2:
        cert = membership_in_Bn(b, opts.hclass, tol=opts.tol_lp)
        report.lp["membership"] = cert.to_json()
        if not cert.feasible:
            report.verdict = CERTIFIED
            report.explanation = "membership LP infeasible: the behavior is Bell nonlocal"
            return report
        report.explanation = "membership LP feasible at two inputs"
        return report
    cert = _coarse_membership(tree, b, opts, report)
    if cert is not None and not cert.feasible:
        report.verdict = CERTIFIED
        report.explanation = "coarse-grained membership LP infeasible"
        return report
    report.verdict = BOUNDED
    report.explanation = ("every edge violates CHSH (see edge_epr2) but two-input measurements "
                          "do not reach full nonlocality; no finite-input certificate")
    return report


def cut_families(tree: NetworkGraph, hardy_edges, maxent_edges):
    """Bipartitions crossed by a Hardy edge (S<=K) and those crossed by no maxent edge (T>K)."""
    s_le, t_gt = [], []
    for bip in canonical_bipartitions(tree.n_parties):
        crossed = {e.id for e in tree.edges if bip.separates(e.i, e.j)}
        if crossed & set(hardy_edges):
            s_le.append(str(bip))
        if not crossed & set(maxent_edges):
            t_gt.append(str(bip))
    return s_le, t_gt


def _case3(tree, b, cls, hardy_p, opts, report):
    specs = lifting_specs(tree, cls.hardy_edges, marginal_edges=cls.maxent_edges)
    f = combine_gmnl(b.scenario, specs, require_connected=False)
    v_h = evaluate(f, b)
    report.functional, report.value = f, v_h
    epr2 = [_edge_epr2(tree, b, k, opts) for k in cls.maxent_edges]
    report.lp["edge_epr2"] = epr2
    bound_plus = math.fsum(row["upper_bound"] if row["upper_bound"] is not None else 1.0
                           for row in epr2)
    s_le, t_gt = cut_families(tree, cls.hardy_edges, cls.maxent_edges)
    subset = set(t_gt) <= set(s_le)
    chain = subset and bound_plus < v_h
    report.checks.update({
        "hardy_value": v_h, "hardy_product": math.prod(hardy_p.values()),
        "maxent_local_content_bound": bound_plus,
        "S_le_K": s_le, "T_gt_K": t_gt, "T_gt_K_subset_S_le_K": subset,
        "chain_holds": chain,
    })
    if chain:
        report.verdict = CERTIFIED
        report.explanation = (f"maxent local content bound {bound_plus:.6g} is below the Hardy "
                              f"value {v_h:.6g}")
        return report
    cert = _coarse_membership(tree, b, opts, report)
    if cert is not None and not cert.feasible:
        report.verdict = CERTIFIED
        report.explanation = "coarse-grained membership LP infeasible"
        return report
    report.verdict = BOUNDED
    report.explanation = (f"Hardy value {v_h:.6g} does not exceed the maxent local content "
                          f"bound {bound_plus:.6g} at two inputs; the contradiction needs more "
                          f"inputs on the maximally entangled edges")
    return report
