"""Vertices of local and hybrid models, membership in B_n and EPR2 local content.

Tables are handled as flat rows in the canonical layout ``(inputs..., outputs...)``.
Side tables (one bipartition side) use the same layout restricted to the
side's parties, in increasing party order.
"""
from __future__ import annotations

import enum
import itertools
import math
import string
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .behavior import (Behavior, Bipartition, Scenario, canonical_bipartitions,
                       is_nonsignalling, pr_box)
from .errors import CapabilityError, LPError, ShapeError, SizeError
from .lp import LP_TOL, certified_lower_bound, certified_upper_bound, solve_lp

DEFAULT_CAP = 10 ** 6


class HybridClass(enum.Enum):
    NS_RESTRICTED = "NSRestricted"
    UNRESTRICTED = "Unrestricted"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in ("ns", "nsrestricted", "ns_restricted"):
            return cls.NS_RESTRICTED
        if key in ("svet", "unrestricted", "svetlichny"):
            return cls.UNRESTRICTED
        raise ValueError(f"unknown hybrid class {value!r} (use 'ns' or 'svet')")

    def __str__(self):
        return self.value


@dataclass
class VertexSet:
    scenario: Scenario
    bipartition: Bipartition | None
    hclass: HybridClass
    tables: np.ndarray  # (count, size)

    def __len__(self):
        return self.tables.shape[0]

    @property
    def vertices(self):
        return [Behavior(self.scenario, t) for t in self.tables]


@dataclass
class MembershipCertificate:
    feasible: bool
    hclass: HybridClass
    status: str
    weights: list = field(default_factory=list)  # (bipartition label, column, weight)
    reconstruction_error: float = None
    separating: np.ndarray = None  # dense functional c with c.v <= c0 on every vertex
    separating_bound: float = None
    violation: float = None

    def to_json(self):
        out = {"feasible": self.feasible, "class": str(self.hclass), "status": self.status}
        if self.feasible:
            out["weights"] = [{"bipartition": m, "column": int(k), "weight": float(w)}
                              for m, k, w in self.weights]
            out["reconstruction_error"] = self.reconstruction_error
        elif self.separating is not None:
            out["separating"] = {"c": self.separating.ravel().tolist(),
                                 "bound": self.separating_bound, "violation": self.violation}
        return out


@dataclass
class EPR2Decomposition:
    hclass: HybridClass
    local_weights: dict  # bipartition label -> p_L^M
    p_ns: float
    mixture: list  # (bipartition label, column, weight)
    residual: Behavior | None
    lower_bound: float = None
    upper_bound: float = None
    residual_ns_violation: float = None

    @property
    def local_content(self):
        return math.fsum(self.local_weights.values())

    def to_json(self):
        return {
            "class": str(self.hclass),
            "local_content": self.local_content,
            "local_weights": {k: float(v) for k, v in self.local_weights.items()},
            "p_ns": self.p_ns,
            "certified_interval": [self.lower_bound, self.upper_bound],
            "mixture": [{"bipartition": m, "column": int(k), "weight": float(w)}
                        for m, k, w in self.mixture],
            "residual": None if self.residual is None else self.residual.to_json(),
            "residual_ns_violation": self.residual_ns_violation,
        }


# -- side vertices -----------------------------------------------------------

def _side_scenario(scenario: Scenario, parties) -> Scenario:
    return Scenario(tuple(scenario.inputs[p] for p in parties),
                    tuple(scenario.outputs[p] for p in parties))


def _joint_deterministic(side: Scenario, cap=DEFAULT_CAP) -> np.ndarray:
    """All joint response functions of a side as tables ``(count,) + side.shape``."""
    X, A = int(np.prod(side.inputs)), int(np.prod(side.outputs))
    count = A ** X
    if count > cap:
        raise SizeError(f"{count} deterministic strategies exceed the cap {cap}", count=count)
    responses = np.array(list(itertools.product(range(A), repeat=X)), dtype=np.intp)
    tables = np.zeros((count, X, A))
    tables[np.arange(count)[:, None], np.arange(X)[None, :], responses] = 1.0
    return tables.reshape((count,) + side.shape)


def _relabelings():
    """Local relabelings of a (2,2;2,2) box: input flips and input-dependent output flips."""
    for fx, fy, ga0, ga1, gb0, gb1 in itertools.product(range(2), repeat=6):
        yield fx, fy, (ga0, ga1), (gb0, gb1)


def _apply_relabel(t, relabel, swap=False):
    fx, fy, ga, gb = relabel
    out = np.empty_like(t)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        out[x ^ fx, y ^ fy, a ^ ga[x], b ^ gb[y]] = t[x, y, a, b]
    return out.transpose(1, 0, 3, 2) if swap else out


def _orbit(seed_table):
    seen = {}
    for relabel in _relabelings():
        for swap in (False, True):
            t = _apply_relabel(seed_table, relabel, swap)
            seen.setdefault(t.tobytes(), t)
    return [seen[k] for k in sorted(seen)]


def is_extremal(vertex: np.ndarray, others: np.ndarray) -> bool:
    """True when ``vertex`` is not a convex mixture of the rows of ``others``."""
    V = np.asarray(others).reshape(len(others), -1).T
    v = np.asarray(vertex).ravel()
    A_eq = np.vstack([V, np.ones((1, V.shape[1]))])
    res = solve_lp(np.zeros(V.shape[1]), A_eq=A_eq, b_eq=np.append(v, 1.0))
    return res.status == "infeasible"


@lru_cache(maxsize=None)
def _ns_2222_vertices() -> np.ndarray:
    det = np.zeros((2, 2, 2, 2))
    det[:, :, 0, 0] = 1.0
    verts = _orbit(det) + _orbit(np.asarray(pr_box().table))
    tables = np.array(verts)
    for k in range(len(tables)):
        if not is_extremal(tables[k], np.delete(tables, k, axis=0)):
            raise LPError(f"(2,2;2,2) candidate vertex {k} is not extremal")
    tables.setflags(write=False)
    return tables


def _ns_side_tables(side: Scenario, cap=DEFAULT_CAP) -> np.ndarray:
    if side.n_parties == 1:
        return _joint_deterministic(side, cap)
    if side.n_parties == 2 and side.inputs == (2, 2) and side.outputs == (2, 2):
        return np.array(_ns_2222_vertices())
    raise CapabilityError(
        f"nonsignalling vertices are only enumerated for single parties and "
        f"(2,2;2,2) pairs, not inputs {side.inputs} outputs {side.outputs}; "
        f"use the Unrestricted class or sampling")


def enumerate_ns_vertices(side_scenario: Scenario) -> VertexSet:
    tables = _ns_side_tables(side_scenario)
    return VertexSet(side_scenario, None, HybridClass.NS_RESTRICTED,
                     tables.reshape(len(tables), -1))


# -- product vertices ---------------------------------------------------------

def _product_tables(scenario: Scenario, bip: Bipartition, tm: np.ndarray, tb: np.ndarray):
    """Flat tables of all products ``tm[i] * tb[j]`` laid out over every party."""
    n = scenario.n_parties
    letters = iter(string.ascii_letters)
    xs = [next(letters) for _ in range(n)]
    a_s = [next(letters) for _ in range(n)]
    i, j = next(letters), next(letters)
    m, bar = bip.side_m, bip.side_bar
    sub_m = i + "".join(xs[p] for p in m) + "".join(a_s[p] for p in m)
    sub_b = j + "".join(xs[p] for p in bar) + "".join(a_s[p] for p in bar)
    sub_out = i + j + "".join(xs) + "".join(a_s)
    prod = np.einsum(f"{sub_m},{sub_b}->{sub_out}", tm, tb)
    return prod.reshape(len(tm) * len(tb), -1)


def _side_tables(scenario, parties, hclass, cap):
    side = _side_scenario(scenario, parties)
    if hclass is HybridClass.UNRESTRICTED:
        return _joint_deterministic(side, cap)
    return _ns_side_tables(side, cap)


def _side_count(scenario, parties, hclass):
    side = _side_scenario(scenario, parties)
    if hclass is HybridClass.NS_RESTRICTED and side.n_parties == 2:
        return 24
    return int(np.prod(side.outputs)) ** int(np.prod(side.inputs))


def enumerate_group_deterministic(scenario: Scenario, bipartition: Bipartition,
                                  cap: int = DEFAULT_CAP) -> VertexSet:
    """Products of joint deterministic response functions on each side."""
    counts = [_side_count(scenario, s, HybridClass.UNRESTRICTED)
              for s in (bipartition.side_m, bipartition.side_bar)]
    total = counts[0] * counts[1]
    if total > cap:
        raise SizeError(f"{total} group-deterministic vertices exceed the cap {cap}", count=total)
    tm = _side_tables(scenario, bipartition.side_m, HybridClass.UNRESTRICTED, cap)
    tb = _side_tables(scenario, bipartition.side_bar, HybridClass.UNRESTRICTED, cap)
    return VertexSet(scenario, bipartition, HybridClass.UNRESTRICTED,
                     _product_tables(scenario, bipartition, tm, tb))


def hybrid_vertices(scenario: Scenario, bipartition: Bipartition, hclass,
                    cap: int = DEFAULT_CAP) -> VertexSet:
    hclass = HybridClass.parse(hclass)
    if hclass is HybridClass.UNRESTRICTED:
        return enumerate_group_deterministic(scenario, bipartition, cap)
    tm = _side_tables(scenario, bipartition.side_m, hclass, cap)
    tb = _side_tables(scenario, bipartition.side_bar, hclass, cap)
    if len(tm) * len(tb) > cap:
        raise SizeError(f"{len(tm) * len(tb)} hybrid vertices exceed the cap {cap}",
                        count=len(tm) * len(tb))
    return VertexSet(scenario, bipartition, hclass, _product_tables(scenario, bipartition, tm, tb))


def hybrid_columns(scenario: Scenario, hclass, cap: int = DEFAULT_CAP,
                   bipartitions=None):
    """Deduplicated vertex columns over the given bipartitions (default: all).

    Returns ``(V, labels)`` with ``V`` of shape ``(size, count)`` and the
    bipartition label where each column first appeared.
    """
    hclass = HybridClass.parse(hclass)
    bips = canonical_bipartitions(scenario.n_parties) if bipartitions is None else bipartitions
    if not bips:
        raise ShapeError("hybrid models need at least two parties")
    total = sum(_side_count(scenario, b.side_m, hclass) * _side_count(scenario, b.side_bar, hclass)
                for b in bips)
    if total > cap:
        raise SizeError(f"{total} hybrid vertex columns exceed the cap {cap}", count=total)
    seen, cols, labels = set(), [], []
    for bip in bips:
        for row in hybrid_vertices(scenario, bip, hclass, cap).tables:
            key = row.tobytes()
            if key in seen:
                continue
            seen.add(key)
            cols.append(row)
            labels.append(str(bip))
    return np.array(cols).T, labels


# -- LPs ----------------------------------------------------------------------

def _weights(x, labels, tol=1e-12):
    return [(labels[k], k, float(x[k])) for k in range(len(x)) if x[k] > tol]


def membership_in_Bn(b: Behavior, hclass=HybridClass.NS_RESTRICTED, cap: int = DEFAULT_CAP,
                     tol: float = LP_TOL, separate: bool = True) -> MembershipCertificate:
    """Is ``b`` a mixture of hybrid vertices?  Infeasible means GMNL for the class."""
    hclass = HybridClass.parse(hclass)
    V, labels = hybrid_columns(b.scenario, hclass, cap)
    target = b.flat()
    A_eq = np.vstack([V, np.ones((1, V.shape[1]))])
    res = solve_lp(np.zeros(V.shape[1]), A_eq=A_eq, b_eq=np.append(target, 1.0), tol=tol)
    if res.ok:
        w = np.clip(res.x, 0.0, None)
        err = float(np.max(np.abs(V @ w - target)))
        return MembershipCertificate(True, hclass, res.status, _weights(w, labels), err)
    cert = MembershipCertificate(False, hclass, res.status)
    if separate:
        c, c0, viol = separating_functional(V, target, tol)
        cert.separating, cert.separating_bound, cert.violation = c.reshape(b.scenario.shape), c0, viol
    return cert


def separating_functional(V, target, tol=LP_TOL):
    """``max c.b - c0`` subject to ``c.v <= c0`` on every column, ``-1 <= c <= 1``."""
    size, count = V.shape
    # variables: c (size), c0
    obj = np.concatenate([-target, [1.0]])
    A_ub = np.hstack([V.T, -np.ones((count, 1))])
    bounds = [(-1.0, 1.0)] * size + [(-float(size), float(size))]
    res = solve_lp(obj, A_ub=A_ub, b_ub=np.zeros(count), bounds=bounds, tol=tol)
    if not res.ok:
        raise LPError(f"separation LP ended with status {res.status}")
    c, c0 = res.x[:size], float(res.x[size])
    return c, c0, float(c @ target - c0)


def _epr2(b: Behavior, V, labels, hclass, tol=LP_TOL) -> EPR2Decomposition:
    target = b.flat()
    res = solve_lp(-np.ones(V.shape[1]), A_ub=V, b_ub=target, tol=tol)
    if not res.ok:
        raise LPError(f"local-content LP ended with status {res.status}")
    w = np.clip(res.x, 0.0, None)
    y = -res.ub_duals
    upper = certified_upper_bound(V, target, y)
    lower = certified_lower_bound(V, target, w)
    total = math.fsum(w)
    local = {}
    for lab, wk in zip(labels, w):
        local[lab] = local.get(lab, 0.0) + float(wk)
    local = {k: v for k, v in local.items() if v > 0.0}
    p_ns = max(0.0, 1.0 - total)
    residual, viol = None, None
    if p_ns > 1e-9:
        r = np.clip(target - V @ w, 0.0, None).reshape(b.scenario.shape)
        n = b.scenario.n_parties
        sums = r.sum(axis=tuple(range(n, 2 * n)), keepdims=True)
        residual = Behavior(b.scenario, r / sums)
        _, viol = is_nonsignalling(residual, tol=1.0)
    return EPR2Decomposition(hclass, local, p_ns, _weights(w, labels), residual,
                             None if lower is None else float(lower),
                             None if upper is None else float(upper), viol)


def epr2_local_content(b: Behavior, hclass=HybridClass.NS_RESTRICTED, cap: int = DEFAULT_CAP,
                       tol: float = LP_TOL) -> EPR2Decomposition:
    """Maximal total weight of bipartition-local parts, with the NS remainder."""
    hclass = HybridClass.parse(hclass)
    V, labels = hybrid_columns(b.scenario, hclass, cap)
    return _epr2(b, V, labels, hclass, tol)


def bipartite_epr2(b: Behavior, cut: Bipartition, hclass=HybridClass.NS_RESTRICTED,
                   cap: int = DEFAULT_CAP, tol: float = LP_TOL) -> float:
    """Local content across a single cut."""
    return bipartite_epr2_decomposition(b, cut, hclass, cap, tol).local_content


def bipartite_epr2_decomposition(b, cut, hclass=HybridClass.NS_RESTRICTED, cap=DEFAULT_CAP,
                                 tol=LP_TOL) -> EPR2Decomposition:
    hclass = HybridClass.parse(hclass)
    V, labels = hybrid_columns(b.scenario, hclass, cap, bipartitions=[cut])
    return _epr2(b, V, labels, hclass, tol)


# -- sampling of hybrid behaviors --------------------------------------------

def _random_local(side: Scenario, rng, sharp: bool):
    """Product of per-party conditional distributions."""
    tabs = []
    for x, a in zip(side.inputs, side.outputs):
        if sharp:
            t = np.zeros((x, a))
            t[np.arange(x), rng.integers(a, size=x)] = 1.0
        else:
            t = rng.dirichlet(np.full(a, 0.3), size=x)
        tabs.append(t)
    return _outer_parties(tabs)


def _outer_parties(tabs):
    """Combine single-party tables ``(x_p, a_p)`` into ``(x..., a...)``."""
    n = len(tabs)
    letters = string.ascii_letters
    subs = [letters[p] + letters[n + p] for p in range(n)]
    return np.einsum(",".join(subs) + "->" + letters[:n] + letters[n:2 * n], *tabs)


def _wired_pr(side: Scenario, rng):
    """A PR box with random local input maps and input-dependent output maps."""
    (X1, X2), (A1, A2) = side.inputs, side.outputs
    pr = np.asarray(pr_box().table)
    f1, f2 = rng.integers(2, size=X1), rng.integers(2, size=X2)
    g1, g2 = rng.integers(A1, size=(X1, 2)), rng.integers(A2, size=(X2, 2))
    t = np.zeros((X1, X2, A1, A2))
    for x1, x2, o1, o2 in itertools.product(range(X1), range(X2), range(2), range(2)):
        t[x1, x2, g1[x1, o1], g2[x2, o2]] += pr[f1[x1], f2[x2], o1, o2]
    return t


def _block_product(side: Scenario, blocks, tables):
    """Table on ``side`` from tables on disjoint party blocks (each in block order)."""
    n = side.n_parties
    letters = string.ascii_letters
    subs = ["".join(letters[p] for p in blk) + "".join(letters[n + p] for p in blk)
            for blk in blocks]
    return np.einsum(",".join(subs) + "->" + letters[:2 * n], *tables)


def random_ns_side(side: Scenario, rng, components: int = 3) -> np.ndarray:
    """Random nonsignalling table on a side.

    A sparse mixture of components; each pairs up parties at random and puts
    a wired PR box or a local part on every pair (singletons stay local).
    Products and mixtures of nonsignalling boxes are nonsignalling.
    """
    n = side.n_parties
    if n == 1:
        return _random_local(side, rng, sharp=rng.random() < 0.5)
    w = rng.dirichlet(np.full(int(rng.integers(1, components + 1)), 0.4))
    total = np.zeros(side.shape)
    for wk in w:
        order = [int(p) for p in rng.permutation(n)]
        blocks = [tuple(sorted(order[k:k + 2])) for k in range(0, n, 2)]
        tables = []
        for blk in blocks:
            sub = Scenario(tuple(side.inputs[p] for p in blk), tuple(side.outputs[p] for p in blk))
            if len(blk) == 2 and rng.random() < 0.6:
                tables.append(_wired_pr(sub, rng))
            else:
                tables.append(_random_local(sub, rng, sharp=rng.random() < 0.6))
        total += wk * _block_product(side, blocks, tables)
    return total


def random_signalling_side(side: Scenario, rng) -> np.ndarray:
    X, A = int(np.prod(side.inputs)), int(np.prod(side.outputs))
    if rng.random() < 0.5:
        t = np.zeros((X, A))
        t[np.arange(X), rng.integers(A, size=X)] = 1.0
    else:
        t = rng.dirichlet(np.full(A, 0.3), size=X)
    return t.reshape(side.shape)


def sample_hybrid_behavior(scenario: Scenario, rng, hclass=HybridClass.NS_RESTRICTED,
                           terms: int = 3) -> Behavior:
    """Random element of B_n: a sparse mixture over bipartitions of side products."""
    hclass = HybridClass.parse(hclass)
    bips = canonical_bipartitions(scenario.n_parties)
    # Single-term draws land on (products of) side vertices, i.e. on the boundary.
    weights = rng.dirichlet(np.full(int(rng.integers(1, terms + 1)), 0.4))
    flat = np.zeros(scenario.size)
    for w in weights:
        bip = bips[rng.integers(len(bips))]
        sides = []
        for parties in (bip.side_m, bip.side_bar):
            side = _side_scenario(scenario, parties)
            if hclass is HybridClass.UNRESTRICTED:
                sides.append(random_signalling_side(side, rng))
            else:
                sides.append(random_ns_side(side, rng))
        flat += w * _product_tables(scenario, bip, sides[0][None], sides[1][None])[0]
    # Normalization drift from Dirichlet weights is at rounding level.
    return Behavior(scenario, flat)
