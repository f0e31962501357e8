"""Linear Bell functionals: the Hardy-type seed, its liftings and GMNL combinations."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .behavior import Behavior, Scenario, encode_digits
from .errors import ConnectivityError, LiftingError, ShapeError

#: Seed terms as ``(label, coefficient, (a, b, x, y))``.
SEED_TERMS = (
    ("P00|00", 1.0, (0, 0, 0, 0)),
    ("P01|01", -1.0, (0, 1, 0, 1)),
    ("P10|10", -1.0, (1, 0, 1, 0)),
    ("P00|11", -1.0, (0, 0, 1, 1)),
)
LEADING = "P00|00"


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """``sum c[alpha, chi] P(alpha|chi) <= bound``.

    ``terms`` maps ``(joint outputs, joint inputs)`` tuples (one index per
    party) to coefficients.  ``groups`` names index sets of sub-sums, e.g. the
    four seed terms of each lifted edge inequality.
    """

    scenario: Scenario
    terms: Mapping
    bound: float = 0.0
    groups: Mapping = field(default_factory=dict)

    def __post_init__(self):
        sc = self.scenario
        clean = {}
        for (out, inp), c in self.terms.items():
            out, inp = tuple(int(v) for v in out), tuple(int(v) for v in inp)
            if len(out) != sc.n_parties or len(inp) != sc.n_parties:
                raise ShapeError(f"term {(out, inp)} does not list every party")
            if any(not 0 <= o < m for o, m in zip(out, sc.outputs)) or \
                    any(not 0 <= x < m for x, m in zip(inp, sc.inputs)):
                raise ShapeError(f"term {(out, inp)} out of range for scenario")
            if c != 0.0:
                clean[(out, inp)] = float(c)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "groups", {k: tuple(v) for k, v in self.groups.items()})

    @cached_property
    def dense(self) -> np.ndarray:
        arr = np.zeros(self.scenario.shape)
        for (out, inp), c in self.terms.items():
            arr[inp + out] += c
        arr.setflags(write=False)
        return arr

    def to_json(self):
        terms = [{"out": list(o), "in": list(i), "c": c} for (o, i), c in sorted(self.terms.items())]
        return {"scenario": self.scenario.to_json(), "terms": terms, "bound": self.bound}

    @classmethod
    def from_json(cls, data):
        for key in ("scenario", "terms"):
            if key not in data:
                raise ShapeError(f"functional JSON is missing field '{key}'")
        sc = Scenario.from_json(data["scenario"])
        terms = {}
        for t in data["terms"]:
            key = (tuple(t["out"]), tuple(t["in"]))
            terms[key] = terms.get(key, 0.0) + float(t["c"])
        return cls(sc, terms, float(data.get("bound", 0.0)))


def _check_scenario(f: LinearFunctional, b: Behavior):
    if f.scenario.inputs != b.scenario.inputs or f.scenario.outputs != b.scenario.outputs:
        raise ShapeError(f"functional scenario {f.scenario.inputs}/{f.scenario.outputs} does not "
                         f"match behavior {b.scenario.inputs}/{b.scenario.outputs}")


def evaluate(f: LinearFunctional, b: Behavior) -> float:
    _check_scenario(f, b)
    t = b.table
    return math.fsum(c * t[inp + out] for (out, inp), c in sorted(f.terms.items()))


def evaluate_group(f: LinearFunctional, b: Behavior, name: str) -> float:
    """Plain sum of ``P`` over the index set ``f.groups[name]``."""
    _check_scenario(f, b)
    t = b.table
    return math.fsum(t[inp + out] for out, inp in sorted(f.groups[name]))


def evaluate_tables(f: LinearFunctional, tables: np.ndarray) -> np.ndarray:
    """Values on a batch of tables of shape ``(batch,) + scenario.shape`` or flat rows."""
    flat = np.asarray(tables).reshape(-1, f.scenario.size)
    return flat @ f.dense.ravel()


def seed_inequality() -> LinearFunctional:
    """``P(00|00) - P(01|01) - P(10|10) - P(00|11) <= 0`` on two parties."""
    sc = Scenario((2, 2), (2, 2))
    terms, groups = {}, {}
    for label, c, (a, b, x, y) in SEED_TERMS:
        terms[((a, b), (x, y))] = c
        groups[label] = [((a, b), (x, y))]
    return LinearFunctional(sc, terms, 0.0, groups)


@dataclass(frozen=True)
class LiftingSpec:
    """Placement of the seed on digit ``digit_i`` of party ``i`` and ``digit_j`` of party ``j``.

    Inputs of every other digit are fixed to 0.  Output digits are summed for
    the non-active digits of ``i`` and ``j`` and for ``marginal_digits``; all
    remaining output digits are fixed to 0.
    """

    edge: int
    i: int
    j: int
    digit_i: int = 0
    digit_j: int = 0
    marginal_digits: frozenset = frozenset()

    def active(self):
        return {(self.i, self.digit_i), (self.j, self.digit_j)}

    def resolve(self, scenario: Scenario):
        """Return ``(summed, fixed)`` digit sets after validating against ``scenario``."""
        n = scenario.n_parties
        if self.i == self.j:
            raise LiftingError(f"edge {self.edge}: endpoints coincide")
        for p, d in ((self.i, self.digit_i), (self.j, self.digit_j)):
            if not 0 <= p < n or not 0 <= d < len(scenario.party_digits(p)):
                raise LiftingError(f"edge {self.edge}: party {p} has no digit {d}")
            x, a = scenario.party_digits(p)[d]
            if x < 2 or a != 2:
                raise LiftingError(f"edge {self.edge}: active digit {(p, d)} must have "
                                   f">= 2 inputs and exactly 2 outputs, has {(x, a)}")
        everything = {(p, d) for p in range(n) for d in range(len(scenario.party_digits(p)))}
        marginal = {tuple(k) for k in self.marginal_digits}
        if not marginal <= everything:
            raise LiftingError(f"edge {self.edge}: unknown marginal digits {sorted(marginal - everything)}")
        if marginal & self.active():
            raise LiftingError(f"edge {self.edge}: active digits cannot be marginalized")
        summed = {(p, d) for p, d in everything
                  if p in (self.i, self.j) and (p, d) not in self.active()} | marginal
        fixed = everything - summed - self.active()
        assert not (summed & fixed) and summed | fixed | self.active() == everything
        return summed, fixed


def _expand(scenario: Scenario, digit_inputs: Mapping, digit_outputs: Mapping, summed: set):
    """All ``(out, in)`` party-level keys for given per-digit values, summing ``summed`` outputs."""
    digits = scenario.all_digits
    summed = sorted(summed)
    ranges = [range(digits[p][d][1]) for p, d in summed]
    inp = tuple(encode_digits([x for x, _ in digits[p]],
                              [digit_inputs.get((p, d), 0) for d in range(len(digits[p]))])
                for p in range(len(digits)))
    keys = []
    for values in itertools.product(*ranges):
        outs = dict(digit_outputs)
        outs.update(zip(summed, values))
        out = tuple(encode_digits([a for _, a in digits[p]],
                                  [outs.get((p, d), 0) for d in range(len(digits[p]))])
                    for p in range(len(digits)))
        keys.append((out, inp))
    return keys


def _edge_groups(scenario: Scenario, spec: LiftingSpec):
    summed, _ = spec.resolve(scenario)
    ai, aj = (spec.i, spec.digit_i), (spec.j, spec.digit_j)
    groups = {}
    for label, c, (a, b, x, y) in SEED_TERMS:
        groups[label] = (c, _expand(scenario, {ai: x, aj: y}, {ai: a, aj: b}, summed))
    return groups


def lift_edge_inequality(scenario: Scenario, spec: LiftingSpec) -> LinearFunctional:
    """The seed lifted to ``scenario`` on the digits named by ``spec``."""
    terms, groups = {}, {}
    for label, (c, keys) in _edge_groups(scenario, spec).items():
        for key in keys:
            terms[key] = terms.get(key, 0.0) + c
        groups[label] = keys
    return LinearFunctional(scenario, terms, 0.0, groups)


def _components(n, pairs):
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i, j in pairs:
        parent[find(i)] = find(j)
    comps = {}
    for p in range(n):
        comps.setdefault(find(p), []).append(p)
    return sorted(comps.values())


def combine_gmnl(scenario: Scenario, specs: Sequence[LiftingSpec],
                 require_connected: bool = True) -> LinearFunctional:
    """``sum_k I^k + P(0|0) - sum_k (leading sum of I^k)``, bound 0.

    The leading positive sum of each lifted inequality is removed
    structurally, so the result is ``P(0|0)`` minus the three negative sums
    of every edge.  ``P(0|0)`` sums over the digits marginalized by every
    spec (none, for plain network liftings).
    """
    if not specs:
        raise ConnectivityError("no edge inequalities to combine")
    if require_connected:
        comps = _components(scenario.n_parties, [(s.i, s.j) for s in specs])
        if len(comps) > 1:
            raise ConnectivityError(f"edge set is disconnected: components {comps}",
                                    components=comps)
    common = set.intersection(*[{tuple(k) for k in s.marginal_digits} for s in specs])
    zero_keys = _expand(scenario, {}, {}, common)
    terms = {key: 1.0 for key in zero_keys}
    groups = {"P0|0": zero_keys}
    for spec in specs:
        for label, (c, keys) in _edge_groups(scenario, spec).items():
            groups[f"{spec.edge}:{label}"] = keys
            if label == LEADING:
                continue
            for key in keys:
                terms[key] = terms.get(key, 0.0) + c
    return LinearFunctional(scenario, terms, 0.0, groups)


def copies_scenario(n: int) -> Scenario:
    """``n`` parties (Alice = 0, Bob_j = j) each holding ``n - 1`` binary particle digits."""
    digits = tuple(((2, 2),) * (n - 1) for _ in range(n))
    size = 2 ** (n - 1)
    return Scenario((size,) * n, (size,) * n, digits)


def copies_spec(n: int, i: int) -> LiftingSpec:
    if n < 3 or not 1 <= i <= n - 1:
        raise LiftingError(f"copies inequality needs n >= 3 and 1 <= i <= n-1, got n={n}, i={i}")
    slot = i - 1
    marginal = frozenset((p, d) for p in range(n) for d in range(n - 1) if d != slot)
    return LiftingSpec(edge=i, i=0, j=i, digit_i=slot, digit_j=slot, marginal_digits=marginal)


def copies_inequality(n: int, i: int) -> LinearFunctional:
    """Seed on copy ``i`` between Alice and Bob ``i``; other copies' outputs summed."""
    spec = copies_spec(n, i)
    return lift_edge_inequality(copies_scenario(n), spec)


def combine_copies_gmnl(n: int) -> LinearFunctional:
    specs = [copies_spec(n, i) for i in range(1, n)]
    return combine_gmnl(copies_scenario(n), specs)


def correlator_functional(scenario: Scenario, coefficients: Mapping, bound: float) -> LinearFunctional:
    """Functional ``sum_chi s[chi] E(chi)`` with ``E`` the parity correlator of binary outputs."""
    if any(a != 2 for a in scenario.outputs):
        raise ShapeError("correlators need binary outputs")
    n = scenario.n_parties
    terms = {}
    for inp, s in coefficients.items():
        for out in itertools.product(range(2), repeat=n):
            terms[(out, tuple(inp))] = terms.get((out, tuple(inp)), 0.0) + s * (-1) ** sum(out)
    return LinearFunctional(scenario, terms, bound)


def chsh_functional() -> LinearFunctional:
    """``E00 + E01 + E10 - E11 <= 2``."""
    coeffs = {(x, y): (-1.0 if x == y == 1 else 1.0) for x in range(2) for y in range(2)}
    return correlator_functional(Scenario((2, 2), (2, 2)), coeffs, 2.0)


def svetlichny_functional() -> LinearFunctional:
    """Three-party Svetlichny expression, bound 4 over the unrestricted hybrid class."""
    sign = {(0, 0, 0): 1, (0, 0, 1): 1, (0, 1, 0): 1, (0, 1, 1): -1,
            (1, 0, 0): 1, (1, 0, 1): -1, (1, 1, 0): -1, (1, 1, 1): -1}
    return correlator_functional(Scenario((2, 2, 2), (2, 2, 2)),
                                 {k: float(v) for k, v in sign.items()}, 4.0)
