"""Conditional probability tables over multipartite input/output scenarios.

Layout convention used everywhere (files, LP columns, functionals): a
:class:`Behavior` table has shape ``inputs + outputs``, i.e. one axis per
party for the joint input followed by one axis per party for the joint
output, flattened row-major.  When a party holds several particles its joint
index is the mixed-radix number of its per-particle digits with particle 0
as the most significant digit.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConditioningError, MappingError, NormalizationError, ShapeError

NORM_TOL = 1e-10
NEG_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    """Numbers of inputs/outputs per party, optionally split into particle digits."""

    inputs: tuple
    outputs: tuple
    digits: tuple = None

    def __post_init__(self):
        inputs = tuple(int(v) for v in self.inputs)
        outputs = tuple(int(v) for v in self.outputs)
        if len(inputs) != len(outputs) or not inputs:
            raise ShapeError("inputs and outputs must list the same, nonzero number of parties")
        if min(inputs + outputs) < 1:
            raise ShapeError("all input/output counts must be >= 1")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        if self.digits is not None:
            digits = tuple(tuple((int(x), int(a)) for x, a in party) for party in self.digits)
            if len(digits) != len(inputs):
                raise ShapeError("digit structure must list every party")
            for p, party in enumerate(digits):
                if not party:
                    raise ShapeError(f"party {p} has an empty digit structure")
                if (int(np.prod([x for x, _ in party])) != inputs[p]
                        or int(np.prod([a for _, a in party])) != outputs[p]):
                    raise ShapeError(f"digit structure of party {p} does not match its totals")
            object.__setattr__(self, "digits", digits)

    @property
    def n_parties(self):
        return len(self.inputs)

    def party_digits(self, p):
        if self.digits is None:
            return ((self.inputs[p], self.outputs[p]),)
        return self.digits[p]

    @property
    def all_digits(self):
        return tuple(self.party_digits(p) for p in range(self.n_parties))

    @property
    def shape(self):
        return self.inputs + self.outputs

    @property
    def size(self):
        return int(np.prod(self.shape))

    def to_json(self):
        out = {"inputs": list(self.inputs), "outputs": list(self.outputs)}
        out["digits"] = None if self.digits is None else [[list(d) for d in party] for party in self.digits]
        return out

    @classmethod
    def from_json(cls, data):
        for key in ("inputs", "outputs"):
            if key not in data:
                raise ShapeError(f"scenario JSON is missing field '{key}'")
        return cls(tuple(data["inputs"]), tuple(data["outputs"]), data.get("digits"))


def encode_digits(digit_sizes: Sequence[int], values: Sequence[int]) -> int:
    """Mixed-radix index of ``values``; the first digit is the most significant."""
    return int(np.ravel_multi_index(tuple(values), tuple(digit_sizes)))


def decode_digits(digit_sizes: Sequence[int], index: int) -> tuple:
    return tuple(int(v) for v in np.unravel_index(index, tuple(digit_sizes)))


@dataclass(frozen=True, eq=False)
class Behavior:
    """Table ``P(alpha_1..alpha_n | chi_1..chi_n)`` over a :class:`Scenario`."""

    scenario: Scenario
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.size != self.scenario.size:
            raise ShapeError(f"table has {t.size} entries, scenario needs {self.scenario.size}")
        t = t.reshape(self.scenario.shape)
        if t.min() < -NEG_TOL or t.max() > 1 + NEG_TOL:
            raise NormalizationError(f"table entries outside [0, 1]: min {t.min()!r}, max {t.max()!r}")
        norms = self.normalization(t)
        if np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise NormalizationError(f"conditional distributions not normalized "
                             f"(max deviation {np.max(np.abs(norms - 1.0))!r})")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def normalization(self, table=None):
        t = self.table if table is None else table
        n = self.scenario.n_parties
        return t.sum(axis=tuple(range(n, 2 * n)))

    def normalization_error(self) -> float:
        """Largest deviation of a conditional distribution's total from 1."""
        return float(np.max(np.abs(self.normalization() - 1.0)))

    @property
    def n_parties(self):
        return self.scenario.n_parties

    def flat(self):
        return self.table.ravel()

    def prob(self, outputs: Sequence[int], inputs: Sequence[int]) -> float:
        return float(self.table[tuple(inputs) + tuple(outputs)])

    def allclose(self, other: "Behavior", atol=1e-10) -> bool:
        return (self.scenario.inputs == other.scenario.inputs
                and self.scenario.outputs == other.scenario.outputs
                and bool(np.max(np.abs(self.table - other.table)) <= atol))

    def with_scenario(self, scenario: Scenario) -> "Behavior":
        return Behavior(scenario, self.table.ravel())

    def to_json(self):
        return {"scenario": self.scenario.to_json(), "table": [float(v) for v in self.table.ravel()]}

    @classmethod
    def from_json(cls, data):
        for key in ("scenario", "table"):
            if key not in data:
                raise ShapeError(f"behavior JSON is missing field '{key}'")
        return cls(Scenario.from_json(data["scenario"]), np.asarray(data["table"], dtype=float))


@dataclass(frozen=True)
class Bipartition:
    """A cut ``M | complement`` of ``n`` parties, canonically with party 0 in ``M``."""

    m_set: frozenset
    n: int

    def __post_init__(self):
        m = frozenset(int(p) for p in self.m_set)
        if not m or len(m) >= self.n or any(not 0 <= p < self.n for p in m):
            raise ShapeError(f"{sorted(m)} is not a proper nonempty subset of {self.n} parties")
        if 0 not in m:
            m = frozenset(range(self.n)) - m
        object.__setattr__(self, "m_set", m)

    @property
    def side_m(self):
        return tuple(sorted(self.m_set))

    @property
    def side_bar(self):
        return tuple(p for p in range(self.n) if p not in self.m_set)

    def separates(self, i, j) -> bool:
        return (i in self.m_set) != (j in self.m_set)

    def __str__(self):
        return "{" + ",".join(map(str, self.side_m)) + "}|{" + ",".join(map(str, self.side_bar)) + "}"


def canonical_bipartitions(n: int) -> list:
    """All bipartitions of ``n`` parties, each listed once (party 0 in ``M``)."""
    cuts = []
    for size in range(1, n):
        for combo in itertools.combinations(range(1, n), size - 1):
            cuts.append(Bipartition(frozenset((0,) + combo), n))
    return cuts


# -- basic constructors --------------------------------------------------

def uniform_behavior(scenario: Scenario) -> Behavior:
    n_out = int(np.prod(scenario.outputs))
    return Behavior(scenario, np.full(scenario.size, 1.0 / n_out))


def deterministic_behavior(scenario: Scenario, responses: Sequence[Sequence[int]]) -> Behavior:
    """Product of per-party deterministic response functions ``responses[p][x] = a``."""
    tables = []
    for p, resp in enumerate(responses):
        t = np.zeros((scenario.inputs[p], scenario.outputs[p]))
        t[np.arange(scenario.inputs[p]), np.asarray(resp, dtype=int)] = 1.0
        tables.append(t)
    return Behavior(scenario, _product_of_party_tables(tables))


def _product_of_party_tables(tables):
    """Combine per-party tables ``t_p[x_p, a_p]`` into one table in the canonical layout."""
    n = len(tables)
    letters = string.ascii_letters
    subs = [letters[p] + letters[n + p] for p in range(n)]
    out = "".join(letters[p] for p in range(n)) + "".join(letters[n + p] for p in range(n))
    return np.einsum(",".join(subs) + "->" + out, *tables)


def local_behavior(scenario: Scenario, tables: Sequence[np.ndarray]) -> Behavior:
    """Product of independent per-party conditional tables ``tables[p][x, a]``."""
    return Behavior(scenario, _product_of_party_tables([np.asarray(t, float) for t in tables]))


def pr_box(relabel=(0, 0, 0)) -> Behavior:
    """PR box ``P(ab|xy) = 1/2`` iff ``a xor b = xy xor r0 x xor r1 y xor r2``."""
    r0, r1, r2 = relabel
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if a ^ b == (x * y) ^ (r0 * x) ^ (r1 * y) ^ r2:
            t[x, y, a, b] = 0.5
    return Behavior(Scenario((2, 2), (2, 2)), t)


def mix(weights: Sequence[float], behaviors: Sequence[Behavior]) -> Behavior:
    """Convex combination of behaviors over a common scenario."""
    if not behaviors:
        raise ShapeError("nothing to mix")
    sc = behaviors[0].scenario
    acc = np.zeros(sc.shape)
    for w, b in zip(weights, behaviors):
        if b.scenario.shape != sc.shape:
            raise ShapeError("cannot mix behaviors over different scenarios")
        acc = acc + w * b.table
    return Behavior(sc, acc)


# -- nonsignalling -------------------------------------------------------

def is_nonsignalling(b: Behavior, tol: float = 1e-10):
    """Check that every one-party-ignored marginal is independent of that party's input.

    Returns ``(ok, max_violation)``.
    """
    n = b.n_parties
    worst = 0.0
    for j in range(n):
        marg = b.table.sum(axis=n + j)
        ref = np.take(marg, [0], axis=j)
        worst = max(worst, float(np.max(np.abs(marg - ref))))
    return worst <= tol, worst


# -- digit-level reshaping ----------------------------------------------

def _digit_layout(scenario: Scenario):
    digits = scenario.all_digits
    in_sizes = [x for party in digits for x, _ in party]
    out_sizes = [a for party in digits for _, a in party]
    offsets, pos = [], 0
    for party in digits:
        offsets.append(pos)
        pos += len(party)
    return digits, in_sizes, out_sizes, offsets


def _digit_view(b: Behavior):
    digits, in_sizes, out_sizes, offsets = _digit_layout(b.scenario)
    return b.table.reshape(in_sizes + out_sizes), digits, offsets, len(in_sizes)


def _rebuild(table, kept_digits, had_digits):
    """Wrap a digit-level table whose axes are ``kept`` in-digits then out-digits."""
    inputs = tuple(int(np.prod([x for x, _ in party])) for party in kept_digits)
    outputs = tuple(int(np.prod([a for _, a in party])) for party in kept_digits)
    digits = tuple(kept_digits) if had_digits else None
    scenario = Scenario(inputs, outputs, digits)
    return Behavior(scenario, np.ascontiguousarray(table).ravel())


def _check_digit(scenario, key):
    p, d = key
    if not 0 <= p < scenario.n_parties or not 0 <= d < len(scenario.party_digits(p)):
        raise ShapeError(f"party {p} has no digit {d}")


def _reduce_digits(b: Behavior, select_in: Mapping, select_out: Mapping, sum_out: set):
    """Fix input/output digits and sum output digits; drop them from the scenario."""
    view, digits, offsets, n_in = _digit_view(b)
    removed = set(select_in)
    index = []
    for p, party in enumerate(digits):
        for d in range(len(party)):
            index.append(select_in.get((p, d), slice(None)))
    for p, party in enumerate(digits):
        for d in range(len(party)):
            index.append(select_out.get((p, d), slice(None)))
    # Sum first (axes keep positions), then index.
    sum_axes = tuple(n_in + offsets[p] + d for p, d in sum_out)
    if sum_axes:
        view = view.sum(axis=sum_axes, keepdims=True)
        for p, d in sum_out:
            index[n_in + offsets[p] + d] = 0
    reduced = view[tuple(index)]
    kept = []
    for p, party in enumerate(digits):
        keep = tuple(party[d] for d in range(len(party)) if (p, d) not in removed)
        if keep:
            kept.append(keep)
    if not kept:
        raise ShapeError("operation would remove every digit")
    return reduced, kept


def marginalize(b: Behavior, drop, fixed_inputs: Mapping = None) -> Behavior:
    """Sum out the output digits in ``drop`` at caller-fixed values of their input digits.

    ``drop`` is an iterable of ``(party, digit)`` pairs;  ``fixed_inputs`` maps
    each of them to the input value used (digits with a single input need no
    entry).  Parties left without digits are removed.
    """
    drop = set(drop)
    fixed_inputs = dict(fixed_inputs or {})
    select_in = {}
    for key in drop:
        _check_digit(b.scenario, key)
        n_in = b.scenario.party_digits(key[0])[key[1]][0]
        if key in fixed_inputs:
            x = int(fixed_inputs[key])
        elif n_in == 1:
            x = 0
        else:
            raise ShapeError(f"marginalizing digit {key} needs a fixed input value")
        if not 0 <= x < n_in:
            raise ShapeError(f"input {x} out of range for digit {key}")
        select_in[key] = x
    if not drop:
        return b
    reduced, kept = _reduce_digits(b, select_in, {}, drop)
    return _rebuild(reduced, kept, b.scenario.digits is not None)


def marginalize_parties(b: Behavior, parties, fixed_inputs: Mapping = None) -> Behavior:
    """Drop whole parties; ``fixed_inputs`` maps a party to its (joint) input value."""
    fixed_inputs = dict(fixed_inputs or {})
    drop, fixed = set(), {}
    for p in parties:
        sizes = [x for x, _ in b.scenario.party_digits(p)]
        values = decode_digits(sizes, int(fixed_inputs.get(p, 0)))
        for d, v in enumerate(values):
            drop.add((p, d))
            fixed[(p, d)] = v
    return marginalize(b, drop, fixed)


def condition_on(b: Behavior, fixed: Mapping, tol: float = 1e-12) -> Behavior:
    """Post-select on ``fixed[(party, digit)] = (input, output)`` and renormalize."""
    select_in, select_out = {}, {}
    for key, (x, a) in fixed.items():
        _check_digit(b.scenario, key)
        n_in, n_out = b.scenario.party_digits(key[0])[key[1]]
        if not (0 <= x < n_in and 0 <= a < n_out):
            raise ShapeError(f"value {(x, a)} out of range for digit {key}")
        select_in[key] = int(x)
        select_out[key] = int(a)
    if not fixed:
        return b
    reduced, kept = _reduce_digits(b, select_in, select_out, set())
    n_kept = sum(len(party) for party in kept)
    out_axes = tuple(range(n_kept, 2 * n_kept))
    norms = reduced.sum(axis=out_axes, keepdims=True)
    bad = np.argwhere(norms.reshape(norms.shape[:n_kept]) < tol)
    if bad.size:
        joint = tuple(int(v) for v in bad[0])
        raise ConditioningError(
            f"conditioning event has probability < {tol} at retained input digits {joint}",
            joint_input=joint)
    return _rebuild(reduced / norms, kept, b.scenario.digits is not None)


def group_parties(b: Behavior, groups: Sequence[Sequence[int]]) -> Behavior:
    """Merge parties into composite parties; entries are only re-indexed."""
    n = b.n_parties
    flat = [p for g in groups for p in g]
    if sorted(flat) != list(range(n)) or any(len(g) == 0 for g in groups):
        raise ShapeError(f"groups {groups} do not partition {n} parties")
    order = flat + [n + p for p in flat]
    table = np.transpose(b.table, order)
    sc = b.scenario
    inputs = tuple(int(np.prod([sc.inputs[p] for p in g])) for g in groups)
    outputs = tuple(int(np.prod([sc.outputs[p] for p in g])) for g in groups)
    grouped_digits = None
    if sc.digits is not None or any(len(g) > 1 for g in groups):
        grouped_digits = tuple(tuple(d for p in g for d in sc.party_digits(p)) for g in groups)
    return Behavior(Scenario(inputs, outputs, grouped_digits), np.ascontiguousarray(table).ravel())


def tensor_product(parts: Sequence) -> Behavior:
    """Product of factor behaviors placed on global parties and particle slots.

    ``parts`` is a list of ``(behavior, mapping)`` where ``mapping[q] =
    (global_party, slot)`` for each party ``q`` of the factor.  Slot ``s`` of a
    global party becomes its ``s``-th digit (most significant first).
    """
    slots = {}
    for f, (beh, mapping) in enumerate(parts):
        if len(mapping) != beh.n_parties:
            raise MappingError(f"factor {f}: mapping covers {len(mapping)} of {beh.n_parties} parties")
        for q, (g, s) in enumerate(mapping):
            key = (int(g), int(s))
            if key in slots:
                raise MappingError(f"slot {key} assigned twice (factors {slots[key][0]} and {f})")
            slots[key] = (f, q)
    n_global = max(g for g, _ in slots) + 1
    digits = []
    for g in range(n_global):
        used = sorted(s for gg, s in slots if gg == g)
        if used != list(range(len(used))) or not used:
            raise MappingError(f"global party {g} has slots {used}; expected 0..m-1")
        party = []
        for s in used:
            f, q = slots[(g, s)]
            sc = parts[f][0].scenario
            party.append((sc.inputs[q], sc.outputs[q]))
        digits.append(tuple(party))
    letters = iter(string.ascii_letters)
    axis_in, axis_out = {}, {}
    for g in range(n_global):
        for s in range(len(digits[g])):
            axis_in[(g, s)] = next(letters)
    for g in range(n_global):
        for s in range(len(digits[g])):
            axis_out[(g, s)] = next(letters)
    subs = []
    for beh, mapping in parts:
        keys = [(int(g), int(s)) for g, s in mapping]
        subs.append("".join(axis_in[k] for k in keys) + "".join(axis_out[k] for k in keys))
    out = "".join(axis_in.values()) + "".join(axis_out.values())
    table = np.einsum(",".join(subs) + "->" + out, *[beh.table for beh, _ in parts])
    return _rebuild(table, digits, True)
