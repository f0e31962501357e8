"""Qudit Hardy-paradox measurements and paradox verification."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .behavior import Behavior
from .errors import NotHardyEligibleError, ShapeError
from .quantum import (DEFAULT_CLASS_TOL, Entanglement, MeasurementFamily,
                      SchmidtForm, classify_entanglement)


@dataclass(frozen=True)
class HardyParams:
    """Free parameters of the construction: angle ``alpha`` in (0, pi/2) and phase ``delta``.

    ``schmidt_pair`` selects the two Schmidt components spanning the
    measured qubit subspace; ``None`` picks the default pair.
    """

    alpha: float = math.pi / 4
    delta: float = 0.0
    schmidt_pair: tuple = None

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi / 2:
            raise ValueError(f"alpha must lie strictly inside (0, pi/2), got {self.alpha!r}")
        if self.schmidt_pair is not None:
            i0, i1 = (int(v) for v in self.schmidt_pair)
            if i0 == i1:
                raise ValueError("schmidt_pair indices must differ")
            object.__setattr__(self, "schmidt_pair", (i0, i1))


@dataclass(frozen=True)
class HardyCertificate:
    p_0000: float
    p_0101: float
    p_1010: float
    p_0011: float
    satisfied: bool
    tol: float

    def to_json(self):
        return {"p_0000": self.p_0000, "p_0101": self.p_0101, "p_1010": self.p_1010,
                "p_0011": self.p_0011, "satisfied": self.satisfied, "tol": self.tol}


def default_pair(sf: SchmidtForm, tol=DEFAULT_CLASS_TOL):
    """Largest coefficient together with the largest one strictly below it."""
    lam = sf.coefficients
    for j in range(1, lam.size):
        if tol < lam[j] < lam[0] - tol:
            return 0, j
    return None


def _eligible_pair(sf: SchmidtForm, params: HardyParams, tol=DEFAULT_CLASS_TOL):
    ent = classify_entanglement(sf, tol)
    if ent.kind is not Entanglement.PARTIALLY_ENTANGLED:
        raise NotHardyEligibleError(f"not Hardy-eligible: {ent}", entanglement=ent)
    pair = params.schmidt_pair or default_pair(sf, tol)
    i0, i1 = pair
    lam = sf.coefficients
    if not (0 <= i0 < lam.size and 0 <= i1 < lam.size):
        raise NotHardyEligibleError(f"Schmidt pair {pair} out of range", entanglement=ent)
    if lam[i0] <= tol or lam[i1] <= tol or abs(lam[i0] - lam[i1]) <= tol:
        raise NotHardyEligibleError(
            f"not Hardy-eligible on pair {pair}: coefficients {lam[i0]!r}, {lam[i1]!r}",
            entanglement=ent)
    return i0, i1


def hardy_vectors(sf: SchmidtForm, params: HardyParams):
    """Unit kets ``e_{0|0}, e_{1|1}, f_{0|0}, f_{1|1}`` in each party's local space."""
    i0, i1 = _eligible_pair(sf, params)
    l0, l1 = sf.coefficients[i0], sf.coefficients[i1]
    c, s = math.cos(params.alpha), math.sin(params.alpha)
    ph = np.exp(1j * params.delta)
    u0, u1 = sf.left_basis[i0], sf.left_basis[i1]
    v0, v1 = sf.right_basis[i0], sf.right_basis[i1]
    # The construction specifies bras; the kets carry the conjugate coefficients.
    bras = {
        "e00": (c, ph * s),
        "e11": (l0 * c, l1 * ph * s),
        "f00": (l1 ** 1.5 * ph * s, -(l0 ** 1.5) * c),
        "f11": (l1 ** 0.5 * ph * s, -(l0 ** 0.5) * c),
    }
    kets = {}
    for name, (b0, b1) in bras.items():
        k0, k1 = (u0, u1) if name[0] == "e" else (v0, v1)
        vec = np.conj(b0) * k0 + np.conj(b1) * k1
        kets[name] = vec / np.linalg.norm(vec)
    # Orthogonal complement of e_{1|1} inside span{u0, u1}.
    e11 = kets["e11"]
    a, b = np.vdot(u0, e11), np.vdot(u1, e11)
    perp = -np.conj(b) * u0 + np.conj(a) * u1
    kets["e11_perp"] = perp / np.linalg.norm(perp)
    return kets


def build_hardy_measurements(sf: SchmidtForm, params: HardyParams = HardyParams()):
    """Alice's and Bob's 2-input, 2-output projective families.

    Rank-one projectors are placed on the paradox outcomes of the
    construction; the other outcome of each input is the complement
    ``1 - projector`` so completeness holds exactly.
    """
    k = hardy_vectors(sf, params)
    d_a, d_b = sf.dims

    def proj(v):
        return np.outer(v, v.conj())

    eye_a, eye_b = np.eye(d_a), np.eye(d_b)
    e00, e01 = proj(k["e00"]), proj(k["e11_perp"])
    alice = MeasurementFamily(np.array([[e00, eye_a - e00],
                                        [e01, eye_a - e01]]))
    f00, f11 = proj(k["f00"]), proj(k["f11"])
    bob = MeasurementFamily(np.array([[f00, eye_b - f00],
                                      [eye_b - f11, f11]]))
    return alice, bob


def hardy_success_probability(sf: SchmidtForm, params: HardyParams = HardyParams()) -> float:
    """``P(00|00)`` of the normalized construction, in closed form."""
    i0, i1 = _eligible_pair(sf, params)
    l0, l1 = float(sf.coefficients[i0]), float(sf.coefficients[i1])
    c2, s2 = math.cos(params.alpha) ** 2, math.sin(params.alpha) ** 2
    numerator = s2 * c2 * l0 * l1 * (l1 - l0) ** 2
    # |e_{0|0}| = 1; |f_{0|0}|^2 normalizes Bob's projector.
    return numerator / (l1 ** 3 * s2 + l0 ** 3 * c2)


def verify_hardy(b: Behavior, tol: float = 1e-10) -> HardyCertificate:
    sc = b.scenario
    if sc.inputs != (2, 2) or sc.outputs != (2, 2):
        raise ShapeError(f"Hardy check needs a (2,2;2,2) behavior, got inputs {sc.inputs}, "
                         f"outputs {sc.outputs}")
    t = b.table  # t[x, y, a, b]
    p0000 = float(t[0, 0, 0, 0])
    p0101 = float(t[0, 1, 0, 1])
    p1010 = float(t[1, 0, 1, 0])
    p0011 = float(t[1, 1, 0, 0])
    ok = p0101 <= tol and p1010 <= tol and p0011 <= tol and p0000 > tol
    return HardyCertificate(p0000, p0101, p1010, p0011, bool(ok), tol)
