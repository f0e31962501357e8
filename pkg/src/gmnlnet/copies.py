"""GMNL from copies of a GME state: post-selection, basis search and certification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .behavior import Behavior, condition_on, tensor_product
from .errors import NotGMEError, NotHardyEligibleError, ShapeError, ZeroProbabilityError
from .hardy import build_hardy_measurements, hardy_success_probability
from .inequality import (combine_copies_gmnl, combine_gmnl, copies_scenario, copies_spec,
                         evaluate, evaluate_group, svetlichny_functional)
from .network import (BOUNDED, CERTIFIED, INCONCLUSIVE, CertificationReport, CertifyOptions,
                      chsh_measurements, functional_soundness)
from .polytope import HybridClass, bipartite_epr2_decomposition, membership_in_Bn
from .quantum import (DEFAULT_CLASS_TOL, Entanglement, MeasurementFamily, StateVector,
                      born_behavior, classify_entanglement, haar_random_unitary,
                      non_gme_cut, perturb_basis, project_residual, schmidt_decompose)
from .behavior import Bipartition

DEFAULT_BUDGET = 200


@dataclass
class SearchResult:
    copy: int
    bases: dict  # projecting party -> basis (rows are kets; outcome 0 is row 0)
    residual: StateVector | None
    probability: float
    entanglement: object
    score: float
    trials: int
    log: list = field(default_factory=list)

    def to_json(self):
        return {
            "copy": self.copy,
            "bases": {str(p): {"re": b.real.tolist(), "im": b.imag.tolist()}
                      for p, b in sorted(self.bases.items())},
            "probability": self.probability,
            "entanglement": None if self.entanglement is None else str(self.entanglement),
            "score": self.score,
            "trials": self.trials,
        }


def projecting_parties(n, i):
    return [p for p in range(1, n) if p != i]


def _residual(state, i, bases):
    parties = projecting_parties(state.n_parties, i)
    return project_residual(state, parties, [bases[p][0] for p in parties])


def _score(state, i, bases, objective, tol):
    try:
        res, prob = _residual(state, i, bases)
    except ZeroProbabilityError:
        return -1.0, None, 0.0, None
    sf = schmidt_decompose(res)
    ent = classify_entanglement(sf, tol)
    if objective == "schmidt":
        lam = sf.coefficients
        return (float(lam[1]) if lam.size > 1 else 0.0), res, prob, ent
    if ent.kind is not Entanglement.PARTIALLY_ENTANGLED:
        return 0.0, res, prob, ent
    try:
        return prob * hardy_success_probability(sf), res, prob, ent
    except NotHardyEligibleError:
        return 0.0, res, prob, ent


def _structured(dims):
    """Computational and Fourier bases (Hadamard for qubits)."""
    out = []
    for d in dims:
        out.append(np.eye(d, dtype=complex))
    yield out
    fourier = []
    for d in dims:
        w = np.exp(2j * np.pi / d)
        fourier.append(np.array([[w ** (r * c) for c in range(d)] for r in range(d)]) / math.sqrt(d))
    yield fourier


def search_projecting_bases(state: StateVector, i: int, budget: int = DEFAULT_BUDGET, seed=0,
                            objective: str = "schmidt", start: dict = None,
                            tol: float = DEFAULT_CLASS_TOL) -> SearchResult:
    """Search bases of the projecting parties of copy ``i`` (outcome 0 is kept).

    ``objective`` is ``"schmidt"`` (second Schmidt coefficient of the
    residual) or ``"hardy"`` (outcome probability times the residual's Hardy
    probability).  Structured bases come first, then Haar-random ones; the
    second half of the budget perturbs the incumbent.  Deterministic given
    ``seed``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = state.n_parties
    if n < 3 or not 1 <= i <= n - 1:
        raise ShapeError(f"copy index {i} needs 1 <= i <= n-1 and n >= 3")
    parties = projecting_parties(n, i)
    dims = [state.party_dims[p] for p in parties]
    rng = np.random.default_rng([int(seed), int(i), 0 if objective == "schmidt" else 1])
    best = None
    log = []
    trials = 0

    def consider(cands, how):
        nonlocal best, trials
        bases = dict(zip(parties, cands))
        s, res, prob, ent = _score(state, i, bases, objective, tol)
        trials += 1
        if best is None or s > best[0] + 1e-15:
            best = (s, bases, res, prob, ent)
            log.append({"trial": trials, "how": how, "score": s})

    if start is not None:
        consider([np.asarray(start[p], dtype=complex) for p in parties], "start")
    for cands in _structured(dims):
        if trials >= budget:
            break
        consider(cands, "structured")
    n_random = max(0, (budget - trials) // 2)
    for _ in range(n_random):
        consider([haar_random_unitary(d, rng) for d in dims], "haar")
    scale = 0.5
    while trials < budget:
        cands = []
        for p, d in zip(parties, dims):
            b = best[1][p]
            a, c = rng.choice(d, size=2, replace=False) if d > 1 else (0, 0)
            t = scale * rng.standard_normal()
            ph = np.exp(1j * rng.uniform(0, 2 * np.pi))
            cands.append(perturb_basis(b, int(a), int(c), math.cos(t), ph * math.sin(t))
                         if d > 1 else b)
        before = best[0]
        consider(cands, "perturb")
        if best[0] <= before:
            scale = max(scale * 0.97, 1e-4)
    s, bases, res, prob, ent = best
    return SearchResult(i, bases, res, prob, ent, s, trials, log)


def binary_projector_family(basis):
    """Two identical inputs, outcomes ``{|b0><b0|, 1 - |b0><b0|}``."""
    b0 = np.asarray(basis, dtype=complex)[0]
    p = np.outer(b0, b0.conj())
    e = np.array([p, np.eye(p.shape[0]) - p])
    return MeasurementFamily(np.array([e, e]))


_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
_SVET_SIGN = np.array([[[1, 1], [1, -1]], [[1, -1], [-1, -1]]], dtype=float)


def _bloch(th, ph):
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def svetlichny_measurements(state: StateVector, seed=0, starts: int = 6):
    """Qubit observables maximizing the Svetlichny value of a three-qubit state.

    Works on the Pauli correlation tensor; returns the families and the value.
    """
    if state.party_dims != (2, 2, 2):
        raise ShapeError("Svetlichny measurements are built for three qubits")
    psi = state.tensor()
    corr = np.einsum("abc,iad,jbe,kcf,def->ijk", psi.conj(), _PAULI, _PAULI, _PAULI, psi).real
    rng = np.random.default_rng([int(seed), 7])

    def vectors(v):
        return [np.array([_bloch(v[4 * p + 2 * x], v[4 * p + 2 * x + 1]) for x in range(2)])
                for p in range(3)]

    def neg_value(v):
        a, b, c = vectors(v)
        return -float(np.einsum("xyz,xi,yj,zk,ijk->", _SVET_SIGN, a, b, c, corr))

    h = math.pi / 2
    # GHZ-optimal settings in the equatorial plane, then random starts.
    x0s = [np.array([h, 0, h, h, h, -math.pi / 4, h, math.pi / 4, h, 0, h, h])]
    x0s += [rng.uniform(0, math.pi, 12) for _ in range(starts)]
    best = None
    for x0 in x0s:
        r = minimize(neg_value, x0, method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 6000})
        if best is None or r.fun < best.fun - 1e-12:
            best = r
    families = []
    for vecs in vectors(best.x):
        eff = np.zeros((2, 2, 2, 2), dtype=complex)
        for x, n_vec in enumerate(vecs):
            obs = np.einsum("i,ijk->jk", n_vec, _PAULI)
            eff[x, 0], eff[x, 1] = (np.eye(2) + obs) / 2, (np.eye(2) - obs) / 2
        families.append(MeasurementFamily(eff))
    value = evaluate(svetlichny_functional(), born_behavior(state, families))
    return families, value


def _gme_check(state):
    cut = non_gme_cut(state)
    if cut is not None:
        rest = tuple(p for p in range(state.n_parties) if p not in cut)
        raise NotGMEError(f"not GME across cut {cut}|{rest}", cut=(cut, rest))


def copy_behavior(state, i, bases, alice, bob):
    """Single-copy behavior for copy ``i``: A and B_i measure, the rest project."""
    n = state.n_parties
    fams = []
    for p in range(n):
        if p == 0:
            fams.append(alice)
        elif p == i:
            fams.append(bob)
        else:
            fams.append(binary_projector_family(bases[p]))
    return born_behavior(state, fams)


def post_select(b: Behavior, i: int) -> Behavior:
    n = b.n_parties
    fixed = {(p, 0): (0, 0) for p in projecting_parties(n, i)}
    return condition_on(b, fixed)


def assemble_copies_behavior(copy_behaviors) -> Behavior:
    """Product over copies; copy ``i`` sits on digit ``i - 1`` of every party."""
    parts = []
    for i, b in sorted(copy_behaviors.items()):
        parts.append((b, [(p, i - 1) for p in range(b.n_parties)]))
    return tensor_product(parts)


def copies_pipeline(state: StateVector, bases: dict = None, options: CertifyOptions = None,
                    budget: int = DEFAULT_BUDGET) -> CertificationReport:
    """Certify GMNL of ``n - 1`` copies of an ``n``-party GME state.

    ``bases`` maps copy index ``i`` to ``{party: basis}`` for the projecting
    parties; missing copies are searched.
    """
    opts = options or CertifyOptions()
    n = state.n_parties
    if n < 3:
        raise ShapeError("the copies construction needs n >= 3 parties")
    _gme_check(state)
    bases = dict(bases or {})
    found = {}
    for i in range(1, n):
        if i in bases:
            given = {int(p): np.asarray(v, dtype=complex) for p, v in bases[i].items()}
            res = search_projecting_bases(state, i, 1, opts.seed, start=given, tol=opts.tol_class)
            found[i] = res
        else:
            found[i] = search_projecting_bases(state, i, budget, opts.seed, tol=opts.tol_class)
    kinds = {i: (r.entanglement.kind if r.entanglement is not None else None)
             for i, r in found.items()}
    report = CertificationReport(None, INCONCLUSIVE, "")
    report.edge_classes = {f"copy{i}": str(found[i].entanglement) for i in found}
    report.checks["search"] = [found[i].to_json() for i in sorted(found)]
    if any(k in (None, Entanglement.SEPARABLE) for k in kinds.values()):
        bad = [i for i, k in kinds.items() if k in (None, Entanglement.SEPARABLE)]
        report.explanation = (f"search exhausted budget: residuals of copies {bad} stayed "
                              f"separable")
        return report
    partial = [i for i, k in kinds.items() if k is Entanglement.PARTIALLY_ENTANGLED]
    maxent = [i for i, k in kinds.items() if k is Entanglement.MAXIMALLY_ENTANGLED]
    if not maxent:
        report.case = 1
        if not bases:
            # Refine each copy for a larger Hardy violation, starting from the found bases.
            for i in partial:
                ref = search_projecting_bases(state, i, budget, opts.seed, objective="hardy",
                                              start=found[i].bases, tol=opts.tol_class)
                if ref.score > 0:
                    found[i] = ref
            report.checks["search"] = [found[i].to_json() for i in sorted(found)]
        return _copies_case1(state, found, opts, report)
    if not partial:
        report.case = 2
        return _copies_case2(state, opts, report)
    report.case = 3
    return _copies_case3(state, found, partial, maxent, opts, report)


def _copies_case1(state, found, opts, report):
    n = state.n_parties
    copy_b, expected, consistency = {}, [], {}
    meas = {}
    for i in range(1, n):
        r = found[i]
        sf = schmidt_decompose(r.residual)
        alice, bob = build_hardy_measurements(sf, opts.hardy)
        b_i = copy_behavior(state, i, r.bases, alice, bob)
        copy_b[i] = b_i
        direct = born_behavior(r.residual, [alice, bob])
        cond = post_select(b_i, i)
        consistency[str(i)] = float(np.max(np.abs(cond.table - direct.table)))
        expected.append(r.probability * hardy_success_probability(sf, opts.hardy))
        meas[str(i)] = {"alice": alice.to_json(), "bob": bob.to_json()}
    b = assemble_copies_behavior(copy_b)
    f = combine_copies_gmnl(n)
    value = evaluate(f, b)
    zeros = {name: evaluate_group(f, b, name) for name in sorted(f.groups)
             if name != "P0|0" and not name.endswith("P00|00")}
    worst = functional_soundness(f, opts.soundness_samples, opts.seed)
    product = math.prod(expected)
    zeros_ok = all(v <= opts.tol_zero for v in zeros.values())
    report.behavior, report.functional, report.value = b, f, value
    report.measurements = meas
    report.checks.update({
        "post_selection_consistency": consistency,
        "expected_value": product, "value_minus_expected": value - product,
        "negative_terms": zeros, "negative_terms_ok": zeros_ok,
        "soundness_samples": opts.soundness_samples, "soundness_max": worst,
        "soundness_ok": worst <= opts.soundness_tol,
    })
    if value > opts.tol_value and zeros_ok and worst <= opts.soundness_tol:
        report.verdict = CERTIFIED
        report.explanation = (f"copies functional value {value:.6g} > {opts.tol_value:g}; every "
                              f"post-selected copy shows Hardy's paradox")
    else:
        report.explanation = f"copies functional value {value:.6g} not above {opts.tol_value:g}"
    return report


def _copies_case2(state, opts, report):
    """Residuals maximally entangled: test a single copy directly."""
    if state.party_dims != (2, 2, 2):
        report.verdict = BOUNDED
        report.explanation = ("all residuals maximally entangled; single-copy test is only "
                              "implemented for three qubits")
        return report
    fams, s_value = svetlichny_measurements(state, opts.seed)
    b = born_behavior(state, fams)
    report.behavior = b
    report.functional = svetlichny_functional()
    report.value = s_value
    report.measurements = {str(p): f.to_json() for p, f in enumerate(fams)}
    certs = {}
    for hclass in (HybridClass.NS_RESTRICTED, HybridClass.UNRESTRICTED):
        cert = membership_in_Bn(b, hclass, tol=opts.tol_lp)
        certs[str(hclass)] = cert.to_json()
    report.lp["single_copy_membership"] = certs
    infeasible = [k for k, c in certs.items() if not c["feasible"]]
    report.checks["svetlichny_value"] = s_value
    if str(opts.hclass) in infeasible:
        report.verdict = CERTIFIED
        report.explanation = (f"one copy is already GMNL: membership LP infeasible for "
                              f"{', '.join(infeasible)} (Svetlichny value {s_value:.6g} > 4)"
                              if s_value > 4 else
                              f"one copy is already GMNL: membership LP infeasible for "
                              f"{', '.join(infeasible)}")
    else:
        report.verdict = BOUNDED
        report.explanation = "all residuals maximally entangled; single-copy LP is feasible"
    return report


def _copies_case3(state, found, partial, maxent, opts, report):
    n = state.n_parties
    copy_b, hardy_terms, epr2 = {}, [], []
    for i in range(1, n):
        r = found[i]
        sf = schmidt_decompose(r.residual)
        if i in partial:
            alice, bob = build_hardy_measurements(sf, opts.hardy)
            hardy_terms.append(r.probability * hardy_success_probability(sf, opts.hardy))
        else:
            alice, bob = chsh_measurements(sf, opts.tol_class)
            direct = born_behavior(r.residual, [alice, bob])
            dec = bipartite_epr2_decomposition(direct, Bipartition(frozenset({0}), 2),
                                               tol=opts.tol_lp)
            epr2.append({"copy": i, "local_content": dec.local_content,
                         "upper_bound": dec.upper_bound})
        copy_b[i] = copy_behavior(state, i, r.bases, alice, bob)
    b = assemble_copies_behavior(copy_b)
    specs = [copies_spec(n, i) for i in partial]
    f = combine_gmnl(copies_scenario(n), specs, require_connected=False)
    value = evaluate(f, b)
    report.behavior, report.functional, report.value = b, f, value
    report.lp["copy_epr2"] = epr2
    report.checks.update({"hardy_value": value, "hardy_product": math.prod(hardy_terms),
                          "partial_copies": partial, "maxent_copies": maxent})
    report.verdict = BOUNDED
    report.explanation = ("mixed residuals: Hardy copies give a positive functional value, "
                          "maximally entangled copies are reported by their local content")
    return report
