"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import io
import itertools
import json
import math
import time

import numpy as np

from gmnlnet.behavior import (Scenario, canonical_bipartitions, deterministic_behavior,
                              local_behavior, mix, pr_box, uniform_behavior)
from gmnlnet.cli import EXIT_ERROR, main
from gmnlnet.copies import copies_pipeline, svetlichny_measurements
from gmnlnet.hardy import build_hardy_measurements, hardy_success_probability, verify_hardy
from gmnlnet.inequality import (LiftingSpec, combine_gmnl, evaluate, evaluate_tables,
                                seed_inequality)
from gmnlnet.network import CERTIFIED, NetworkGraph, certify_gmnl, chsh_measurements
from gmnlnet.polytope import (HybridClass, epr2_local_content, hybrid_vertices, membership_in_Bn,
                              sample_hybrid_behavior)
from gmnlnet.quantum import (Entanglement, born_behavior, classify_entanglement,
                             ghz_state, haar_random_state, maximally_entangled, project_residual,
                             schmidt_decompose, schmidt_state, w_state)

from oracles import born_table, correlator, deterministic_2222

S222 = Scenario((2, 2, 2), (2, 2, 2))
STAR = Scenario((4, 2, 2), (4, 2, 2), (((2, 2), (2, 2)), ((2, 2),), ((2, 2),)))
STAR_SPECS = [LiftingSpec(1, 0, 1, digit_i=0), LiftingSpec(2, 0, 2, digit_i=1)]
PARTIAL = schmidt_state([0.75, 0.25])
SVET_SIGN = {(0, 0, 0): 1, (0, 0, 1): 1, (0, 1, 0): 1, (0, 1, 1): -1,
             (1, 0, 0): 1, (1, 0, 1): -1, (1, 1, 0): -1, (1, 1, 1): -1}
TOPOLOGIES = {
    "star3": (3, [(0, 1), (0, 2)]),
    "star4": (4, [(0, 1), (0, 2), (0, 3)]),
    "path4": (4, [(0, 1), (1, 2), (2, 3)]),
    "T4": (4, [(0, 1), (1, 2), (1, 3)]),
}


def _verdict(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _net(n, pairs):
    return NetworkGraph.from_edges(n, [(i, j, PARTIAL) for i, j in pairs])


def test_acceptance_1_hardy(capsys):
    t0 = time.perf_counter()
    worst_zero, worst_oracle, min_p, count = 0.0, 0.0, 1.0, 0
    for d in (2, 3, 4):
        for seed in range(100):
            psi = haar_random_state((d, d), seed=1000 * d + seed)
            sf = schmidt_decompose(psi)
            assert classify_entanglement(sf).kind is Entanglement.PARTIALLY_ENTANGLED
            alice, bob = build_hardy_measurements(sf)
            cert = verify_hardy(born_behavior(psi, [alice, bob]), 1e-10)
            t = born_table(psi.amplitudes, [alice.effects, bob.effects])
            worst_zero = max(worst_zero, cert.p_0101, cert.p_1010, cert.p_0011)
            worst_oracle = max(worst_oracle, abs(cert.p_0000 - t[0, 0, 0, 0]),
                               abs(hardy_success_probability(sf) - t[0, 0, 0, 0]))
            min_p = min(min_p, cert.p_0000)
            count += cert.satisfied
    elapsed = time.perf_counter() - t0
    ok = count == 300 and worst_zero <= 1e-10 and min_p > 0 and worst_oracle <= 1e-12 and elapsed < 10
    _verdict(capsys, 1, ok, f"300 states, max zero {worst_zero:.1e}, oracle gap {worst_oracle:.1e}, "
                            f"min P(00|00) {min_p:.2e}, {elapsed:.2f}s")


def test_acceptance_2_seed(capsys):
    t0 = time.perf_counter()
    f = seed_inequality()
    sc = Scenario((2, 2), (2, 2))
    vals = [evaluate(f, deterministic_behavior(sc, [r[:2], r[2:]]))
            for r in itertools.product(range(2), repeat=4)]
    oracle = max(float(f.dense.ravel() @ t.ravel()) for t in deterministic_2222())
    pr = evaluate(f, pr_box())
    elapsed = time.perf_counter() - t0
    ok = len(vals) == 16 and max(vals) <= 0 and oracle <= 0 and pr == 0.5 and elapsed < 1
    _verdict(capsys, 2, ok, f"max on 16 vertices {max(vals):g}, PR {pr!r}, {elapsed:.3f}s")


def test_acceptance_3_gmnl_soundness(capsys):
    t0 = time.perf_counter()
    flat = combine_gmnl(S222, [LiftingSpec(1, 0, 1), LiftingSpec(2, 0, 2)])
    tables = np.concatenate([hybrid_vertices(S222, bip, HybridClass.NS_RESTRICTED).tables
                             for bip in canonical_bipartitions(3)])
    tables = tables.reshape(len(tables), -1)
    v_max = float(np.max(evaluate_tables(flat, tables)))
    f = combine_gmnl(STAR, STAR_SPECS)
    rng = np.random.default_rng(2024)
    samples = np.array([sample_hybrid_behavior(STAR, rng).flat() for _ in range(10 ** 4)])
    s_max = float(np.max(evaluate_tables(f, samples)))
    elapsed = time.perf_counter() - t0
    ok = len(tables) == 288 and v_max <= 1e-9 and s_max <= 1e-9 and elapsed < 60
    _verdict(capsys, 3, ok, f"{len(tables)} vertices max {v_max:.2e}, 10^4 samples max "
                            f"{s_max:.2e}, {elapsed:.1f}s")


def test_acceptance_4_case1(capsys):
    t0 = time.perf_counter()
    gaps, negs, verdicts = [], [], []
    for n, pairs in TOPOLOGIES.values():
        rep = certify_gmnl(_net(n, pairs))
        verdicts.append(rep.verdict == CERTIFIED and rep.case == 1)
        gaps.append(abs(rep.value - (3 / 56) ** len(pairs)))
        terms = rep.checks["negative_terms"]
        assert len(terms) == 3 * len(pairs)
        negs.append(max(terms.values()))
    elapsed = time.perf_counter() - t0
    ok = all(verdicts) and max(gaps) <= 1e-10 and max(negs) <= 1e-12 and elapsed < 30
    _verdict(capsys, 4, ok, f"4 topologies certified {all(verdicts)}, max gap {max(gaps):.1e}, "
                            f"max negative term {max(negs):.1e}, {elapsed:.1f}s")


def _local_behaviors(rng):
    out = [deterministic_behavior(S222, r) for r in
           itertools.islice(itertools.product(itertools.product(range(2), repeat=2), repeat=3), 0, 64, 9)]
    for _ in range(5):
        out.append(local_behavior(S222, [rng.dirichlet(np.ones(2), 2) for _ in range(3)]))
    out.append(mix(rng.dirichlet(np.ones(3)), out[:3]))
    out.append(uniform_behavior(S222))
    return out


def test_acceptance_5_membership(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, feasible = 0.0, True
    for b in _local_behaviors(rng):
        for cls in HybridClass:
            cert = membership_in_Bn(b, cls)
            feasible &= cert.feasible
            worst = max(worst, cert.reconstruction_error)
    ghz = ghz_state(3)
    fams, value = svetlichny_measurements(ghz)
    t = born_table(ghz.amplitudes, [f.effects for f in fams])
    oracle = sum(s * correlator(t, k) for k, s in SVET_SIGN.items())
    b = born_behavior(ghz, fams)
    infeasible = [not membership_in_Bn(b, cls).feasible for cls in HybridClass]
    elapsed = time.perf_counter() - t0
    ok = feasible and worst <= 1e-8 and all(infeasible) and abs(oracle - value) < 1e-9 \
        and value > 4 and elapsed < 60
    _verdict(capsys, 5, ok, f"local feasible {feasible}, reconstruction {worst:.1e}, GHZ "
                            f"Svetlichny {value:.6f} infeasible {infeasible}, {elapsed:.1f}s")


def test_acceptance_6_epr2(capsys):
    t0 = time.perf_counter()
    pr = epr2_local_content(pr_box()).local_content
    uni = epr2_local_content(uniform_behavior(Scenario((2, 2), (2, 2)))).local_content
    bell = maximally_entangled(2)
    ts = epr2_local_content(born_behavior(bell, chsh_measurements(schmidt_decompose(bell))))
    target = 2 - math.sqrt(2)
    certified = ts.lower_bound <= target + 1e-12 and ts.upper_bound >= target - 1e-12 \
        and ts.upper_bound - ts.lower_bound < 1e-6
    elapsed = time.perf_counter() - t0
    ok = abs(pr) <= 1e-9 and abs(uni - 1) <= 1e-9 and abs(ts.local_content - target) <= 1e-6 \
        and certified and elapsed < 10
    _verdict(capsys, 6, ok, f"PR {pr:.1e}, uniform {uni:.9f}, Tsirelson {ts.local_content:.9f} "
                            f"in [{ts.lower_bound:.9f}, {ts.upper_bound:.9f}], {elapsed:.2f}s")


def _overlap_gap(state, amps):
    return abs(1 - abs(np.vdot(state.amplitudes, amps)))


def test_acceptance_7_residuals(capsys):
    plus = np.array([1, 1]) / math.sqrt(2)
    zero, one = np.array([1.0, 0]), np.array([0, 1.0])
    r = math.sqrt(0.5)
    cases = [
        (ghz_state(3), plus, [r, 0, 0, r], 0.5),
        (ghz_state(3), zero, [1, 0, 0, 0], 0.5),
        (w_state(3), zero, [0, r, r, 0], 2 / 3),
        (w_state(3), one, [1, 0, 0, 0], 1 / 3),
    ]
    worst = 0.0
    for psi, v, amps, p in cases:
        res, prob = project_residual(psi, [2], [v])
        worst = max(worst, _overlap_gap(res, np.array(amps, dtype=complex)), abs(prob - p))
    post = 0.0
    for seed in range(5):
        rep = copies_pipeline(haar_random_state((2, 2, 2), seed=300 + seed))
        post = max([post] + list(rep.checks.get("post_selection_consistency", {}).values()))
    ok = worst <= 1e-12 and post <= 1e-10
    _verdict(capsys, 7, ok, f"analytic residual gap {worst:.1e}, post-selection gap {post:.1e}")


def test_acceptance_8_copies(capsys):
    t0 = time.perf_counter()
    cases, values = [], []
    for seed in range(20):
        rep = copies_pipeline(haar_random_state((2, 2, 2), seed=seed), budget=200)
        cases.append(rep.case)
        if rep.case == 1:
            values.append(rep.value)
            assert rep.value > 1e-8
        else:
            assert rep.case in (2, 3) and rep.explanation
    elapsed = time.perf_counter() - t0
    ok = None not in cases and all(v > 1e-8 for v in values) and elapsed < 300
    _verdict(capsys, 8, ok, f"cases {dict((c, cases.count(c)) for c in sorted(set(cases)))}, "
                            f"min Case-1 value {min(values) if values else float('nan'):.2e}, "
                            f"{elapsed:.1f}s")


def _cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_acceptance_9_reproducibility(capsys, tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj.to_json()))
        return str(p)

    bell = maximally_entangled(2)
    ghz = ghz_state(3)
    runs = [["hardy", "--state", write("h.json", haar_random_state((3, 3), seed=9))],
            ["epr2", "--behavior", write("pr.json", pr_box())],
            ["epr2", "--behavior",
             write("ts.json", born_behavior(bell, chsh_measurements(schmidt_decompose(bell))))],
            ["membership", "--behavior",
             write("ghz.json", born_behavior(ghz, svetlichny_measurements(ghz)[0])), "--class", "svet"],
            ["copies", write("g.json", ghz), "--seed", "4"],
            ["copies", write("s.json", haar_random_state((2, 2, 2), seed=11)), "--seed", "4"]]
    for name, (n, pairs) in TOPOLOGIES.items():
        runs.append(["certify-network", write(f"{name}.json", _net(n, pairs)), "--seed", "2"])
    runs.append(["membership", "--behavior", write("loc.json", uniform_behavior(S222))])
    same = [_cli(argv) == _cli(argv) for argv in runs]
    codes = [_cli(argv)[0] for argv in runs]
    ok = all(same) and EXIT_ERROR not in codes
    _verdict(capsys, 9, ok, f"{sum(same)}/{len(runs)} reports byte-identical, exit codes {codes}")

