import io
import json

import numpy as np
import pytest

from gmnlnet.behavior import Scenario, deterministic_behavior, pr_box, uniform_behavior
from gmnlnet.cli import RunConfig, build_parser, main
from gmnlnet.network import NetworkGraph
from gmnlnet.quantum import (StateVector, basis_state, ghz_state, haar_random_state,
                             maximally_entangled, schmidt_state)

PARTIAL = schmidt_state([0.75, 0.25])


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj.to_json()))
    return str(p)


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def _net(n, pairs, states):
    return NetworkGraph.from_edges(n, [(i, j, s) for (i, j), s in zip(pairs, states)])


def test_hardy_partial(tmp_path):
    code, out, err = _run(["hardy", "--state", _write(tmp_path, "s.json", PARTIAL)])
    assert code == 0
    rep = json.loads(out)
    cert = rep["result"]["certificate"]
    assert cert["satisfied"] and abs(cert["p_0000"] - 3 / 56) < 1e-12
    assert rep["config"]["seed"] == 0 and rep["tool"] == "gmnlnet" and "version" in rep
    assert "Hardy paradox: satisfied" in err


def test_hardy_bell_pair(tmp_path):
    code, _, err = _run(["hardy", "--state", _write(tmp_path, "s.json", maximally_entangled(2))])
    assert code == 1
    assert "not Hardy-eligible: MaximallyEntangled" in err


def test_hardy_truncated_json(tmp_path):
    text = json.dumps(PARTIAL.to_json())[:-7]
    code, _, err = _run(["hardy", "--state", _write(tmp_path, "s.json", text)])
    assert code == 1 and "s.json:1:" in err and "JSON parse error" in err


def test_hardy_bad_field(tmp_path):
    code, _, err = _run(["hardy", "--state", _write(tmp_path, "s.json", '{"dims": [2, 2]}')])
    assert code == 1 and err.startswith("error:")


def test_text_format(tmp_path):
    code, out, _ = _run(["hardy", "--state", _write(tmp_path, "s.json", PARTIAL), "--format", "text"])
    assert code == 0 and out.splitlines()[-1] == "Hardy paradox: satisfied"


def test_behavior_validate(tmp_path):
    code, out, _ = _run(["behavior", "validate", "--behavior", _write(tmp_path, "b.json", pr_box())])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["nonsignalling"] is True and res["normalization_error"] < 1e-15
    bad = pr_box().to_json()
    bad["table"][0] = 0.9
    code, _, err = _run(["behavior", "validate", "--behavior",
                         _write(tmp_path, "bad.json", json.dumps(bad))])
    assert code == 1 and "error" in err


def test_certify_star(tmp_path):
    g = _net(3, [(0, 1), (0, 2)], [PARTIAL, PARTIAL])
    code, out, _ = _run(["certify-network", _write(tmp_path, "n.json", g)])
    assert code == 0
    rep = json.loads(out)["result"]["report"]
    assert rep["verdict"] == "GMNL-certified" and rep["value"] > 0
    assert "behavior" in rep and "functional" in rep


def test_certify_disconnected(tmp_path):
    g = _net(4, [(0, 1), (2, 3)], [PARTIAL, PARTIAL])
    code, _, err = _run(["certify-network", _write(tmp_path, "n.json", g)])
    assert code == 1 and "[0, 1]" in err and "[2, 3]" in err


def test_certify_mixed_network(tmp_path):
    g = _net(3, [(0, 1), (0, 2)], [maximally_entangled(2), PARTIAL])
    code, out, _ = _run(["certify-network", _write(tmp_path, "n.json", g)])
    assert code == 2
    assert json.loads(out)["result"]["report"]["verdict"] == "bounded-evidence"


def test_epr2_pr_box(tmp_path):
    code, out, _ = _run(["epr2", "--behavior", _write(tmp_path, "b.json", pr_box())])
    assert code == 0
    dec = json.loads(out)["result"]["decomposition"]
    assert abs(dec["local_content"]) < 1e-9


def test_membership(tmp_path):
    det = deterministic_behavior(Scenario((2, 2, 2), (2, 2, 2)), [[0, 1], [1, 1], [0, 0]])
    for cls in ("ns", "svet"):
        code, out, _ = _run(["membership", "--behavior", _write(tmp_path, "b.json", det),
                             "--class", cls])
        assert code == 0 and json.loads(out)["result"]["certificate"]["feasible"] is True
    code, _, _ = _run(["membership", "--behavior", _write(tmp_path, "pr.json", pr_box())])
    assert code == 4


def test_membership_capability(tmp_path):
    b = uniform_behavior(Scenario((2,) * 5, (2,) * 5))
    code, _, err = _run(["membership", "--behavior", _write(tmp_path, "b.json", b)])
    assert code == 1 and "error:" in err


def test_inequality_build_and_eval(tmp_path):
    g = _net(3, [(0, 1), (0, 2)], [PARTIAL, PARTIAL])
    code, out, _ = _run(["inequality", "build-In", "--network", _write(tmp_path, "n.json", g)])
    assert code == 0
    f_path = tmp_path / "f.json"
    f_path.write_text(json.dumps(json.loads(out)["result"]["functional"]))
    sc = Scenario((4, 2, 2), (4, 2, 2), (((2, 2), (2, 2)), ((2, 2),), ((2, 2),)))
    b_path = _write(tmp_path, "u.json", uniform_behavior(sc))
    code, out, _ = _run(["inequality", "eval", "--functional", str(f_path), "--behavior", b_path])
    assert code == 0 and json.loads(out)["result"]["value"] <= 1e-12
    code, out, _ = _run(["inequality", "build-In", "--copies", "3"])
    assert code == 0 and json.loads(out)["result"]["functional"]["terms"]
    code, _, _ = _run(["inequality", "build-In"])
    assert code == 1


def test_copies_commands(tmp_path):
    code, out, _ = _run(["copies", _write(tmp_path, "h.json", haar_random_state((2, 2, 2), seed=1)),
                         "--n-copies", "2"])
    assert code == 0 and json.loads(out)["result"]["report"]["value"] > 0
    code, out, _ = _run(["copies", _write(tmp_path, "g.json", ghz_state(3))])
    assert code == 0 and json.loads(out)["result"]["report"]["case"] == 2
    amp = np.kron(maximally_entangled(2).amplitudes, [1.0, 0.0])
    code, _, err = _run(["copies", _write(tmp_path, "b.json", StateVector((2, 2, 2), amp))])
    assert code == 1 and "not GME across cut" in err
    code, _, _ = _run(["copies", _write(tmp_path, "p.json", basis_state((2, 2, 2), (0, 0, 0)))])
    assert code == 1
    code, _, err = _run(["copies", _write(tmp_path, "g3.json", ghz_state(3)), "--n-copies", "3"])
    assert code == 1


def test_reruns_are_byte_identical(tmp_path):
    g = _write(tmp_path, "n.json", _net(3, [(0, 1), (1, 2)], [PARTIAL, schmidt_state([0.6, 0.4])]))
    s = _write(tmp_path, "h.json", haar_random_state((2, 2, 2), seed=4))
    for argv in (["certify-network", g, "--seed", "7"], ["copies", s, "--seed", "3"]):
        first, second = _run(argv), _run(argv)
        assert first == second
        assert json.loads(first[1])["config"]["seed"] == int(argv[-1])


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(tol_lp=0)
    with pytest.raises(ValueError):
        RunConfig(budget=0)
    args = build_parser().parse_args(["epr2", "--behavior", "x", "--class", "svet"])
    assert RunConfig.from_args(args).hclass == "Unrestricted"
    code, _, err = _run(["epr2", "--behavior", "b.json", "--tol-zero", "-1"])
    assert code == 1 and "tol_zero" in err
