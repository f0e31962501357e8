"""Command-line front end.

Exit codes
----------
certify-network, copies
    0 GMNL-certified, 2 bounded-evidence, 3 inconclusive, 1 error.
hardy
    0 paradox satisfied, 3 not satisfied, 1 error (including ineligible states).
membership
    0 the behavior lies in B_n, 4 it does not (GMNL for the class), 1 error.
other commands
    0 success, 1 error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass

from . import __version__
from .behavior import Behavior, is_nonsignalling
from .copies import copies_pipeline
from .errors import GMNLError
from .hardy import HardyParams, build_hardy_measurements, verify_hardy
from .inequality import LinearFunctional, combine_copies_gmnl, combine_gmnl, evaluate
from .network import (BOUNDED, CERTIFIED, CertifyOptions, NetworkGraph, assemble_network_behavior,
                      certify_gmnl, chsh_measurements, classify_edges, lifting_specs,
                      spanning_tree)
from .polytope import DEFAULT_CAP, HybridClass, epr2_local_content, membership_in_Bn
from .quantum import StateVector, born_behavior, schmidt_decompose
from .serialize import parse_with, render

EXIT_OK, EXIT_ERROR, EXIT_BOUNDED, EXIT_INCONCLUSIVE, EXIT_NOT_MEMBER = 0, 1, 2, 3, 4
VERDICT_EXIT = {CERTIFIED: EXIT_OK, BOUNDED: EXIT_BOUNDED}


@dataclass
class RunConfig:
    seed: int = 0
    tol_schmidt: float = 1e-9
    tol_lp: float = 1e-9
    tol_zero: float = 1e-12
    hclass: str = "NSRestricted"
    fmt: str = "json"
    vertex_cap: int = DEFAULT_CAP
    budget: int = 200

    def __post_init__(self):
        for name in ("tol_schmidt", "tol_lp", "tol_zero"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        if self.budget < 1 or self.vertex_cap < 1:
            raise ValueError("budget and vertex cap must be positive")
        self.hclass = str(HybridClass.parse(self.hclass))

    @classmethod
    def from_args(cls, args):
        return cls(seed=args.seed, tol_schmidt=args.tol_schmidt, tol_lp=args.tol_lp,
                   tol_zero=args.tol_zero, hclass=args.hclass, fmt=args.format,
                   vertex_cap=args.vertex_cap, budget=args.budget)

    def certify_options(self):
        return CertifyOptions(tol_zero=self.tol_zero, tol_lp=self.tol_lp,
                              tol_class=self.tol_schmidt, hclass=HybridClass.parse(self.hclass),
                              seed=self.seed)


def _report(command, config, result, summary):
    return {"tool": "gmnlnet", "version": __version__, "command": command,
            "config": asdict(config), "result": result, "summary": summary}


def _emit(report, config, out, err):
    if config.fmt == "json":
        out.write(render(report))
        for line in report["summary"]:
            err.write(line + "\n")
    else:
        for line in report["summary"]:
            out.write(line + "\n")


def _load_state(path):
    return parse_with(path, StateVector.from_json, "state")


def _load_behavior(path):
    return parse_with(path, Behavior.from_json, "behavior")


# -- commands ----------------------------------------------------------------

def cmd_hardy(args, config):
    state = _load_state(args.state)
    pair = tuple(args.pair) if args.pair else None
    params = HardyParams(args.alpha, args.delta, pair)
    alice, bob = build_hardy_measurements(schmidt_decompose(state), params)
    cert = verify_hardy(born_behavior(state, [alice, bob]), config.tol_zero)
    summary = [f"P(00|00) = {cert.p_0000:.12g}", f"P(01|01) = {cert.p_0101:.3g}",
               f"P(10|10) = {cert.p_1010:.3g}", f"P(00|11) = {cert.p_0011:.3g}",
               "Hardy paradox: " + ("satisfied" if cert.satisfied else "not satisfied")]
    result = {"certificate": cert.to_json(),
              "params": {"alpha": params.alpha, "delta": params.delta, "pair": pair}}
    return _report("hardy", config, result, summary), EXIT_OK if cert.satisfied else EXIT_INCONCLUSIVE


def cmd_behavior_validate(args, config):
    b = _load_behavior(args.behavior)
    ok, viol = is_nonsignalling(b, config.tol_lp)
    result = {"normalization_error": b.normalization_error(), "nonsignalling": ok,
              "max_signalling": viol, "scenario": b.scenario.to_json()}
    summary = [f"valid behavior, inputs {b.scenario.inputs}, outputs {b.scenario.outputs}",
               f"nonsignalling: {ok} (max deviation {viol:.3g})"]
    return _report("behavior validate", config, result, summary), EXIT_OK


def cmd_build_in(args, config):
    if args.copies is not None:
        f = combine_copies_gmnl(args.copies)
        summary = [f"copies functional for n = {args.copies}: {len(f.terms)} terms"]
    else:
        if args.network is None:
            raise GMNLError("build-In needs --network or --copies")
        g = spanning_tree(parse_with(args.network, NetworkGraph.from_json, "network"))
        cls = classify_edges(g, config.tol_schmidt)
        edges = [e.id for e in g.edges]
        assignments = {}
        for e in g.edges:
            assignments[e.id] = chsh_measurements(schmidt_decompose(e.state))
        scenario = assemble_network_behavior(g, assignments).scenario
        f = combine_gmnl(scenario, lifting_specs(g, edges))
        summary = [f"I_n on tree edges {edges} (case {cls.case}): {len(f.terms)} terms"]
    return _report("inequality build-In", config, {"functional": f.to_json()}, summary), EXIT_OK


def cmd_eval(args, config):
    f = parse_with(args.functional, LinearFunctional.from_json, "functional")
    b = _load_behavior(args.behavior)
    value = evaluate(f, b)
    summary = [f"value = {value:.12g} (bound {f.bound:g})",
               "violated" if value > f.bound + config.tol_zero else "not violated"]
    return _report("inequality eval", config, {"value": value, "bound": f.bound}, summary), EXIT_OK


def cmd_epr2(args, config):
    b = _load_behavior(args.behavior)
    dec = epr2_local_content(b, config.hclass, cap=config.vertex_cap, tol=config.tol_lp)
    summary = [f"local content ({config.hclass}) = {dec.local_content:.12g}",
               f"nonsignalling weight = {dec.p_ns:.12g}"]
    return _report("epr2", config, {"decomposition": dec.to_json()}, summary), EXIT_OK


def cmd_membership(args, config):
    b = _load_behavior(args.behavior)
    cert = membership_in_Bn(b, config.hclass, cap=config.vertex_cap, tol=config.tol_lp)
    summary = ["in B_n: " + ("yes" if cert.feasible else "no (GMNL for this class)")
               + f" [{config.hclass}]"]
    if not cert.feasible and cert.violation is not None:
        summary.append(f"separating functional violation = {cert.violation:.6g}")
    code = EXIT_OK if cert.feasible else EXIT_NOT_MEMBER
    return _report("membership", config, {"certificate": cert.to_json()}, summary), code


def _verdict_summary(rep):
    lines = [f"case: {rep.case}", f"verdict: {rep.verdict}", rep.explanation]
    if rep.value is not None:
        lines.insert(2, f"value: {rep.value:.12g}")
    return lines


def cmd_certify(args, config):
    g = parse_with(args.network, NetworkGraph.from_json, "network")
    rep = certify_gmnl(g, config.certify_options())
    code = VERDICT_EXIT.get(rep.verdict, EXIT_INCONCLUSIVE)
    return _report("certify-network", config, {"report": rep.to_json()}, _verdict_summary(rep)), code


def cmd_copies(args, config):
    state = _load_state(args.state)
    if args.n_copies is not None and args.n_copies != state.n_parties - 1:
        raise GMNLError(f"--n-copies must equal n - 1 = {state.n_parties - 1} for this state")
    rep = copies_pipeline(state, options=config.certify_options(), budget=config.budget)
    code = VERDICT_EXIT.get(rep.verdict, EXIT_INCONCLUSIVE)
    return _report("copies", config, {"report": rep.to_json()}, _verdict_summary(rep)), code


# -- parser ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("--tol-schmidt", type=float, default=1e-9)
    common.add_argument("--tol-lp", type=float, default=1e-9)
    common.add_argument("--tol-zero", type=float, default=1e-12)
    common.add_argument("--class", dest="hclass", choices=["ns", "svet"], default="ns",
                        help="hybrid class: nonsignalling sides (ns) or unrestricted (svet)")
    common.add_argument("--format", choices=["json", "text"], default="json",
                        help="json: report on stdout, summary on stderr; text: summary only")
    common.add_argument("--budget", type=int, default=200, help="basis search budget")
    common.add_argument("--vertex-cap", type=int, default=DEFAULT_CAP)

    p = argparse.ArgumentParser(prog="gmnlnet", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"gmnlnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("hardy", parents=[common], help="Hardy paradox for a bipartite state")
    s.add_argument("--state", required=True)
    s.add_argument("--alpha", type=float, default=math.pi / 4)
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--pair", type=int, nargs=2, metavar=("I0", "I1"))
    s.set_defaults(func=cmd_hardy)

    s = sub.add_parser("behavior", help="behavior utilities")
    bsub = s.add_subparsers(dest="action", required=True)
    v = bsub.add_parser("validate", parents=[common])
    v.add_argument("--behavior", required=True)
    v.set_defaults(func=cmd_behavior_validate)

    s = sub.add_parser("inequality", help="build or evaluate functionals")
    isub = s.add_subparsers(dest="action", required=True)
    b = isub.add_parser("build-In", parents=[common])
    b.add_argument("--network")
    b.add_argument("--copies", type=int, metavar="N")
    b.set_defaults(func=cmd_build_in)
    e = isub.add_parser("eval", parents=[common])
    e.add_argument("--functional", required=True)
    e.add_argument("--behavior", required=True)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("epr2", parents=[common], help="EPR2 local content")
    s.add_argument("--behavior", required=True)
    s.set_defaults(func=cmd_epr2)

    s = sub.add_parser("membership", parents=[common], help="membership in B_n")
    s.add_argument("--behavior", required=True)
    s.set_defaults(func=cmd_membership)

    s = sub.add_parser("certify-network", parents=[common], help="certify a network")
    s.add_argument("network")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("copies", parents=[common], help="certify copies of a GME state")
    s.add_argument("state")
    s.add_argument("--n-copies", type=int)
    s.set_defaults(func=cmd_copies)
    return p


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.from_args(args)
        report, code = args.func(args, config)
    except (GMNLError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR
    _emit(report, config, out, err)
    return code


if __name__ == "__main__":
    sys.exit(main())
