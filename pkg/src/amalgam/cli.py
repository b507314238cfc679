"""Command-line entry point ``amalgam``.

Reports are JSON with sorted keys, so repeated runs are byte-identical;
wall time is only added with ``--timing``.
Exit status: 0 success, 2 invalid input, 3 a numerical check failed.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time

import numpy as np

from . import definetti, fps, ovfree
from .errors import AmalgamError, IllConditioned, ResidualTooLarge, ValidationError
from .finalg import State
from .modelio import DATA_DIR, element_to_json, encode, parse_model
from .subalg import ConditionalExpectation, center, subalgebra_from_elements
from .tolerance import tolerance

COMMANDS = ("moments", "cumulants", "tail", "check-exchangeable", "check-identical", "ergodic",
            "verdict", "gns-check", "demo-example47", "demo-remark")
NUMERICAL = (IllConditioned, ResidualTooLarge)


def _load(args):
    path = args.model or (DATA_DIR / "example47.model" if args.command.startswith("demo") else None)
    if path is None:
        raise ValidationError(f"{args.command} needs --model")
    return parse_model(path)


def _setting(args, params, name, default):
    val = getattr(args, name)
    return params.get(name, default) if val is None else val


def _word_arms(model, text):
    return [L.arm for L in ovfree.parse_word(model, text)]


def cmd_moments(args, model, params):
    if not args.word:
        raise ValidationError("moments needs --word")
    word = ovfree.parse_word(model, args.word)
    a = ovfree.moment_centering(model, word)
    b = ovfree.moment_cumulant(model, word)
    return {"word": args.word, "E": element_to_json(a), "phi": model.state(a),
            "engine_difference": float(np.max(np.abs((a - b).vec())))}


def cmd_cumulants(args, model, params):
    max_len = _setting(args, params, "max_len", 4)
    out = {"kappa": {str(n): element_to_json(ovfree.ov_cumulant(model, 0, n)) for n in range(1, max_len + 1)}}
    unit = model.base.unit()
    if args.word:
        arms = _word_arms(model, args.word)
        out["word"] = args.word
        out["cumulant"] = element_to_json(ovfree.cumulant_from_moments(model, [(i, unit) for i in arms]))
    worst = 0.0
    for n in range(2, min(max_len, 5) + 1):
        for arms in itertools.product(range(min(model.n_arms, 2)), repeat=n):
            if len(set(arms)) > 1:
                k = ovfree.cumulant_from_moments(model, [(i, unit) for i in arms])
                worst = max(worst, float(np.max(np.abs(k.vec()))))
    out["mixed_cumulant_max"] = worst
    return out


def _tail(args, model, params):
    return definetti.tail_algebra(model, _setting(args, params, "max_degree", 4))


def _tail_json(tail):
    T = tail.subalgebra
    return {"dimension": tail.dim, "converged": tail.converged, "degree_used": tail.degree_used,
            "dims_by_degree": tail.dims_by_degree, "center_dimension": center(T).dim,
            "basis": [element_to_json(e) for e in T.elements()]}


def cmd_tail(args, model, params):
    return _tail_json(_tail(args, model, params))


def _threshold(name, residual, tol):
    out = {name: residual, "passed": residual <= tol}
    if residual > tol:
        out["failure"] = f"{name} {residual:.3e} exceeds tolerance {tol:.1e}"
    return out


def cmd_check_exchangeable(args, model, params):
    max_len = _setting(args, params, "max_len", 4)
    return _threshold("residual", definetti.exchangeability_residual(model, max_len), args.tol_eff)


def cmd_check_identical(args, model, params):
    max_len = _setting(args, params, "max_len", 4)
    return _threshold("residual", ovfree.identical_distribution_residual(model, max_len), args.tol_eff)


def cmd_ergodic(args, model, params):
    pattern = [0]
    if args.word:
        arms = _word_arms(model, args.word)
        lo = min(arms)
        pattern = [i - lo for i in arms]
    q = _setting(args, params, "q", 0)
    K = _setting(args, params, "K", model.n_arms - max(pattern))
    res = definetti.ergodic_average_norm(model, pattern, q, K)
    out = {"pattern": pattern, "q": q, "K": K, "norm": res.value, "norm_squared": res.squared,
           "max_term_norm_squared": res.max_term_norm_sq, "bound": res.bound, "span": res.span,
           "within_bound": res.within_bound}
    if not res.within_bound:
        out["failure"] = "ergodic average exceeds its bound"
    return out


def _verdict_json(v):
    if isinstance(v, fps.NonCentralTail):
        return {"verdict": v.verdict, "diagnostic": v.diagnostic, "commutator_residual": v.commutator_residual}
    mix = v.mixture
    comps = [[{"atoms": a, "masses": m} for a, m in arms] for arms in mix.measures]
    return {"verdict": v.verdict, "weights": mix.weights, "components": comps, "bounds": mix.bounds,
            "mixture_residual": v.mixture_residual, "checked_up_to_length": v.max_len,
            "bound_residual": mix.bound_residual(), "equidistribution_residual": mix.equidistribution_residual()}


def cmd_verdict(args, model, params):
    tail = _tail(args, model, params)
    v = fps.centrality_verdict(model, tail, _setting(args, params, "max_len", 4))
    out = {"tail": _tail_json(tail), **_verdict_json(v)}
    if isinstance(v, fps.CentralTail) and v.mixture_residual > args.tol_eff:
        out["failure"] = "mixture identity fails"
    return out


def cmd_gns_check(args, model, params):
    arms = []
    for i, arm in enumerate(model.arms):
        target = subalgebra_from_elements(arm.algebra, [arm.embed(e) for e in model.base.basis()], 1e-12)
        state = State(arm.algebra, ovfree.induced_density(arm, model.state))
        E = ConditionalExpectation(arm.algebra, target, arm.embedding @ arm.expectation, state)
        res = fps.gns_projection_check(arm.algebra, state, E, args.tol_eff)
        arms.append({"arm": i + 1, "residual": res.residual, "hat_residual": res.hat_residual})
    worst = max(max(a["residual"], a["hat_residual"]) for a in arms)
    out = {"arms": arms, **_threshold("max_residual", worst, args.tol_eff)}
    return out


def cmd_demo_example47(args, model, params):
    t = _setting(args, params, "t", 0.25)
    n_arms = params.get("n_arms", 3)
    model = fps.example_47_model(t, n_arms=n_arms)
    tail = definetti.tail_algebra(model, _setting(args, params, "max_degree", 4))
    diag = subalgebra_from_elements(model.base, model.base.basis())
    v = fps.centrality_verdict(model, tail, _setting(args, params, "max_len", 6))
    x = model.x_word([0, 1])
    out = {"t": t, "n_arms": n_arms, "tail": _tail_json(tail),
           "tail_is_diagonal": tail.subalgebra.equals(diag, args.tol_eff),
           "E_x1x2": element_to_json(ovfree.moment_centering(model, x)),
           "phi_x1x2": ovfree.scalar_moment(model, x), **_verdict_json(v)}
    if tail.dim != 2 or v.verdict != "NonCentralTail":
        out["failure"] = "expected a two-dimensional non-central tail"
    return out


def cmd_demo_remark(args, model, params):
    rows = fps.margin_sweep(tol=args.tol_eff)
    out = {"sweep": rows}
    if any(abs(r["margin"] - r["delta"]) > 1e-12 for r in rows):
        out["failure"] = "faithfulness margin differs from delta"
    return out


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def build_parser():
    p = argparse.ArgumentParser(prog="amalgam", description="Amalgamated free products over block algebras.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", help="JSON model file (demos default to the bundled example)")
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--word", help='e.g. "x1 x2 x1"')
    p.add_argument("--t", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical reports)")
    return p


def run(argv=None):
    """``(exit_code, report, out_path)``."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    report = {"command": args.command}
    try:
        if args.command == "demo-remark" and not args.model:
            model, params = None, {}
        else:
            model, params = _load(args)
        tol = args.tol if args.tol is not None else params.get("tol", 1e-9)
        args.tol_eff = tol
        report["inputs"] = {"model": str(args.model) if args.model else None, "tol": tol,
                            "max_len": args.max_len if args.max_len is not None else params.get("max_len"),
                            "max_degree": args.max_degree if args.max_degree is not None else params.get("max_degree"),
                            "word": args.word, "t": args.t}
        with tolerance(tol):
            report["results"] = HANDLERS[args.command](args, model, params)
        code = 3 if "failure" in report["results"] else 0
    except NUMERICAL as exc:
        report["error"] = {"type": type(exc).__name__, "invariant": exc.invariant,
                           "message": str(exc), "residual": exc.residual}
        code = 3
    except AmalgamError as exc:
        report["error"] = {"type": type(exc).__name__, "invariant": exc.invariant,
                           "message": str(exc), "residual": exc.residual}
        code = 2
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    return code, report, args.out


def main(argv=None):
    code, report, out = run(argv)
    text = json.dumps(encode(report), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if "error" in report:
        sys.stderr.write(f"{report['error']['type']}: {report['error']['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
