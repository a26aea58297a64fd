"""Command-line front end.

Every invocation emits exactly one JSON envelope on stdout:

    {"command": ..., "inputs_digest": "sha256:...", "seed": ...,
     "results": {...}, "residuals": {...}, "wall_time_ms": ...}

The results payload is deterministic for a fixed (command, inputs, seed):
floats are rounded to 12 significant digits and keys are sorted.  Exit codes:
0 success, 1 infeasible problem, 2 malformed input (the diagnostic names the
offending JSON path or flag).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from . import frl, polymatroid, regions, scalable, strategy, suites
from .polymatroid import parse_subset, subset_name
from .probability import (
    Alphabet,
    DistortionMeasure,
    InfeasibleError,
    InvalidInputError,
    JointPmf,
    MdrdError,
)
from .search import Budget


class InputError(Exception):
    """Malformed input; `path` names the offending file/JSON location."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Envelope plumbing
# ---------------------------------------------------------------------------


def _round_floats(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    return obj


def render_payload(results: Any) -> str:
    return json.dumps(_round_floats(results), sort_keys=True, separators=(",", ":"))


def _digest(files: Mapping[str, bytes], params: Mapping[str, Any]) -> str:
    body = {
        "files": {k: hashlib.sha256(v).hexdigest() for k, v in sorted(files.items())},
        "params": _round_floats(dict(params)),
    }
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(blob).hexdigest()


def _load_json(path: str) -> tuple[dict, bytes]:
    try:
        raw = open(path, "rb").read()
    except OSError as e:
        raise InputError(path, f"cannot read file ({e})") from None
    try:
        return json.loads(raw.decode()), raw
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputError(path, f"invalid JSON ({e})") from None


def _load_joint(path: str, mode: str | None) -> tuple[JointPmf, bytes]:
    obj, raw = _load_json(path)
    try:
        return JointPmf.from_json(obj, mode=mode), raw
    except KeyError as e:
        raise InputError(f"{path}#{e.args[0]}", "missing field") from None
    except (InvalidInputError, TypeError, ValueError) as e:
        raise InputError(path, str(e)) from None


def _load_scheme(path: str, mode: str | None) -> tuple[regions.AuxScheme, bytes]:
    obj, raw = _load_json(path)
    try:
        return regions.AuxScheme.from_json(obj, mode=mode), raw
    except KeyError as e:
        raise InputError(f"{path}#{e.args[0]}", "missing field") from None
    except (MdrdError, TypeError, ValueError) as e:
        raise InputError(path, str(e)) from None


def _source_pmf(spec: str, mode: str | None) -> tuple[JointPmf, bytes]:
    if spec == "bss":
        return JointPmf([Alphabet("X", 2)], [0.5, 0.5]), b"bss"
    return _load_joint(spec, mode)


def _distortion(spec: str, source: JointPmf) -> tuple[DistortionMeasure, bytes]:
    if spec == "hamming":
        x = source.axes[0]
        return DistortionMeasure.hamming(x, Alphabet("Xhat", x.size)), b"hamming"
    obj, raw = _load_json(spec)
    try:
        x = source.axes[0]
        table = obj["table"]
        recon = Alphabet(obj.get("recon", "Xhat"), len(table[0]))
        return DistortionMeasure(x, recon, table), raw
    except KeyError as e:
        raise InputError(f"{spec}#{e.args[0]}", "missing field") from None
    except (InvalidInputError, TypeError, ValueError, IndexError) as e:
        raise InputError(spec, str(e)) from None


def _budget(args) -> Budget:
    kw = {}
    if getattr(args, "restarts", None) is not None:
        kw["restarts"] = args.restarts
    if getattr(args, "budget", None) is not None:
        kw["iters"] = args.budget
    return Budget(**kw)


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns (results, residuals, files, params)
# ---------------------------------------------------------------------------


def _cmd_frl(args):
    joint, raw = _load_joint(args.joint, args.mode)
    text = args.axes
    if ":" in text:
        groups = [g.split(",") if g else [] for g in text.split(":")]
        if len(groups) != 3 or len(groups[2]) != 1:
            raise InputError("--axes", "expected U-group:V-group:W (one W axis)")
        _u, v_axes, (w_axis,) = groups
    else:
        parts = [p for p in text.split(",") if p]
        if len(parts) != 3:
            raise InputError("--axes", "expected three axis names U,V,W")
        _u, v, w_axis = parts
        v_axes = [v]
    dec = frl.frl_decompose(joint, v_axes, w_axis)
    rep = frl.frl_verify(joint, dec, v_axes, w_axis)
    results = {
        "z_pmf": [f"{p.numerator}/{p.denominator}" for p in dec.z_pmf],
        "z_pmf_float": [float(p) for p in dec.z_pmf],
        "f": dec.f.tolist(),
        "report": rep.to_json(),
    }
    return results, {}, {args.joint: raw}, {"axes": text}


def _cmd_psi(args):
    scheme, raw = _load_scheme(args.scheme, args.mode)
    joint = scheme.joint.to_float()
    L = scheme.L
    if args.action == "eval":
        K = parse_subset(args.subset)
        value = polymatroid.psi(joint, L, K)
        results = {"subset": "".join(str(k) for k in sorted(K)), "psi_bits": value}
        return results, {}, {args.scheme: raw}, {"subset": args.subset}
    fn = polymatroid.psi_fn(joint, L)
    verts = polymatroid.enumerate_vertices(fn)
    lines = ["permutation," + ",".join(f"R{k}" for k in range(1, L + 1))]
    for v in verts:
        rates = ",".join(f"{r:.12g}" for r in v.rates)
        lines.append("".join(str(k) for k in v.permutation) + "," + rates)
    results = {
        "csv": "\n".join(lines),
        "vertices": [{"permutation": list(v.permutation), "rates": list(v.rates)} for v in verts],
    }
    return results, {}, {args.scheme: raw}, {"action": "vertices"}


def _parse_distortion_targets(text: str) -> dict[frozenset[int], float]:
    try:
        obj = json.loads(text)
        return {parse_subset(k): float(v) for k, v in obj.items()}
    except (json.JSONDecodeError, TypeError, ValueError, AttributeError) as e:
        raise InputError("--distortions", f"expected JSON object of subset->target ({e})") from None


def _cmd_region(args):
    if args.action == "eval":
        scheme, raw = _load_scheme(args.scheme, args.mode)
        d = None
        if args.distortion:
            d, _ = _distortion(args.distortion, scheme.joint.marginalize(["X"]))
        fam = regions.normalize_family(args.family)
        evaluator = {
            "egc-star": regions.egc_star_point,
            "egc": regions.egc_point,
            "zb": regions.zb_point,
            "vkg": regions.vkg_constraints,
            "vkg-star": regions.vkg_constraints,
        }.get(fam)
        if evaluator is None:
            raise InputError("--family", f"no point evaluator for family {fam!r}")
        point = evaluator(scheme, d)
        results = point.to_json()
        results["vertices"] = {
            w: regions.two_description_vertex(point, w).to_json()
            for w in ("v1", "v2")
            if fam in ("egc-star", "egc", "zb")
        }
        return results, {}, {args.scheme: raw}, {"family": args.family}

    source, src_raw = _source_pmf(args.source, args.mode)
    d, d_raw = _distortion(args.distortion, source)
    targets = _parse_distortion_targets(args.distortions)
    weights = [float(w) for w in args.weights.split(",")]
    cards = None
    if args.cardinalities:
        try:
            cards = {str(k): int(v) for k, v in json.loads(args.cardinalities).items()}
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            raise InputError("--cardinalities", str(e)) from None
    out = regions.optimize_weighted_sum(
        source, d, targets, args.family, weights,
        cardinalities=cards, budget=_budget(args), seed=args.seed,
        keep_trace=args.trace is not None,
    )
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("phase,iter,objective,violation\n")
            for row in out.trace:
                fh.write(",".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in row) + "\n")
    results = out.to_json()
    results.pop("scheme", None) if args.no_scheme else None
    files = {args.source: src_raw, args.distortion: d_raw}
    params = {
        "family": args.family, "weights": args.weights,
        "distortions": args.distortions, "seed": args.seed,
    }
    return results, out.residuals, files, params


def _cmd_scalable(args):
    if args.action == "rd":
        source, src_raw = _source_pmf(args.source, args.mode)
        d, d_raw = _distortion(args.distortion, source)
        point = scalable.rd_function(source, d, args.D)
        results = point.to_json()
        results["test_channel"] = point.test_channel.to_json()["rows"]
        return results, {}, {args.source: src_raw, args.distortion: d_raw}, {"D": args.D}

    if args.action == "total-rate":
        source, src_raw = _source_pmf(args.source, args.mode)
        d, d_raw = _distortion(args.distortion, source)
        r1 = args.R1
        if r1 is None:
            r1 = scalable.rd_function(source, d, args.D1).R
        inst = scalable.ScalableInstance(source, d, r1, args.D1, args.D12)
        res = scalable.min_total_rate(inst, budget=_budget(args), seed=args.seed)
        return (
            res.to_json(),
            res.residuals,
            {args.source: src_raw, args.distortion: d_raw},
            {"R1": r1, "D1": args.D1, "D12": args.D12, "seed": args.seed},
        )

    # d2star
    params = {"D1": args.D1, "D12": args.D12, "seed": args.seed, "variant": "general"}
    if args.closed_form:
        value = scalable.bss_d2_star_closed_form(args.D1, args.D12)
        params["variant"] = "closed-form"
        return {"value": value}, {}, {}, params
    if args.structured:
        value = scalable.bss_d2_star_structured(args.D1, args.D12, args.grid)
        params["variant"] = "structured"
        params["grid"] = args.grid
        return {"value": value}, {}, {}, params
    source, src_raw = _source_pmf(args.source, args.mode)
    d, d_raw = _distortion(args.distortion, source)
    r1 = scalable.rd_function(source, d, args.D1).R
    inst = scalable.ScalableInstance(source, d, r1, args.D1, args.D12)
    res = scalable.d2_star(inst, cardinality_cap=args.cap, budget=_budget(args), seed=args.seed)
    results = res.to_json()
    if res.joint is not None:
        results["witness_joint"] = res.joint.to_json()
    return results, res.residuals, {args.source: src_raw, args.distortion: d_raw}, params


def _cmd_strategy(args):
    obj, raw = _load_json(args.channel)
    try:
        ch = strategy.StateChannel.from_json(obj)
    except KeyError as e:
        raise InputError(f"{args.channel}#{e.args[0]}", "missing field") from None
    except (MdrdError, TypeError, ValueError) as e:
        raise InputError(args.channel, str(e)) from None
    results = {}
    if args.method in ("direct", "both"):
        results["direct"] = strategy.capacity_direct(ch).to_json()
    if args.method in ("shannon", "both"):
        results["shannon"] = strategy.capacity_strategy(ch).to_json()
    if args.method == "both":
        results["gap"] = abs(results["direct"]["value"] - results["shannon"]["value"])
    return results, {}, {args.channel: raw}, {"method": args.method}


def _cmd_verify(args):
    name = args.suite
    if name not in suites.SUITES:
        raise InputError("--suite", f"unknown suite {name!r}; have {sorted(suites.SUITES)}")
    kwargs: dict[str, Any] = {}
    if name in ("frl", "polymatroid", "equivalence", "strategy", "bss-optimizer"):
        kwargs["seed"] = args.seed
    if name == "bss" and args.grid is not None:
        kwargs["grid"] = args.grid
    if name == "bss-optimizer":
        kwargs["fast"] = args.fast
    if name == "frl" and args.cases is not None:
        kwargs["cases"] = args.cases
    if name in ("polymatroid", "strategy") and args.cases is not None:
        kwargs["cases"] = args.cases
    result = suites.SUITES[name](**kwargs)
    payload = result.to_json()
    payload.pop("wall_time_s")  # timing is reported in the envelope instead
    return payload, {}, {}, {"suite": name, "seed": args.seed}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mdrd",
        description="Finite-alphabet multiple-description rate-distortion toolkit",
    )
    p.add_argument("--seed", type=int, default=0, help="random seed for searches")
    p.add_argument("--mode", choices=["rational", "float"], default=None,
                   help="arithmetic mode override for JSON inputs")
    p.add_argument("--restarts", type=int, default=None, help="search restarts")
    p.add_argument("--budget", type=int, default=None, help="search iterations per restart")
    p.add_argument("--trace", default=None, help="write a CSV search trace to this path")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("frl", help="noise-substitution decomposition")
    qs = q.add_subparsers(dest="action", required=True)
    qd = qs.add_parser("decompose")
    qd.add_argument("joint", help="joint pmf JSON file")
    qd.add_argument("--axes", required=True, help="U,V,W or U-group:V-group:W")

    q = sub.add_parser("psi", help="layered-scheme rate set-function")
    qs = q.add_subparsers(dest="action", required=True)
    qe = qs.add_parser("eval")
    qe.add_argument("scheme", help="scheme JSON file")
    qe.add_argument("--subset", required=True, help="description subset, e.g. 1,3")
    qv = qs.add_parser("vertices")
    qv.add_argument("scheme", help="scheme JSON file")

    q = sub.add_parser("region", help="achievable-region evaluation and search")
    qs = q.add_subparsers(dest="action", required=True)
    qe = qs.add_parser("eval")
    qe.add_argument("scheme")
    qe.add_argument("--family", required=True)
    qe.add_argument("--distortion", default=None, help="'hamming' or distortion JSON")
    qo = qs.add_parser("optimize")
    qo.add_argument("--family", required=True)
    qo.add_argument("--weights", required=True, help="comma-separated nonnegative weights")
    qo.add_argument("--distortions", required=True, help='JSON like {"1":0.3,"12":0.1}')
    qo.add_argument("--source", default="bss", help="'bss' or source pmf JSON")
    qo.add_argument("--distortion", default="hamming")
    qo.add_argument("--cardinalities", default=None, help='JSON like {"X0":2}')
    qo.add_argument("--no-scheme", action="store_true", help="omit the witness scheme")

    q = sub.add_parser("scalable", help="successive-refinement computations")
    qs = q.add_subparsers(dest="action", required=True)
    qr = qs.add_parser("rd")
    qr.add_argument("--source", default="bss")
    qr.add_argument("--distortion", default="hamming")
    qr.add_argument("--D", type=float, required=True)
    qt = qs.add_parser("total-rate")
    qt.add_argument("--source", default="bss")
    qt.add_argument("--distortion", default="hamming")
    qt.add_argument("--R1", type=float, default=None, help="defaults to R(D1)")
    qt.add_argument("--D1", type=float, required=True)
    qt.add_argument("--D12", type=float, required=True)
    qd = qs.add_parser("d2star")
    qd.add_argument("--source", default="bss")
    qd.add_argument("--distortion", default="hamming")
    qd.add_argument("--D1", type=float, required=True)
    qd.add_argument("--D12", type=float, required=True)
    qd.add_argument("--closed-form", action="store_true")
    qd.add_argument("--structured", action="store_true")
    qd.add_argument("--grid", type=float, default=1e-4)
    qd.add_argument("--general", action="store_true")
    qd.add_argument("--cap", type=int, default=None, help="refinement-layer cardinality cap")

    q = sub.add_parser("strategy", help="state-informed capacity")
    qs = q.add_subparsers(dest="action", required=True)
    qc = qs.add_parser("capacity")
    qc.add_argument("channel", help="state-channel JSON file")
    qc.add_argument("--method", choices=["direct", "shannon", "both"], default="both")

    q = sub.add_parser("verify", help="bundled verification suites")
    q.add_argument("--suite", required=True)
    q.add_argument("--grid", type=float, default=None)
    q.add_argument("--cases", type=int, default=None)
    q.add_argument("--fast", action="store_true", help="reduced budgets for smoke runs")
    return p


_HANDLERS = {
    "frl": _cmd_frl,
    "psi": _cmd_psi,
    "region": _cmd_region,
    "scalable": _cmd_scalable,
    "strategy": _cmd_strategy,
    "verify": _cmd_verify,
}


def dispatch(argv: list[str]) -> tuple[dict, int]:
    """Run one command; returns (envelope, exit_code)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return {"error": "unrecognized arguments", "argv": argv}, 2 if e.code else 0
    t0 = time.time()
    try:
        results, residuals, files, params = _HANDLERS[args.command](args)
        code = 0
    except InputError as e:
        return {"command": args.command, "error": str(e), "error_path": e.path}, 2
    except InfeasibleError as e:
        env = {
            "command": args.command,
            "error": str(e),
            "results": getattr(getattr(e, "result", None), "to_json", dict)(),
        }
        return env, 1
    except (InvalidInputError, MdrdError) as e:
        return {"command": args.command, "error": str(e)}, 2
    envelope = {
        "command": args.command + " " + getattr(args, "action", ""),
        "inputs_digest": _digest(files, {**params, "mode": args.mode}),
        "seed": args.seed,
        "results": _round_floats(results),
        "residuals": _round_floats(residuals),
        "wall_time_ms": int((time.time() - t0) * 1000),
    }
    return envelope, code


def main(argv: list[str] | None = None) -> int:
    envelope, code = dispatch(sys.argv[1:] if argv is None else argv)
    print(json.dumps(_round_floats(envelope), sort_keys=True, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
