"""``pointdyn`` command line: JSON reports on stdout, exit 0 (true), 1 (false), 2 (could not run)."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from . import formats
from .entropy import growth_report
from .expansivity import classify_expansivity, covering_constant, global_expansivity
from .fixtures import gen_carvalho_cordeiro, gen_doubling, gen_perturbed_family, gen_shift_words
from .horseshoe import CertificationFailed, certify, certify_from_periodic_points, verify_certificate
from .limits import MapFamily, check_limit_nonwandering, family_shadowing_constant
from .metric import FINITE_MODEL_CAVEATS, GuardExceeded, classify_point, closed_ball, orbit_structure
from .shadowing import brute_force_shadowing, decide_shadowing

EXIT_TRUE, EXIT_FALSE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load(path: str, digests: dict):
    data = _read(path)
    digests[path] = hashlib.sha256(data).hexdigest()
    return formats.parse(data)


def _system(obj):
    return obj.limit if isinstance(obj, MapFamily) else obj


def _point(system, p: int) -> int:
    if not 0 <= p < system.n:
        raise InputError(f"point {p} is outside 0..{system.n - 1}")
    return p


def _write_atomic(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# subcommands; each returns (verdict, results)


def cmd_validate(args, digests):
    data = _read(args.file)
    digests[args.file] = hashlib.sha256(data).hexdigest()
    try:
        obj = formats.parse(data)
    except formats.FormatError as exc:
        if exc.report:
            return False, {"valid": False, "violations": [str(v) for v in exc.report]}
        raise
    s = _system(obj)
    return True, {
        "valid": True,
        "violations": [],
        "point_count": s.n,
        "metric": s.metric.kind,
        "family_members": len(obj) if isinstance(obj, MapFamily) else None,
    }


def cmd_classify(args, digests):
    s = _system(_load(args.file, digests))
    x = _point(s, args.point)
    pc = classify_point(s, x)
    orb = orbit_structure(s, x)
    return True, {
        "point": x,
        "periodic": pc.periodic,
        "recurrent": pc.recurrent,
        "nonwandering": pc.nonwandering,
        "preperiod": orb.preperiod,
        "period": orb.period,
        "first_returns": {repr(r): t for r, t in pc.witnesses.items()},
        "notes": list(pc.notes),
    }


def cmd_shadowing(args, digests):
    s = _system(_load(args.file, digests))
    horizon = None if args.unbounded or args.horizon is None else args.horizon
    start = None if args.start is None else _point(s, args.start)
    dec = decide_shadowing(s, args.eps, args.delta, horizon, start)
    out = {"decision": dec.to_dict()}
    if args.oracle:
        if horizon is None:
            raise InputError("--oracle needs a finite --horizon")
        brute = brute_force_shadowing(s, args.eps, args.delta, horizon, start)
        out["oracle"] = brute.to_dict()
        if brute.result != dec.result:
            raise InputError(f"oracle disagreement: decision {dec.result}, brute force {brute.result}")
        out["oracle_agrees"] = True
    return dec.result, out


def cmd_expansivity(args, digests):
    s = _system(_load(args.file, digests))
    if args.point is not None:
        v = classify_expansivity(s, _point(s, args.point), ns=tuple(args.n or (1, 2)))
        return v.reddy_constant > 0, v.to_dict()
    g = global_expansivity(s)
    cov = covering_constant(s)
    return g is not None, {
        "global_constant": None if g is None else repr(g),
        "covering": None
        if cov is None
        else {
            "constant": repr(cov.constant),
            "lebesgue": repr(cov.lebesgue),
            "centers": cov.cover_centers,
            "ok": cov.ok,
        },
    }


def cmd_entropy(args, digests):
    s = _system(_load(args.file, digests))
    V = None
    if args.ball:
        p, r = args.ball
        V = closed_ball(s, _point(s, int(p)), float(r))
    rep = growth_report(s, V, args.eps, args.nmax, "exact" if args.exact else None)
    if args.csv:
        rep.write_csv(args.csv)
    out = rep.to_dict()
    out["count_list"] = [rep.counts[n][0] for n in rep.ns]
    return True, out


def cmd_certify(args, digests):
    s = _system(_load(args.file, digests))
    try:
        if args.from_periodic:
            p, q = (_point(s, v) for v in args.from_periodic)
            cert = certify_from_periodic_points(s, p, q, args.b, args.e, args.delta, args.depth, args.m_max)
        else:
            cert = certify(s, _point(s, args.point), args.b, args.e, args.delta, args.depth, args.m_max)
    except CertificationFailed as exc:
        return False, {"certificate": None, "stage": exc.stage, "diagnostic": exc.message}
    ok, violations = verify_certificate(s, cert)
    if args.out:
        _write_atomic(args.out, formats.serialize(cert))
    return ok, {"certificate": cert.to_dict(), "verified": ok, "violations": violations}


def cmd_verify(args, digests):
    data = _read(args.certfile)
    digests[args.certfile] = hashlib.sha256(data).hexdigest()
    cert = formats.parse_certificate(data)
    s = _system(_load(args.file, digests))
    ok, violations = verify_certificate(s, cert)
    return ok, {"verified": ok, "violations": violations}


def cmd_limit(args, digests):
    fam = _load(args.file, digests)
    if not isinstance(fam, MapFamily):
        raise InputError("limit needs a family file")
    verdict = check_limit_nonwandering(fam, args.eps, args.horizon)
    consts = {}
    for eps in args.eps:
        d = family_shadowing_constant(fam, eps, args.horizon)
        consts[repr(eps)] = None if d is None else repr(d)
    return verdict.result, {
        "nonwandering_limit": verdict.to_dict(),
        "uniform_shadowing_constants": consts,
        "distances": [repr(d) for d in fam.distances],
    }


def cmd_gen(args, digests):
    kind = args.kind
    if kind == "shift":
        obj = gen_shift_words(args.param)
    elif kind == "doubling":
        obj = gen_doubling(args.param)
    elif kind == "cc":
        cycles = [int(c) for c in args.cycles.split(",")] if args.cycles else [4] * args.param
        obj = gen_carvalho_cordeiro(cycles, args.param)
    else:
        if not args.base:
            raise InputError("gen family needs --base FILE")
        base = _system(_load(args.base, digests))
        obj = gen_perturbed_family(base, args.param, args.magnitude, args.seed)
    data = formats.serialize(obj)
    _write_atomic(args.out, data)
    s = _system(obj)
    return True, {"out": args.out, "point_count": s.n, "name": obj.name, "sha256": hashlib.sha256(data).hexdigest()}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pointdyn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("validate", help="check a system or family file")
    a.add_argument("file")
    a.set_defaults(func=cmd_validate)

    a = sub.add_parser("classify", help="periodic / recurrent / nonwandering flags of a point")
    a.add_argument("file")
    a.add_argument("--point", type=int, required=True)
    a.set_defaults(func=cmd_classify)

    a = sub.add_parser("shadowing", help="decide (eps, delta) shadowing")
    a.add_argument("file")
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--delta", type=float, required=True)
    g = a.add_mutually_exclusive_group()
    g.add_argument("--horizon", type=int)
    g.add_argument("--unbounded", action="store_true")
    a.add_argument("--start", type=int)
    a.add_argument("--oracle", action="store_true", help="cross-check against brute force")
    a.set_defaults(func=cmd_shadowing)

    a = sub.add_parser("expansivity", help="pointwise or global expansivity constants")
    a.add_argument("file")
    a.add_argument("--point", type=int)
    a.add_argument("--n", type=int, action="append")
    a.set_defaults(func=cmd_expansivity)

    a = sub.add_parser("entropy", help="separated-set growth report")
    a.add_argument("file")
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--nmax", type=int, required=True)
    a.add_argument("--ball", nargs=2, metavar=("P", "R"))
    a.add_argument("--exact", action="store_true")
    a.add_argument("--csv")
    a.set_defaults(func=cmd_entropy)

    a = sub.add_parser("certify", help="horseshoe certificate at a point")
    a.add_argument("file")
    a.add_argument("--point", type=int)
    a.add_argument("--b", type=float, required=True)
    a.add_argument("--e", type=float, required=True)
    a.add_argument("--delta", type=float, required=True)
    a.add_argument("--depth", type=int, required=True)
    a.add_argument("--m-max", type=int, default=16)
    a.add_argument("--from-periodic", nargs=2, type=int, metavar=("P", "Q"))
    a.add_argument("--out", help="write the certificate JSON here")
    a.set_defaults(func=cmd_certify)

    a = sub.add_parser("verify", help="re-check a certificate against a system")
    a.add_argument("certfile")
    a.add_argument("file")
    a.set_defaults(func=cmd_verify)

    a = sub.add_parser("limit", help="uniform shadowing and nonwandering limit for a family file")
    a.add_argument("file")
    a.add_argument("--eps", type=float, action="append", required=True)
    a.add_argument("--horizon", type=int)
    a.set_defaults(func=cmd_limit)

    a = sub.add_parser("gen", help="write a fixture file")
    a.add_argument("kind", choices=("shift", "doubling", "cc", "family"))
    a.add_argument("param", type=int, help="k for shift/doubling, copies j for cc, member count for family")
    a.add_argument("--out", required=True)
    a.add_argument("--cycles", help="comma-separated cycle lengths for cc (default: j cycles of length 4)")
    a.add_argument("--base", help="base system file for family")
    a.add_argument("--magnitude", type=float, default=0.02)
    a.add_argument("--seed", type=int, default=42)
    a.set_defaults(func=cmd_gen)
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    report = {"schema": 1, "command": argv, "caveats": list(FINITE_MODEL_CAVEATS)}
    digests: dict = {}
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "certify" and args.point is None and not args.from_periodic:
            raise InputError("certify needs --point or --from-periodic")
        verdict, results = args.func(args, digests)
        code = EXIT_TRUE if verdict else EXIT_FALSE
        report["results"] = results
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (InputError, formats.FormatError, GuardExceeded, ValueError) as exc:
        code = EXIT_INPUT
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, GuardExceeded):
            report["error"]["guard"] = exc.guard
    report["input_digest"] = digests
    report["verdict"] = {EXIT_TRUE: "true", EXIT_FALSE: "false", EXIT_INPUT: "error"}[code]
    report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
