"""Command line: build spaces, compute norms, generate/verify certificates, peel, report.

Exit codes: 0 success or verified, 1 usage or input error, 2 certificate
rejected, 3 size or dimension cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import cert as certmod
from .certgen import gen_chain_cert, gen_diamond_cert, gen_malpha_cert
from .constructions import DiamondSpec, MAlphaSpec, TopBottomSpace, chain, diamond, m0, m_alpha
from .errors import DEFAULT_POINT_CAP, DimensionLimit, LipfreeError, SizeLimitExceeded
from .freenorm import FreeVector, kr_norm
from .metric import dumps_space, loads_space, validate
from .ordinal import parse as parse_ordinal
from .peeler import DEFAULT_DIM_CAP, DEFAULT_RESOLUTION, FirstEmpty, direction_family, peel_depth, transcript_lines
from .rational import fmt, parse_rational

EXIT_OK, EXIT_USAGE, EXIT_REJECTED, EXIT_CAP = 0, 1, 2, 3
REPORT_HEADER = ["space", "kind", "eps", "depth", "verdict", "ordinal"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _eps_map(text: str) -> dict:
    """``"w:1/4,w*2:1/8"`` -> {Ordinal: Fraction}."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, _, val = item.partition(":")
        out[parse_ordinal(key)] = parse_rational(val)
    return out


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_space(path: str):
    return validate(loads_space(Path(path).read_text()))


def _read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _record(path: str | None, **fields) -> None:
    if path:
        Path(path).write_text(json.dumps(fields, sort_keys=True, separators=(",", ":")) + "\n")


# subcommands ------------------------------------------------------------

def cmd_build(a) -> int:
    if a.kind == "m0":
        tb = m0()
    elif a.kind == "diamond":
        tb = diamond(DiamondSpec(a.n, a.b), a.cap)
    elif a.kind == "malpha":
        spec = MAlphaSpec.canonical(parse_ordinal(a.alpha), a.trunc, _eps_map(a.eps or ""), a.cap)
        tb, _ = m_alpha(spec)
    else:
        space = _read_space(a.space)
        tb = chain(TopBottomSpace(space, a.top, space.base), a.k, a.s, a.cap)
    _write(a.out, dumps_space(tb.space))
    return EXIT_OK


def cmd_norm(a) -> int:
    space = _read_space(a.space)
    coeffs = []
    for item in filter(None, (s.strip() for s in a.vector.split(","))):
        i, _, c = item.partition(":")
        coeffs.append((int(i), parse_rational(c)))
    value, plan, dual = kr_norm(space, FreeVector(coeffs))
    doc = {
        "norm": fmt(value),
        "plan": [[i, j, fmt(f)] for (i, j), f in sorted(plan.flows.items())],
        "dual": [fmt(dual.values[i]) for i in range(len(space))],
    }
    _write(a.out, json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return EXIT_OK


def cmd_cert_gen(a) -> int:
    if a.kind == "diamond":
        tb, c = gen_diamond_cert(a.n, a.k, a.b, a.cap)
    elif a.kind == "chain":
        base = m0()
        b = certmod.CertBuilder(base.space)
        inner = b.build(b.molecule_leaf(b.root_frame(), base.top, base.bottom, 1), "0")
        if a.n:
            base, inner = gen_diamond_cert(a.n, a.k, None, a.cap)
        tb, c = gen_chain_cert(inner, base, a.l, a.s, a.cap)
    else:
        spec = MAlphaSpec.canonical(parse_ordinal(a.alpha), a.trunc, _eps_map(a.eps or ""), a.cap)
        tb, c = gen_malpha_cert(spec, a.piece)
    if a.space_out:
        Path(a.space_out).write_text(dumps_space(tb.space))
    _write(a.out, certmod.dumps(c))
    return EXIT_OK


def cmd_cert_verify(a) -> int:
    space = _read_space(a.space)
    c = certmod.loads(Path(a.cert).read_text())
    result = certmod.check(space, c)
    _write(a.report, result.report())
    if isinstance(result, certmod.Verified):
        _record(
            a.record,
            space=space.content_hash,
            kind="cert",
            eps=fmt(result.eps),
            depth=result.depth,
            verdict="VERIFIED",
            ordinal=c.intended_ordinal or "",
        )
        return EXIT_OK
    _record(a.record, space=space.content_hash, kind="cert", eps="", depth="", verdict="REJECTED", ordinal="")
    return EXIT_REJECTED


def cmd_peel(a) -> int:
    space = _read_space(a.space)
    fam = direction_family(space, a.directions, a.dim_cap)
    res = peel_depth(space, a.eps, fam, a.max_steps, a.resolution, a.dim_cap)
    lines = transcript_lines(space, res)
    if a.transcript:
        Path(a.transcript).write_text("".join(line + "\n" for line in lines))
    if isinstance(res, FirstEmpty):
        verdict = f"FirstEmpty({res.step})"
        depth = res.step
    else:
        verdict = f"StillNonempty({res.steps})"
        depth = res.steps
    sys.stdout.write(verdict + "\n")
    _record(a.record, space=space.content_hash, kind="peel", eps=fmt(a.eps), depth=depth, verdict=verdict, ordinal="")
    return EXIT_OK


def cmd_report(a) -> int:
    rows = []
    folder = Path(a.dir)
    if not folder.is_dir():
        raise UsageError(f"no such directory: {a.dir}")
    for p in sorted(folder.glob("*.record.json")):
        doc = json.loads(p.read_text())
        rows.append([str(doc.get(k, "")) for k in REPORT_HEADER])
    rows.sort()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    w.writerows(rows)
    _write(a.out, buf.getvalue())
    return EXIT_OK


# parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lipfree", description="Dentability experiments on Lipschitz-free spaces.")
    p.add_argument("--config", help="key = value file; explicit flags take precedence")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="emit a space document")
    b.add_argument("kind", choices=["m0", "diamond", "malpha", "chain"])
    b.add_argument("--n", type=int, default=1)
    b.add_argument("--b", type=_positive_int, default=2)
    b.add_argument("--alpha", default="1")
    b.add_argument("--trunc", type=_positive_int, default=3)
    b.add_argument("--eps", help='limit eps schedule, e.g. "w:1/4,w*2:1/8"')
    b.add_argument("--space", help="input space (chain)")
    b.add_argument("--top", type=int, default=1, help="index of the top point (chain)")
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--s", type=_rational, default=Fraction(1))
    b.add_argument("--cap", type=_positive_int, default=DEFAULT_POINT_CAP)
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    n = sub.add_parser("norm", help="KR norm with plan and dual")
    n.add_argument("--space", required=True)
    n.add_argument("--vector", required=True, help='sparse coefficients "i:p/q,j:p/q"')
    n.add_argument("--out")
    n.set_defaults(func=cmd_norm)

    g = sub.add_parser("cert-gen", help="generate a certificate")
    g.add_argument("kind", choices=["diamond", "chain", "malpha"])
    g.add_argument("--n", type=int, default=0, help="diamond level (chain: 0 means start from M0)")
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--b", type=_positive_int, default=None)
    g.add_argument("--l", type=int, default=1)
    g.add_argument("--s", type=_rational, default=Fraction(1, 2))
    g.add_argument("--alpha", default="w")
    g.add_argument("--trunc", type=_positive_int, default=3)
    g.add_argument("--piece", type=_positive_int, default=1)
    g.add_argument("--eps")
    g.add_argument("--cap", type=_positive_int, default=DEFAULT_POINT_CAP)
    g.add_argument("--space-out")
    g.add_argument("--out")
    g.set_defaults(func=cmd_cert_gen)

    v = sub.add_parser("cert-verify", help="check a certificate")
    v.add_argument("--space", required=True)
    v.add_argument("--cert", required=True)
    v.add_argument("--report")
    v.add_argument("--record", help="write a result record for `report`")
    v.set_defaults(func=cmd_cert_verify)

    pe = sub.add_parser("peel", help="outer approximation of iterated slice derivation")
    pe.add_argument("--space", required=True)
    pe.add_argument("--eps", type=_rational, required=True)
    pe.add_argument("--directions", choices=["lipball", "molecule", "both", "adaptive"], default="lipball")
    pe.add_argument("--max-steps", type=_positive_int, default=16)
    pe.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    pe.add_argument("--dim-cap", type=_positive_int, default=DEFAULT_DIM_CAP)
    pe.add_argument("--transcript", help="JSON lines output")
    pe.add_argument("--record")
    pe.set_defaults(func=cmd_peel)

    r = sub.add_parser("report", help="aggregate *.record.json files into CSV")
    r.add_argument("--dir", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        conf = _read_config(known.config)
        sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        command = next((t for t in rest if t in sub_action.choices), None)
        if command is None:
            raise UsageError("no subcommand given")
        sp = sub_action.choices[command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, val in conf.items():
            act = actions.get(key)
            if act is None or key == "help":
                raise UsageError(f"unknown config key {key!r} for {command}")
            try:
                defaults[key] = act.type(val) if act.type else val
            except (argparse.ArgumentTypeError, ValueError) as e:
                raise UsageError(f"config key {key}: {e}")
            act.required = False
        sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SizeLimitExceeded, DimensionLimit) as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except certmod.CertRejection as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECTED
    except (LipfreeError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
