"""Command line entry point: ``kgp run|check|query|oracle``.

Exit codes: 0 success, 1 scenario error, 2 runtime failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import trace as T
from .control import run
from .errors import KGPError, ParseError, ValidationError, VerificationError
from .scenario import build, load_scenario, scenario_path
from .syntax import parse_body, parse_term
from .temporal import holds
from .terms import AT, Fn, render

OK, SCENARIO_ERROR, RUNTIME_ERROR, VERIFY_ERROR = 0, 1, 2, 3


def _path(name: str) -> str:
    if os.path.exists(name):
        return name
    shipped = scenario_path(name)
    return shipped if os.path.exists(shipped) else name


def _load(name: str):
    try:
        return load_scenario(_path(name))
    except OSError as e:
        raise ValidationError(f"cannot read {name}: {e.strerror}") from None


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    sc = _load(args.scenario)
    agents, env, cfg = build(sc)
    steps = args.max_steps if args.max_steps is not None else cfg["max_steps"]
    tr = run(agents, env, steps, cfg.get("horizon"))
    _write(T.emit(tr, args.trace), args.out)
    if tr.error:
        print(f"error: {tr.error}", file=sys.stderr)
        return RUNTIME_ERROR
    return OK


def cmd_check(args) -> int:
    sc = _load(args.scenario)
    print(f"ok: {len(sc.agents)} agent(s): {', '.join(a.name for a in sc.agents)}")
    return OK


def parse_query(text: str) -> tuple:
    """``literal[τN] @ c1, c2`` into (literal, time, constraints)."""
    lit_text, _, cons_text = text.partition("@")
    x = parse_term(lit_text.strip())
    if not (isinstance(x, Fn) and x.name == AT and len(x.args) == 2):
        raise ValidationError("query literal needs a time, as in f(x)[τ1]")
    cons = parse_body(cons_text.strip()) if cons_text.strip() else []
    return x.args[0], x.args[1], cons


def cmd_query(args) -> int:
    sc = _load(args.scenario)
    agents, _env, _cfg = build(sc)
    names = [a.state.name for a in agents]
    if args.agent not in names:
        raise ValidationError(f"no agent {args.agent!r}")
    state = agents[names.index(args.agent)].state
    lit, time, cons = parse_query(args.holds)
    w = holds(state, lit, time, cons)
    if w is None:
        print("no")
    else:
        print("yes " + ", ".join(f"{render(v)}={t}" for v, t in sorted(w.items(), key=lambda kv: kv[0].id)))
    return OK


def cmd_oracle(args) -> int:
    sc = _load(args.scenario)
    try:
        with open(args.verify_trace, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot read {args.verify_trace}: {e.strerror}", file=sys.stderr)
        return RUNTIME_ERROR
    agents, env, _cfg = build(sc)
    n = T.verify(T.parse_records(text), agents, env)
    print(f"verified {n} record(s)")
    return OK


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgp", description="Run and check agent scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and print its trace")
    r.add_argument("--scenario", required=True, help="scenario file or shipped name (setting1)")
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--trace", choices=("text", "records"), default="text")
    r.add_argument("--out", default=None, help="write the trace here instead of stdout")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("check", help="parse and validate a scenario")
    c.add_argument("--scenario", required=True)
    c.set_defaults(func=cmd_check)
    q = sub.add_parser("query", help="ask whether a literal holds for an agent's initial state")
    q.add_argument("--scenario", required=True)
    q.add_argument("--agent", required=True)
    q.add_argument("--holds", required=True, help='e.g. "have_info(arrival(tr01), I)[τ9] @ τ9 > 20"')
    q.set_defaults(func=cmd_query)
    o = sub.add_parser("oracle", help="re-verify a records trace against its scenario")
    o.add_argument("--scenario", required=True)
    o.add_argument("--verify-trace", required=True, metavar="PATH")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list | None = None) -> int:
    args = parser().parse_args(argv)
    try:
        if getattr(args, "max_steps", None) is not None and args.max_steps < 1:
            raise ValidationError("--max-steps must be at least 1")
        return args.func(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return SCENARIO_ERROR
    except VerificationError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return VERIFY_ERROR
    except KGPError as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
