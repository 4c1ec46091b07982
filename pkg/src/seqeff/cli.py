"""Command-line front end: check, expand, run, audit, derive, laws, corpus."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .conteffect import CEff, effect_law_suite, iterate_audit
from .interpreter import AuditReport, Done, FuelExhausted, Machine, Stuck
from .langcore import Language, ParseError
from .langcore import syntax as S
from .langcore.expand import ExpansionError, Expander
from .quantale import law_suite
from .typechecker import Checker, TypeCheckError

EXIT_OK, EXIT_TYPE, EXIT_PARSE = 0, 1, 2

EFFECT_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "prophecies": {"type": "array", "items": {"type": "string"}},
        "controls": {"type": "array", "items": {"type": "string"}},
        "underlying": {"type": ["string", "null"]},
    },
    "required": ["prophecies", "controls", "underlying"],
    "additionalProperties": False,
}

REPORT_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "command": {"enum": ["check", "expand", "run", "audit", "derive", "laws", "corpus"]},
        "ok": {"type": "boolean"},
        "type": {"type": "string"},
        "effect": EFFECT_SCHEMA,
        "notes": {"type": "array"},
        "error": {"type": "object"},
    },
    "required": ["command", "ok"],
}


@dataclass
class SessionConfig:
    quantale: str = "trace"
    symbols: tuple[str, ...] = ()
    fuel: int = 10_000
    iter_bound: int = 16
    fmt: str = "text"
    env: dict[str, str] = field(default_factory=dict)
    bind: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.symbols:
            what = "--alphabet" if self.quantale == "trace" else "--labels"
            raise ValueError(f"{self.quantale} quantale needs {what}")


class Session:
    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.lang = Language.named(cfg.quantale, cfg.symbols)
        self.checker = Checker(self.lang)
        self.expander = Expander(self.checker)
        self.machine = Machine(self.checker)

    def bindings(self) -> dict[str, S.Expr]:
        return {x: self.lang.parse(v) for x, v in self.cfg.bind.items()}

    def env(self) -> dict[str, S.Ty]:
        out = {x: self.lang.parse_type(t) for x, t in self.cfg.env.items()}
        for x, v in self.bindings().items():
            out.setdefault(x, self.checker.infer(v).ty)
        return out

    def load(self, path: str) -> S.Expr:
        return self.lang.parse(Path(path).read_text(encoding="utf-8"))


# JSON effects mirror the textual grammar field for field


def effect_json(lang: Language, x: CEff) -> dict:
    alg = lang.alg
    return {
        "prophecies": sorted(alg.render_prop(p) for p in x.props),
        "controls": sorted(alg.render_ctl(c) for c in x.controls),
        "underlying": None if x.under is None else alg.render_under(x.under),
    }


def effect_from_json(lang: Language, d: dict) -> CEff:
    under = d["underlying"] if d["underlying"] is not None else "_|_"
    return lang.parse_effect("{" + ", ".join(d["prophecies"]) + " | " + ", ".join(d["controls"]) + " | " + under + "}")


def _emit(cfg: SessionConfig, report: dict, lines: list[str]) -> None:
    if cfg.fmt == "json":
        print(json.dumps(report, indent=2))
    else:
        for line in lines:
            print(line)


def _error_report(command: str, exc: Exception) -> tuple[dict, int]:
    if isinstance(exc, ExpansionError):
        exc = exc.inner if isinstance(exc.inner, (TypeCheckError, ParseError)) else exc
    if isinstance(exc, ParseError):
        return {"command": command, "ok": False, "error": {"kind": "parse", "message": str(exc)}}, EXIT_PARSE
    err: dict[str, Any] = {"kind": "type", "message": str(exc)}
    if isinstance(exc, TypeCheckError):
        err.update(rule=exc.rule, violations=[v.__dict__ for v in exc.violations])
    return {"command": command, "ok": False, "error": err}, EXIT_TYPE


def _fail(cfg: SessionConfig, command: str, exc: Exception) -> int:
    report, code = _error_report(command, exc)
    if cfg.fmt == "json":
        print(json.dumps(report, indent=2))
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


# commands


def cmd_check(ses: Session, path: str) -> int:
    cfg, lang = ses.cfg, ses.lang
    try:
        env = ses.env()
        out = ses.checker.infer(ses.expander.expand(ses.load(path), env), env)
    except (ParseError, TypeCheckError, ExpansionError) as exc:
        return _fail(cfg, "check", exc)
    notes = [
        {"rule": n.rule, "text": n.text, "left": n.left, "right": n.right, "holds": n.holds} for n in out.notes
    ]
    report = {
        "command": "check",
        "ok": True,
        "type": lang.show_ty(out.ty),
        "effect": effect_json(lang, out.effect),
        "notes": notes,
    }
    lines = [f"type    {lang.show_ty(out.ty)}", f"effect  {lang.show_eff(out.effect)}"]
    for n in notes:
        lines.append(f"note    {n['rule']} {n['text']}: {n['left']} <= {n['right']} ({'holds' if n['holds'] else 'fails'})")
    _emit(cfg, report, lines)
    return EXIT_OK


def cmd_expand(ses: Session, path: str) -> int:
    try:
        e = ses.expander.expand(ses.load(path), ses.env())
    except (ParseError, TypeCheckError, ExpansionError) as exc:
        return _fail(ses.cfg, "expand", exc)
    text = ses.lang.show_expr(e)
    _emit(ses.cfg, {"command": "expand", "ok": True, "program": text}, [text])
    return EXIT_OK


def _outcome_text(lang: Language, o) -> str:
    if isinstance(o, Done):
        return f"done {lang.show_expr(o.value)}"
    if isinstance(o, Stuck):
        return f"stuck: {o.reason}"
    return f"fuel exhausted after {o.steps} steps"


def cmd_run(ses: Session, path: str) -> int:
    cfg, lang = ses.cfg, ses.lang
    try:
        e = ses.expander.expand(ses.load(path), ses.env())
    except (ParseError, TypeCheckError, ExpansionError) as exc:
        return _fail(cfg, "run", exc)
    r = ses.machine.run(e, cfg.fuel, ses.bindings())
    report = {
        "command": "run",
        "ok": not isinstance(r.outcome, Stuck),
        "outcome": _outcome_text(lang, r.outcome),
        "steps": r.steps,
        "trace": r.trace_text,
        "effect": lang.q.render(r.effect),
    }
    lines = [f"outcome {report['outcome']}", f"steps   {r.steps}", f"trace   {r.trace_text}"]
    if cfg.quantale != "trace":
        lines.append(f"effect  {report['effect']}")
    _emit(cfg, report, lines)
    return EXIT_OK if report["ok"] else EXIT_TYPE


def _audit_paths(files: list[str], manifest: str | None) -> list[str]:
    paths = list(files)
    if manifest:
        base = Path(manifest).parent
        for line in Path(manifest).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                paths.append(str(base / line))
    return paths


def cmd_audit(ses: Session, files: list[str], manifest: str | None, figure: str | None) -> int:
    cfg, lang = ses.cfg, ses.lang
    env = ses.env()
    rows: list[dict] = []
    reports: list[tuple[str, AuditReport | None]] = []
    code = EXIT_OK
    for path in _audit_paths(files, manifest):
        try:
            e = ses.expander.expand(ses.load(path), env)
            rep = ses.machine.audit_run(e, cfg.fuel, ses.bindings())
        except (ParseError, TypeCheckError, ExpansionError) as exc:
            report, c = _error_report("audit", exc)
            rows.append({"file": path, "passed": False, "error": report["error"]})
            reports.append((path, None))
            code = max(code, c)
            continue
        reports.append((path, rep))
        rows.append({
            "file": path,
            "passed": rep.passed,
            "outcome": _outcome_text(lang, rep.run.outcome),
            "steps": rep.run.steps,
            "trace": rep.run.trace_text,
            "static": rep.initial_effect,
            "final": rep.final_reason,
            "failed_steps": [s.__dict__ for s in rep.failures],
        })
        if not rep.passed:
            code = max(code, EXIT_TYPE)
    failed = sum(not r["passed"] for r in rows)
    lines = []
    for r in rows:
        status = "ok  " if r["passed"] else "FAIL"
        detail = r.get("outcome") or r["error"]["message"]
        lines.append(f"{status} {r['file']}: {detail}, trace {r.get('trace', '')!r}")
        for s in r.get("failed_steps", []):
            lines.append(f"     step {s['index']} label {s['label']}: {s['after']} not below {s['before']} {s['reason']}")
        if r.get("final"):
            lines.append(f"     {r['final']}")
    lines.append(f"{len(rows)} programs, {failed} failures")
    _emit(cfg, {"command": "audit", "ok": failed == 0, "programs": rows, "failures": failed}, lines)
    if figure:
        audit_figure(reports, figure)
    return code


def audit_figure(reports: list[tuple[str, AuditReport | None]], out: str) -> None:
    """Steps per program, coloured by outcome; failing programs are hatched."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    colours = {Done: "#4c72b0", FuelExhausted: "#dd8452", Stuck: "#c44e52"}
    fig, ax = plt.subplots(figsize=(max(4.0, 0.25 * len(reports) + 2), 3.2))
    for i, (_, rep) in enumerate(reports):
        if rep is None:
            ax.bar(i, 0.5, color="#c44e52", hatch="//")
            continue
        ax.bar(i, max(rep.run.steps, 0.5), color=colours[type(rep.run.outcome)], hatch="" if rep.passed else "//")
    ax.set_xlabel("program")
    ax.set_ylabel("steps")
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels([Path(p).stem for p, _ in reports], rotation=90, fontsize=6)
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colours.values()]
    ax.legend(handles, ["done", "fuel exhausted", "stuck"], fontsize=7, frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def derive(ses: Session, e: S.Expr, env: dict) -> tuple[str, CEff, CEff]:
    """The derived rule's effect for a top-level macro next to the full expansion's."""
    ch, alg, xp = ses.checker, ses.lang.alg, ses.expander

    def eff(x: S.Expr) -> CEff:
        return ch.infer(xp.expand(x, env), env).effect

    full = eff(e)
    match e:
        case S.LoopM(body):
            return "D-InfLoop", ch.derived_infloop(eff(body)), full
        case S.WhileM(c, body):
            xc, xb = eff(c), eff(body)
            if not (xc.props or xc.controls or xb.props or xb.controls):
                return "D-While", ch.derived_while(xc.under, xb.under), full
            expanded = xp.expand(e, env)
            return "D-AbortingWhile", ch.derived_aborting_while(xc, xb, expanded.tag), full
        case S.TryCatchM(body, exn, h):
            ht = ch.infer(xp.expand(h, env), env).ty
            ht = S.TFun(S.ANY, alg.unit, S.ANY) if not isinstance(ht, S.TFun) else ht
            return "D-TryCatch", ch.derived_trycatch(eff(body), S.exn_tag(exn), ht.arg, ht.latent.under), full
        case S.ThrowM(exn, a):
            out = ch.infer(xp.expand(a, env), env)
            return "D-Throw", ch.derived_throw(out.effect.under, exn, out.ty), full
        case S.IterateM(init, gen, fn):
            f_ty = ch.infer(xp.expand(fn, env), env).ty
            yt = f_ty.arg
            props = list(yt.latent.props)
            step = props[0].predicted.under if props else alg.q.unit
            out = ch.derived_iterate(f_ty, init, gen, yt.arg, step)
            return "D-Iterate", out.effect, full
    raise TypeCheckError("derive", "the program is not a loop, while, try, throw or iterate form")


def cmd_derive(ses: Session, path: str) -> int:
    cfg, lang = ses.cfg, ses.lang
    try:
        env = ses.env()
        rule, derived, full = derive(ses, ses.load(path), env)
    except (ParseError, TypeCheckError, ExpansionError) as exc:
        return _fail(cfg, "derive", exc)
    alg = lang.alg
    below = alg.leq(full, derived)
    same = below and alg.leq(derived, full)
    report = {
        "command": "derive",
        "ok": below,
        "rule": rule,
        "derived": effect_json(lang, derived),
        "expansion": effect_json(lang, full),
        "expansion_below_derived": below,
        "equivalent": same,
    }
    lines = [
        f"rule       {rule}",
        f"derived    {lang.show_eff(derived)}",
        f"expansion  {lang.show_eff(full)}",
        f"expansion <= derived: {below}; equivalent: {same}",
    ]
    _emit(cfg, report, lines)
    return EXIT_OK if below else EXIT_TYPE


def cmd_laws(ses: Session, samples: int, effect_samples: int, seed: int) -> int:
    cfg, lang = ses.cfg, ses.lang
    t0 = time.perf_counter()
    reports = [law_suite(lang.q, n=samples, seed=seed), effect_law_suite(lang.alg, n=effect_samples, seed=seed)]
    it = iterate_audit(lang.alg, n=effect_samples, bound=cfg.iter_bound, seed=seed)
    rows = []
    for rep in reports:
        for r in rep.results:
            rows.append({"suite": rep.instance, "law": r.law, "checked": r.checked, "failures": r.failures})
    rows.append({"suite": "iteration audit", "law": it.law, "checked": it.checked, "failures": it.failures})
    ok = all(r["failures"] == 0 for r in rows)
    lines = [f"{'PASS' if r['failures'] == 0 else 'FAIL'}  {r['suite']}: {r['law']} ({r['checked']} checked, {r['failures']} failed)" for r in rows]
    lines.append(f"{len(rows)} laws, {sum(r['failures'] > 0 for r in rows)} failing, {time.perf_counter() - t0:.1f}s")
    _emit(cfg, {"command": "laws", "ok": ok, "laws": rows}, lines)
    return EXIT_OK if ok else EXIT_TYPE


def cmd_corpus(ses: Session, count: int, seed: int, out: str) -> int:
    from .corpus import generate

    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, src in enumerate(generate(ses.lang, count, seed=seed)):
        name = f"prog{i:04d}.sq"
        (d / name).write_text(src + "\n", encoding="utf-8")
        names.append(name)
    (d / "manifest.txt").write_text("\n".join(names) + "\n", encoding="utf-8")
    _emit(ses.cfg, {"command": "corpus", "ok": True, "written": len(names), "dir": str(d)},
          [f"wrote {len(names)} programs and manifest.txt to {d}"])
    return EXIT_OK


# argument handling


def _pairs(items: list[str], sep: str, flag: str) -> dict[str, str]:
    out = {}
    for item in items:
        name, ok, value = item.partition(sep)
        if not ok or not name:
            raise argparse.ArgumentTypeError(f"{flag} expects NAME{sep}VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quantale", choices=["trace", "labels"], default="trace")
    common.add_argument("--alphabet", help="comma-separated event symbols (trace quantale)")
    common.add_argument("--labels", help="comma-separated label universe (labels quantale)")
    common.add_argument("--fuel", type=int, default=10_000, help="step limit for run and audit")
    common.add_argument("--iter-bound", type=int, default=16, help="unrollings checked by the iteration audit")
    common.add_argument("--format", choices=["text", "json"], default="text", dest="fmt")
    common.add_argument("--env", action="append", default=[], metavar="NAME:TYPE", help="type of a free variable")
    common.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE", help="value for a free variable")

    p = argparse.ArgumentParser(prog="seqeff", description="Sequential effects with tagged delimited continuations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("check", "expand", "run", "derive"):
        sub.add_parser(name, parents=[common]).add_argument("file")
    a = sub.add_parser("audit", parents=[common])
    a.add_argument("files", nargs="*")
    a.add_argument("--manifest", help="file listing programs, one path per line")
    a.add_argument("--figure", metavar="PNG", help="write a steps-per-program chart")
    lw = sub.add_parser("laws", parents=[common])
    lw.add_argument("--samples", type=int, default=500)
    lw.add_argument("--effect-samples", type=int, default=300)
    lw.add_argument("--seed", type=int, default=0)
    c = sub.add_parser("corpus", parents=[common])
    c.add_argument("--count", type=int, default=500)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    raw = args.alphabet if args.quantale == "trace" else args.labels
    try:
        cfg = SessionConfig(
            quantale=args.quantale,
            symbols=tuple(s.strip() for s in (raw or "").split(",") if s.strip()),
            fuel=args.fuel,
            iter_bound=args.iter_bound,
            fmt=args.fmt,
            env=_pairs(args.env, ":", "--env"),
            bind=_pairs(args.bind, "=", "--bind"),
        )
        ses = Session(cfg)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        parser.error(str(exc))
    try:
        match args.command:
            case "check":
                return cmd_check(ses, args.file)
            case "expand":
                return cmd_expand(ses, args.file)
            case "run":
                return cmd_run(ses, args.file)
            case "audit":
                return cmd_audit(ses, args.files, args.manifest, args.figure)
            case "derive":
                return cmd_derive(ses, args.file)
            case "laws":
                return cmd_laws(ses, args.samples, args.effect_samples, args.seed)
            case "corpus":
                return cmd_corpus(ses, args.count, args.seed, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:  # from --bind or --env values
        return _fail(cfg, args.command, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
