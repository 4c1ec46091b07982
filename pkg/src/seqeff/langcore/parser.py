"""Surface parser for programs, types and effect annotations."""

from __future__ import annotations

import re
from typing import TYPE_CHECKING

from ..conteffect import Abort, Blocked, BlockedP, CEff, Mu, Proph, PVar, Replace
from . import syntax as S
from .reader import Atom, Brace, Datum, ParseError, SList, match_brace, read_all, read_datum, skip_space

if TYPE_CHECKING:
    from .lang import Language

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_\-?!']*\Z")
_RESERVED_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_\-?!']*(%[A-Za-z0-9_]*)?\Z")

KEYWORDS = frozenset(
    "lambda if prompt callcc callcomp abort event seq let loop while try catch throw "
    "iterate ref get set inl inr case some none case-opt".split()
)

_TYPE_ATOMS = {"unit": S.UNIT, "bool": S.BOOL, "any": S.ANY, "nat": S.NAT}


class Parser:
    """Parses surface text against one language instance.

    ``allow_reserved`` admits ``%``-names, which only the expander generates;
    it is needed to read expanded output back in.
    """

    def __init__(self, lang: Language, allow_reserved: bool = False):
        self.lang = lang
        self.q = lang.q
        self.alg = lang.alg
        self.allow_reserved = allow_reserved
        self.text = ""

    # entry points

    def program(self, text: str) -> S.Expr:
        self.text = text
        data = read_all(text)
        if not data:
            raise ParseError("empty program", text, 0)
        if len(data) > 1:
            raise ParseError("trailing input after the program", text, data[1].pos)
        return self.expr(data[0])

    def type_text(self, text: str) -> S.Ty:
        self.text = text
        data = read_all(text)
        if len(data) != 1:
            raise ParseError("expected exactly one type", text, 0)
        return self.ty(data[0], frozenset())

    def effect_text(self, text: str) -> CEff:
        self.text = text
        ep = _EffectParser(self, text, 0, frozenset())
        eff = ep.effect()
        ep.end()
        return eff

    # names

    def name(self, d: Datum, what: str) -> str:
        if not isinstance(d, Atom):
            raise ParseError(f"expected {what}", self.text, d.pos)
        pat = _RESERVED_NAME if self.allow_reserved else _NAME
        if not pat.match(d.text):
            if "%" in d.text and _RESERVED_NAME.match(d.text):
                raise ParseError(f"{what} {d.text!r} uses the reserved '%' namespace", self.text, d.pos)
            raise ParseError(f"bad {what} {d.text!r}", self.text, d.pos)
        if what == "variable" and d.text in KEYWORDS:
            raise ParseError(f"{d.text!r} is a keyword", self.text, d.pos)
        return d.text

    # types

    def ty(self, d: Datum, bound: frozenset) -> S.Ty:
        if isinstance(d, Atom):
            if d.text in _TYPE_ATOMS:
                return _TYPE_ATOMS[d.text]
            if d.text in bound:
                return S.TVar(d.text)
            raise ParseError(f"unknown type {d.text!r}", self.text, d.pos)
        if isinstance(d, Brace):
            raise ParseError("expected a type, found an effect", self.text, d.pos)
        items = d.items
        if not items or not isinstance(items[0], Atom):
            raise ParseError("expected a type constructor", self.text, d.pos)
        head = items[0].text
        args = items[1:]

        def arity(*ns: int) -> None:
            if len(args) not in ns:
                raise ParseError(f"'{head}' type takes {' or '.join(map(str, ns))} arguments", self.text, d.pos)

        if head == "->":
            arity(2, 3)
            latent = self.annot(args[1], bound) if len(args) == 3 else self.alg.unit
            return S.TFun(self.ty(args[0], bound), latent, self.ty(args[-1], bound))
        if head == "cont":
            arity(4)
            tag = self.name(args[0], "tag")
            return S.TCont(tag, self.ty(args[1], bound), self.annot(args[2], bound), self.ty(args[3], bound))
        if head == "comp":
            arity(3)
            return S.TComp(self.ty(args[0], bound), self.annot(args[1], bound), self.ty(args[2], bound))
        if head == "mu":
            arity(2)
            var = self.name(args[0], "type variable")
            body = self.ty(args[1], bound | {var})
            if isinstance(body, (S.TVar, S.TMu)):
                raise ParseError("recursive type body must be a type constructor", self.text, args[1].pos)
            return S.TMu(var, body)
        if head == "option":
            arity(1)
            return S.TOption(self.ty(args[0], bound))
        if head == "ref":
            arity(1)
            return S.TRef(self.ty(args[0], bound))
        if head == "sum":
            arity(2)
            return S.TSum(self.ty(args[0], bound), self.ty(args[1], bound))
        raise ParseError(f"unknown type constructor {head!r}", self.text, d.pos)

    def annot(self, d: Datum, bound: frozenset = frozenset()) -> CEff:
        if not isinstance(d, Brace):
            raise ParseError("expected an effect annotation {P | C | U}", self.text, d.pos)
        ep = _EffectParser(self, self.text, d.pos, bound)
        eff = ep.effect()
        return eff

    # expressions

    def expr(self, d: Datum) -> S.Expr:
        span = (d.pos, d.end if isinstance(d, SList) else d.pos + len(d.text))
        if isinstance(d, Brace):
            raise ParseError("unexpected effect annotation", self.text, d.pos)
        if isinstance(d, Atom):
            t = d.text
            if t == "#u":
                return S.Lit(None, span)
            if t == "#t":
                return S.Lit(True, span)
            if t == "#f":
                return S.Lit(False, span)
            if t.isdigit():
                return S.Lit(int(t), span)
            return S.Var(self.name(d, "variable"), span)
        items = d.items
        if not items:
            raise ParseError("empty application", self.text, d.pos)
        head = items[0].text if isinstance(items[0], Atom) else None
        args = items[1:]
        form = _FORMS.get(head) if head is not None else None
        if form is None:
            if len(items) < 2:
                raise ParseError("application needs an argument", self.text, d.pos)
            out = self.expr(items[0])
            for a in args:
                out = S.App(out, self.expr(a), span)
            return out
        return form(self, d, args, span)

    def _need(self, d: SList, args: tuple, n: int, shape: str) -> None:
        if len(args) != n:
            raise ParseError(f"expected {shape}", self.text, d.pos)

    def _binder(self, d: Datum, default: S.Ty | None = None) -> tuple[str, S.Ty]:
        # (x : ty) or, where a default exists, (x)
        if not isinstance(d, SList):
            raise ParseError("expected a parameter (x : type)", self.text, d.pos)
        its = d.items
        if len(its) == 1 and default is not None:
            return self.name(its[0], "variable"), default
        if len(its) != 3 or not (isinstance(its[1], Atom) and its[1].text == ":"):
            raise ParseError("expected a parameter (x : type)", self.text, d.pos)
        return self.name(its[0], "variable"), self.ty(its[2], frozenset())

    def _lambda(self, d, args, span, default: S.Ty | None = None):
        self._need(d, args, 2, "(lambda (x : type) body)")
        x, t = self._binder(args[0], default)
        return S.Lam(x, t, self.expr(args[1]), span)

    def _fn_with_default(self, d: Datum, default: S.Ty) -> S.Expr:
        # an untyped (lambda (k) ...) right under callcc gets the continuation type
        if isinstance(d, SList) and d.items and isinstance(d.items[0], Atom) and d.items[0].text == "lambda":
            return self._lambda(d, d.items[1:], (d.pos, d.end), default)
        return self.expr(d)

    def _capture(self, d, args, span, comp: bool):
        kw = "callcomp" if comp else "callcc"
        self._need(d, args, 4, f"({kw} tag {{effect}} type fn)")
        tag = self.name(args[0], "tag")
        pred = self.annot(args[1])
        res = self.ty(args[2], frozenset())
        if comp:
            default = S.TMu("K", S.TComp(S.TVar("K"), pred, res))
            return S.CallComp(tag, pred, res, self._fn_with_default(args[3], default), span)
        default = S.TMu("K", S.TCont(tag, S.TVar("K"), pred, res))
        return S.CallCC(tag, pred, res, self._fn_with_default(args[3], default), span)

    def _event(self, d, args, span):
        self._need(d, args, 1, "(event symbol)")
        a = args[0]
        if not isinstance(a, Atom):
            raise ParseError("expected an event symbol", self.text, a.pos)
        try:
            self.q.event(a.text)
        except ValueError as exc:
            raise ParseError(f"unknown symbol {a.text!r}: {exc}", self.text, a.pos) from None
        return S.Event(a.text, span)

    def _seq(self, d, args, span):
        if len(args) < 2:
            raise ParseError("(seq e e ...) needs at least two expressions", self.text, d.pos)
        parts = [self.expr(a) for a in args]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = S.Seq(p, out, span)
        return out

    def _let(self, d, args, span):
        self._need(d, args, 2, "(let (x e) body)")
        b = args[0]
        if not isinstance(b, SList) or len(b.items) != 2:
            raise ParseError("expected a binding (x e)", self.text, b.pos)
        return S.Let(self.name(b.items[0], "variable"), self.expr(b.items[1]), self.expr(args[1]), span)

    def _try(self, d, args, span):
        self._need(d, args, 2, "(try e (catch Exn handler))")
        c = args[1]
        if not (isinstance(c, SList) and len(c.items) == 3 and isinstance(c.items[0], Atom) and c.items[0].text == "catch"):
            raise ParseError("expected (catch Exn handler)", self.text, c.pos)
        return S.TryCatchM(self.expr(args[0]), self.name(c.items[1], "exception name"), self.expr(c.items[2]), span)

    def _case(self, d, args, span):
        self._need(d, args, 3, "(case e (x e) (y e))")
        arms = []
        for a in args[1:]:
            if not isinstance(a, SList) or len(a.items) != 2:
                raise ParseError("expected a case arm (x e)", self.text, a.pos)
            arms.append((self.name(a.items[0], "variable"), self.expr(a.items[1])))
        return S.Case(self.expr(args[0]), arms[0][0], arms[0][1], arms[1][0], arms[1][1], span)

    def _case_opt(self, d, args, span):
        self._need(d, args, 3, "(case-opt e none-branch (x some-branch))")
        a = args[2]
        if not isinstance(a, SList) or len(a.items) != 2:
            raise ParseError("expected a some-arm (x e)", self.text, a.pos)
        return S.CaseOpt(self.expr(args[0]), self.expr(args[1]), self.name(a.items[0], "variable"), self.expr(a.items[1]), span)

    def _prim(self, d, args, span, name: str, n: int):
        self._need(d, args, n, f"({name} {' '.join(['e'] * n)})")
        return S.PrimApp(name, tuple(self.expr(a) for a in args), span)


def _form_table() -> dict:
    P = Parser
    return {
        "lambda": lambda p, d, a, s: p._lambda(d, a, s),
        "if": lambda p, d, a, s: (p._need(d, a, 3, "(if c then else)"), S.If(*(p.expr(x) for x in a), s))[1],
        "prompt": lambda p, d, a, s: (
            p._need(d, a, 3, "(prompt tag body handler)"),
            S.Prompt(p.name(a[0], "tag"), p.expr(a[1]), p.expr(a[2]), s),
        )[1],
        "callcc": lambda p, d, a, s: p._capture(d, a, s, False),
        "callcomp": lambda p, d, a, s: p._capture(d, a, s, True),
        "abort": lambda p, d, a, s: (
            p._need(d, a, 3, "(abort tag type e)"),
            S.AbortE(p.name(a[0], "tag"), p.ty(a[1], frozenset()), p.expr(a[2]), s),
        )[1],
        "event": P._event,
        "seq": P._seq,
        "let": P._let,
        "loop": lambda p, d, a, s: (p._need(d, a, 1, "(loop e)"), S.LoopM(p.expr(a[0]), s))[1],
        "while": lambda p, d, a, s: (p._need(d, a, 2, "(while c e)"), S.WhileM(p.expr(a[0]), p.expr(a[1]), s))[1],
        "try": P._try,
        "throw": lambda p, d, a, s: (
            p._need(d, a, 2, "(throw Exn e)"),
            S.ThrowM(p.name(a[0], "exception name"), p.expr(a[1]), s),
        )[1],
        "iterate": lambda p, d, a, s: (
            p._need(d, a, 3, "(iterate init-tag gen-tag f)"),
            S.IterateM(p.name(a[0], "tag"), p.name(a[1], "tag"), p.expr(a[2]), s),
        )[1],
        "ref": lambda p, d, a, s: p._prim(d, a, s, "ref", 1),
        "get": lambda p, d, a, s: p._prim(d, a, s, "get", 1),
        "set": lambda p, d, a, s: p._prim(d, a, s, "set", 2),
        "inl": lambda p, d, a, s: (p._need(d, a, 2, "(inl right-type e)"), S.Inj(False, p.ty(a[0], frozenset()), p.expr(a[1]), s))[1],
        "inr": lambda p, d, a, s: (p._need(d, a, 2, "(inr left-type e)"), S.Inj(True, p.ty(a[0], frozenset()), p.expr(a[1]), s))[1],
        "case": P._case,
        "some": lambda p, d, a, s: (p._need(d, a, 1, "(some e)"), S.SomeE(p.expr(a[0]), s))[1],
        "none": lambda p, d, a, s: (p._need(d, a, 1, "(none type)"), S.NoneE(p.ty(a[0], frozenset()), s))[1],
        "case-opt": P._case_opt,
    }


_FORMS = _form_table()


class _EffectParser:
    """Character-level parser for ``{P | C | U}`` effect text."""

    def __init__(self, owner: Parser, text: str, pos: int, bound: frozenset):
        self.o = owner
        self.text = text
        self.pos = pos
        self.bound = bound  # type variables in scope
        self.pvars: frozenset[str] = frozenset()

    def err(self, msg: str) -> ParseError:
        return ParseError(msg, self.text, self.pos)

    def ws(self) -> None:
        self.pos = skip_space(self.text, self.pos)

    def peek(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str) -> None:
        if not self.peek(s):
            raise self.err(f"expected {s!r}")
        self.pos += len(s)

    def word(self) -> str:
        self.ws()
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_\-?!'%]*").match(self.text, self.pos)
        if not m:
            raise self.err("expected a name")
        self.pos = m.end()
        return m.group(0)

    def keyword(self, kw: str) -> bool:
        self.ws()
        m = re.compile(re.escape(kw) + r"(?![A-Za-z0-9_%])").match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return True
        return False

    def end(self) -> None:
        self.ws()
        if self.pos != len(self.text):
            raise self.err("trailing input after effect")

    def effect(self) -> CEff:
        self.expect("{")
        props = self.items(self.prop)
        self.expect("|")
        ctls = self.items(self.ctl)
        self.expect("|")
        under = self.under()
        self.expect("}")
        return self.o.alg.make(props, ctls, under)

    def items(self, one) -> list:
        out = []
        if self.peek("|"):
            return out
        out.append(one())
        while self.peek(","):
            self.pos += 1
            out.append(one())
        return out

    def scan_value(self, stops: str) -> str:
        # underlying-effect text up to a delimiter at nesting depth 0
        self.ws()
        start = self.pos
        if self.text.startswith("{", start):
            self.pos = match_brace(self.text, start)
            return self.text[start:self.pos]
        depth = 0
        i = start
        while i < len(self.text):
            ch = self.text[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and (ch in stops or self.text.startswith("~>", i)):
                break
            i += 1
        self.pos = i
        return self.text[start:i].strip()

    def qvalue(self, stops: str) -> object:
        at = self.pos
        raw = self.scan_value(stops)
        if not raw:
            self.pos = at
            raise self.err("expected an underlying effect")
        try:
            return self.o.q.parse(raw)
        except ValueError as exc:
            raise ParseError(f"bad underlying effect {raw!r}: {exc}", self.text, at) from None

    def under(self):
        if self.peek("_|_"):
            self.pos += 3
            return None
        return self.qvalue("}|,")

    def annot_ty(self) -> S.Ty:
        self.ws()
        d, end = read_datum(self.text, self.pos)
        t = self.o.ty(d, self.bound)
        self.pos = end
        return t

    def ctl(self):
        if self.peek("["):
            self.pos += 1
            inner = self.ctl()
            self.expect("]")
            self.expect("@")
            return Blocked(inner, self.word())
        if self.keyword("abort"):
            tag = self.word()
            pre = self.qvalue("}|,")
            self.expect("~>")
            return Abort(tag, pre, self.annot_ty())
        if self.keyword("replace"):
            tag = self.word()
            self.expect(":")
            pre = self.qvalue("}|,")
            self.expect("~>")
            return Replace(tag, pre, self.annot_ty())
        raise self.err("expected a control effect (abort, replace or [..]@tag)")

    def prop(self):
        if self.peek("["):
            self.pos += 1
            inner = self.prop()
            self.expect("]")
            self.expect("@")
            return BlockedP(inner, self.word())
        if self.keyword("mu"):
            var = self.word()
            self.expect(".")
            saved = self.pvars
            self.pvars = saved | {var}
            body = self.prop()
            self.pvars = saved
            return Mu(var, body)
        for kw, comp in (("cproph", True), ("proph", False)):
            if self.keyword(kw):
                tag = self.word()
                pred = self.effect()
                self.expect("~>")
                res = self.annot_ty()
                if not self.keyword("obs"):
                    raise self.err("expected 'obs'")
                obs = self.effect()
                return Proph(tag, pred, res, obs, comp)
        at = self.pos
        name = self.word()
        if name not in self.pvars:
            self.pos = at
            raise self.err(f"unbound prophecy variable {name!r}")
        return PVar(name)
