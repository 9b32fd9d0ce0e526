"""Deterministic synthetic theorem corpus.

The database opens with a fixed block of equational axioms over a small
signature (Peano arithmetic with + * EXP, pairs, lists, booleans) followed by
random ground/quantified statements engineered so that many axiom rewrites
apply.  Everything is a pure function of (seed, size, config); the same inputs
always produce byte-identical files.

Statements are formulas, not facts: the rewrite task never asks whether they
are true, only whether a parameter rewrites them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .formula_io import Theorem, TheoremDatabase
from .rewrite import mk_eq, mk_forall
from .terms import (
    App,
    Const,
    NUM,
    BOOL,
    SimpleType,
    Term,
    TyApp,
    TyVar,
    Var,
    fun_type,
    size,
)

A = TyVar("A")
B = TyVar("B")


def prod_type(a: SimpleType, b: SimpleType) -> TyApp:
    return TyApp("prod", (a, b))


def list_type(a: SimpleType) -> TyApp:
    return TyApp("list", (a,))


def _c2(name: str, a: SimpleType, b: SimpleType, res: SimpleType) -> Const:
    return Const(name, fun_type(a, fun_type(b, res)))


def _c1(name: str, a: SimpleType, res: SimpleType) -> Const:
    return Const(name, fun_type(a, res))


def app2(f: Const, x: Term, y: Term) -> Term:
    return App(App(f, x), y)


ZERO = Const("0", NUM)
ONE = Const("1", NUM)
SUC = _c1("SUC", NUM, NUM)
PLUS = _c2("+", NUM, NUM, NUM)
TIMES = _c2("*", NUM, NUM, NUM)
POW = _c2("EXP", NUM, NUM, NUM)
TRUE = Const("T", BOOL)
FALSE = Const("F", BOOL)
AND = _c2("/\\", BOOL, BOOL, BOOL)
OR = _c2("\\/", BOOL, BOOL, BOOL)
NOT = _c1("~", BOOL, BOOL)


def pair_const(a: SimpleType, b: SimpleType) -> Const:
    return _c2("pair", a, b, prod_type(a, b))


def fst_const(a: SimpleType, b: SimpleType) -> Const:
    return _c1("FST", prod_type(a, b), a)


def snd_const(a: SimpleType, b: SimpleType) -> Const:
    return _c1("SND", prod_type(a, b), b)


def nil_const(a: SimpleType) -> Const:
    return Const("NIL", list_type(a))


def cons_const(a: SimpleType) -> Const:
    return _c2("CONS", a, list_type(a), list_type(a))


def append_const(a: SimpleType) -> Const:
    return _c2("APPEND", list_type(a), list_type(a), list_type(a))


def numeral(n: int) -> Term:
    t: Term = ZERO
    for _ in range(n):
        t = App(SUC, t)
    return t


def suc(t: Term) -> Term:
    return App(SUC, t)


def plus(a: Term, b: Term) -> Term:
    return app2(PLUS, a, b)


def times(a: Term, b: Term) -> Term:
    return app2(TIMES, a, b)


def power(a: Term, b: Term) -> Term:
    return app2(POW, a, b)


# ---------------------------------------------------------------------------
# Axiom block
# ---------------------------------------------------------------------------


def _forall(vs: list[Var], body: Term) -> Term:
    for v in reversed(vs):
        body = mk_forall(v, body)
    return body


def axiom_block() -> list[tuple[str, Term]]:
    x = Var("x", NUM)
    y = Var("y", NUM)
    z = Var("z", NUM)
    n = Var("n", NUM)
    p = Var("p", BOOL)
    xa = Var("x", A)
    yb = Var("y", B)
    la = Var("l", list_type(A))
    ma = Var("m", list_type(A))
    na = Var("n", list_type(A))
    ha = Var("h", A)
    two = numeral(2)
    axioms: list[tuple[str, Term]] = [
        ("ADD_ZERO", _forall([x], mk_eq(plus(x, ZERO), x))),
        ("ZERO_ADD", _forall([x], mk_eq(plus(ZERO, x), x))),
        ("ADD_SUC", _forall([x, y], mk_eq(plus(x, suc(y)), suc(plus(x, y))))),
        ("ADD_COMM", _forall([x, y], mk_eq(plus(x, y), plus(y, x)))),
        ("ADD_ASSOC", _forall([x, y, z], mk_eq(plus(plus(x, y), z), plus(x, plus(y, z))))),
        ("MUL_ZERO", _forall([x], mk_eq(times(x, ZERO), ZERO))),
        ("MUL_ONE", _forall([x], mk_eq(times(x, ONE), x))),
        ("MUL_SUC", _forall([x, y], mk_eq(times(x, suc(y)), plus(times(x, y), x)))),
        ("MUL_COMM", _forall([x, y], mk_eq(times(x, y), times(y, x)))),
        ("MUL_ASSOC", _forall([x, y, z], mk_eq(times(times(x, y), z), times(x, times(y, z))))),
        ("LEFT_DISTRIB", _forall([x, y, z], mk_eq(times(x, plus(y, z)), plus(times(x, y), times(x, z))))),
        ("POW_ZERO", _forall([x], mk_eq(power(x, ZERO), ONE))),
        ("POW_ONE", _forall([x], mk_eq(power(x, ONE), x))),
        ("POW_SUC", _forall([x, n], mk_eq(power(x, suc(n)), times(x, power(x, n))))),
        ("POW_TWO", _forall([x], mk_eq(power(x, two), times(x, x)))),
        ("ONE_SUC", mk_eq(ONE, suc(ZERO))),
        ("FST_PAIR", _forall([xa, yb], mk_eq(App(fst_const(A, B), app2(pair_const(A, B), xa, yb)), xa))),
        ("SND_PAIR", _forall([xa, yb], mk_eq(App(snd_const(A, B), app2(pair_const(A, B), xa, yb)), yb))),
        ("APPEND_NIL", _forall([la], mk_eq(app2(append_const(A), nil_const(A), la), la))),
        ("NIL_APPEND", _forall([la], mk_eq(app2(append_const(A), la, nil_const(A)), la))),
        ("APPEND_CONS", _forall([ha, la, ma], mk_eq(
            app2(append_const(A), app2(cons_const(A), ha, la), ma),
            app2(cons_const(A), ha, app2(append_const(A), la, ma)),
        ))),
        ("APPEND_ASSOC", _forall([la, ma, na], mk_eq(
            app2(append_const(A), app2(append_const(A), la, ma), na),
            app2(append_const(A), la, app2(append_const(A), ma, na)),
        ))),
        ("AND_TRUE", _forall([p], mk_eq(app2(AND, p, TRUE), p))),
        ("TRUE_AND", _forall([p], mk_eq(app2(AND, TRUE, p), p))),
        ("OR_FALSE", _forall([p], mk_eq(app2(OR, p, FALSE), p))),
        ("NOT_NOT", _forall([p], mk_eq(App(NOT, App(NOT, p)), p))),
    ]
    return axioms


# ---------------------------------------------------------------------------
# Random statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusConfig:
    train_frac: float = 0.6
    valid_frac: float = 0.2
    max_depth: int = 3
    quantified_prob: float = 0.3
    max_numeral: int = 4

    def split_for(self, index: int, total: int) -> str:
        if index < int(total * self.train_frac):
            return "train"
        if index < int(total * (self.train_frac + self.valid_frac)):
            return "valid"
        return "test"


def _num_term(rng: random.Random, depth: int, scope: list[Var], cfg: CorpusConfig) -> Term:
    if depth <= 0:
        if scope and rng.random() < 0.4:
            return rng.choice(scope)
        if rng.random() < 0.15:
            return ONE
        return numeral(rng.randrange(cfg.max_numeral + 1))
    kind = rng.choices(
        ["plus", "times", "pow", "fst", "snd", "add0", "mul1", "leaf"],
        weights=[22, 18, 14, 8, 6, 12, 10, 10],
    )[0]
    sub = lambda: _num_term(rng, depth - 1, scope, cfg)
    if kind == "plus":
        return plus(sub(), sub())
    if kind == "times":
        return times(sub(), sub())
    if kind == "pow":
        return power(sub(), numeral(rng.randrange(1, 4)))
    if kind == "fst":
        pc = pair_const(NUM, NUM)
        return App(fst_const(NUM, NUM), app2(pc, sub(), sub()))
    if kind == "snd":
        pc = pair_const(NUM, NUM)
        return App(snd_const(NUM, NUM), app2(pc, sub(), sub()))
    if kind == "add0":
        return plus(sub(), ZERO) if rng.random() < 0.5 else plus(ZERO, sub())
    if kind == "mul1":
        return times(sub(), ONE)
    return _num_term(rng, 0, scope, cfg)


def _list_term(rng: random.Random, depth: int, scope: list[Var], cfg: CorpusConfig) -> Term:
    nil = nil_const(NUM)
    if depth <= 0:
        if rng.random() < 0.5:
            return nil
        return app2(cons_const(NUM), _num_term(rng, 0, scope, cfg), nil)
    kind = rng.choices(["cons", "append", "append_nil", "leaf"], weights=[30, 30, 25, 15])[0]
    if kind == "cons":
        return app2(
            cons_const(NUM),
            _num_term(rng, depth - 1, scope, cfg),
            _list_term(rng, depth - 1, scope, cfg),
        )
    if kind == "append":
        return app2(
            append_const(NUM),
            _list_term(rng, depth - 1, scope, cfg),
            _list_term(rng, depth - 1, scope, cfg),
        )
    if kind == "append_nil":
        inner = _list_term(rng, depth - 1, scope, cfg)
        if rng.random() < 0.5:
            return app2(append_const(NUM), nil, inner)
        return app2(append_const(NUM), inner, nil)
    return _list_term(rng, 0, scope, cfg)


def _bool_term(rng: random.Random, depth: int, scope: list[Var], cfg: CorpusConfig) -> Term:
    bool_scope = [v for v in scope if v.ty == BOOL]
    if depth <= 0:
        if bool_scope and rng.random() < 0.5:
            return rng.choice(bool_scope)
        return TRUE if rng.random() < 0.5 else FALSE
    kind = rng.choices(["and", "or", "not", "and_true", "eq", "leaf"], weights=[20, 15, 15, 20, 20, 10])[0]
    sub = lambda: _bool_term(rng, depth - 1, scope, cfg)
    if kind == "and":
        return app2(AND, sub(), sub())
    if kind == "or":
        return app2(OR, sub(), sub())
    if kind == "not":
        return App(NOT, App(NOT, sub())) if rng.random() < 0.5 else App(NOT, sub())
    if kind == "and_true":
        return app2(AND, sub(), TRUE) if rng.random() < 0.5 else app2(AND, TRUE, sub())
    if kind == "eq":
        num_scope = [v for v in scope if v.ty == NUM]
        return mk_eq(
            _num_term(rng, depth - 1, num_scope, cfg),
            _num_term(rng, depth - 1, num_scope, cfg),
        )
    return _bool_term(rng, 0, scope, cfg)


def _random_statement(rng: random.Random, cfg: CorpusConfig) -> Term:
    scope: list[Var] = []
    if rng.random() < cfg.quantified_prob:
        n_vars = rng.randrange(1, 3)
        names = ["x", "y"][:n_vars]
        tys = [NUM if rng.random() < 0.85 else BOOL for _ in range(n_vars)]
        scope = [Var(nm, ty) for nm, ty in zip(names, tys)]
    family = rng.choices(["num", "list", "pair", "bool"], weights=[55, 18, 12, 15])[0]
    depth = rng.randrange(2, cfg.max_depth + 1)
    num_scope = [v for v in scope if v.ty == NUM]
    if family == "num":
        lhs = _num_term(rng, depth, num_scope, cfg)
        rhs = _num_term(rng, 1, num_scope, cfg)
    elif family == "list":
        lhs = _list_term(rng, depth, num_scope, cfg)
        rhs = _list_term(rng, 1, num_scope, cfg)
    elif family == "pair":
        pc = pair_const(NUM, NUM)
        lhs = app2(pc, _num_term(rng, depth - 1, num_scope, cfg), _num_term(rng, depth - 1, num_scope, cfg))
        rhs = app2(pc, _num_term(rng, 0, num_scope, cfg), _num_term(rng, 0, num_scope, cfg))
    else:
        lhs = _bool_term(rng, depth, scope, cfg)
        rhs = _bool_term(rng, 1, scope, cfg)
    body = mk_eq(lhs, rhs)
    return _forall(scope, body)


def generate_corpus(seed: int, corpus_size: int, cfg: CorpusConfig = CorpusConfig()) -> TheoremDatabase:
    """Build the deterministic database: axiom block + random statements."""
    axioms = axiom_block()
    if corpus_size < 20:
        raise ValueError(f"corpus size must be >= 20, got {corpus_size}")
    if corpus_size < len(axioms):
        raise ValueError(f"corpus size must cover the {len(axioms)} axioms")
    rng = random.Random(seed)
    statements = [_random_statement(rng, cfg) for _ in range(corpus_size - len(axioms))]
    statements.sort(key=size)  # approximate complexity ordering; stable
    theorems: list[Theorem] = []
    for i, (name, stmt) in enumerate(axioms):
        theorems.append(Theorem(name, i, stmt, cfg.split_for(i, corpus_size)))
    for j, stmt in enumerate(statements):
        idx = len(axioms) + j
        theorems.append(
            Theorem(f"GEN{j:04d}", idx, stmt, cfg.split_for(idx, corpus_size))
        )
    db = TheoremDatabase(theorems)
    db.validate_statements()
    return db
