"""Big-step recursive rewriting of a goal by an equational parameter theorem.

A parameter is usable when it is an equation or a conjunction of equations
under outer universal quantifiers.  One engine call repeatedly replaces the
first matching subterm (top-down, leftmost-outermost, equations tried in
order, scan restarted after every replacement) until no match remains, and
reports one of three outcomes: the goal changed, the goal survived unchanged,
or the process diverged (step or size budget exhausted).
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula_io import Theorem, print_term
from .terms import (
    Abs,
    App,
    Const,
    Term,
    Var,
    alpha_equal,
    fun_type,
    free_var_names,
    match,
    replace_at,
    size,
    substitute,
    subterm_at,
    subterm_positions,
    term_type,
    BOOL,
    SimpleType,
)

EQ = "="
FORALL = "!"
CONJ = "/\\"


class CallCounter:
    """Diagnostic counter; lets tests prove latent propagation never rewrites."""

    def __init__(self):
        self.value = 0

    def bump(self):
        self.value += 1

    def reset(self):
        self.value = 0


REWRITE_CALLS = CallCounter()


# ---------------------------------------------------------------------------
# Builders for the logical skeleton used across the corpus
# ---------------------------------------------------------------------------


def mk_eq(lhs: Term, rhs: Term) -> Term:
    ty = term_type(lhs)
    eq_const = Const(EQ, fun_type(ty, fun_type(ty, BOOL)))
    return App(App(eq_const, lhs), rhs)


def mk_conj(a: Term, b: Term) -> Term:
    conj = Const(CONJ, fun_type(BOOL, fun_type(BOOL, BOOL)))
    return App(App(conj, a), b)


def mk_forall(v: Var, body: Term) -> Term:
    quant = Const(FORALL, fun_type(fun_type(v.ty, BOOL), BOOL))
    return App(quant, Abs(v, body))


def dest_eq(t: Term) -> tuple[Term, Term] | None:
    if (
        isinstance(t, App)
        and isinstance(t.fun, App)
        and isinstance(t.fun.fun, Const)
        and t.fun.fun.name == EQ
    ):
        return t.fun.arg, t.arg
    return None


def dest_conj(t: Term) -> tuple[Term, Term] | None:
    if (
        isinstance(t, App)
        and isinstance(t.fun, App)
        and isinstance(t.fun.fun, Const)
        and t.fun.fun.name == CONJ
    ):
        return t.fun.arg, t.arg
    return None


def strip_foralls(t: Term) -> tuple[list[Var], Term]:
    binders: list[Var] = []
    while (
        isinstance(t, App)
        and isinstance(t.fun, Const)
        and t.fun.name == FORALL
        and isinstance(t.arg, Abs)
    ):
        binders.append(t.arg.bound)
        t = t.arg.body
    return binders, t


# ---------------------------------------------------------------------------
# Outcomes and parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewriteLimits:
    max_steps: int = 100
    max_size: int = 5000

    def __post_init__(self):
        if self.max_steps < 1 or self.max_size < 1:
            raise ValueError("rewrite limits must be >= 1")


@dataclass(frozen=True)
class Changed:
    result: Term


@dataclass(frozen=True)
class Unchanged:
    pass


@dataclass(frozen=True)
class Diverged:
    pass


RewriteOutcome = Changed | Unchanged | Diverged


def success_bit(outcome: RewriteOutcome) -> int:
    return 1 if isinstance(outcome, Changed) else 0


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    pattern_vars: frozenset[str]


@dataclass(frozen=True)
class EquationSet:
    equations: tuple[Equation, ...]
    source: str


def as_equations(p: Theorem) -> EquationSet | None:
    """Read a theorem as rewrite equations, or None if it has the wrong shape.

    Outer universal quantifiers become pattern variables; top-level
    conjunctions are split.  A conjunct that is not an equation, or whose right
    side mentions variables missing from the left, disqualifies the theorem.
    """
    binders, body = strip_foralls(p.statement)
    binder_names = {v.name for v in binders}
    conjuncts = _conjuncts_in_order(body)
    equations: list[Equation] = []
    for conj in conjuncts:
        pair = dest_eq(conj)
        if pair is None:
            return None
        lhs, rhs = pair
        lhs_free = free_var_names(lhs)
        if not free_var_names(rhs) <= lhs_free:
            return None
        equations.append(Equation(lhs, rhs, frozenset(binder_names & lhs_free)))
    return EquationSet(tuple(equations), p.name)


def _conjuncts_in_order(t: Term) -> list[Term]:
    out: list[Term] = []
    stack = [t]
    while stack:
        node = stack.pop()
        pair = dest_conj(node)
        if pair is None:
            out.append(node)
        else:
            stack.append(pair[1])
            stack.append(pair[0])
    return out


def _rewritable_subterms(t: Term, at: tuple[int, ...] = ()):
    """Preorder (position, subterm) pairs, skipping binder slots.

    A binder occurrence is not a replaceable subterm: substituting a non-variable
    there would break the AST, and any pattern that could match it matches the
    root first anyway.
    """
    stack: list[tuple[Term, tuple[int, ...]]] = [(t, at)]
    while stack:
        node, pos = stack.pop()
        yield pos, node
        if isinstance(node, App):
            stack.append((node.arg, pos + (1,)))
            stack.append((node.fun, pos + (0,)))
        elif isinstance(node, Abs):
            stack.append((node.body, pos + (1,)))


def _scan_resumed(t: Term, p: tuple[int, ...]):
    """Preorder scan of t restricted to positions whose match status can have
    changed since a replacement at position p.

    Equivalent to a full restart scan given that every position strictly before
    p in preorder, other than p's ancestors, holds an unchanged subterm already
    known not to match: ancestors changed (their subtree contains p), the
    subtree at p is new, and positions after it were never scanned.
    """
    path: list[Term] = []
    node = t
    for i in p:
        path.append(node)
        node = (node.fun, node.arg)[i] if isinstance(node, App) else (node.bound, node.body)[i]
    for k, anc in enumerate(path):
        yield p[:k], anc
    yield from _rewritable_subterms(node, p)
    for k in range(len(p) - 1, -1, -1):
        anc = path[k]
        if isinstance(anc, App) and p[k] == 0:
            yield from _rewritable_subterms(anc.arg, p[:k] + (1,))


def _spine(t: Term) -> tuple[Term, int]:
    args = 0
    while isinstance(t, App):
        t = t.fun
        args += 1
    return t, args


def _const_names(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Const):
            out.add(node.name)
        elif isinstance(node, App):
            stack.append(node.fun)
            stack.append(node.arg)
        elif isinstance(node, Abs):
            stack.append(node.body)
    return out


@dataclass(frozen=True)
class _CompiledEquation:
    eq: Equation
    pattern_vars: frozenset[str]
    consts: frozenset[str]           # constants that must occur in any match
    head: tuple[str, int] | None     # (head constant, applied arg count), if rigid


def compile_equations(eqs: EquationSet) -> list[_CompiledEquation]:
    compiled = []
    for eq in eqs.equations:
        head, n_args = _spine(eq.lhs)
        head_info = (head.name, n_args) if isinstance(head, Const) else None
        compiled.append(
            _CompiledEquation(eq, eq.pattern_vars, frozenset(_const_names(eq.lhs)), head_info)
        )
    return compiled


# Cycle detection is a sound shortcut (the engine is deterministic, so any
# revisited term loops forever); only small early terms are worth tracking,
# the budget catches everything else.
_CYCLE_TRACK_MAX_SIZE = 400
_CYCLE_TRACK_MAX_STEPS = 60


def rewrite_compiled(
    goal: Term, compiled: list[_CompiledEquation], limits: RewriteLimits
) -> RewriteOutcome:
    REWRITE_CALLS.bump()
    # Constants reachable during this run: the goal's plus anything a right
    # side can introduce.  Equations needing other constants can never match.
    reachable = _const_names(goal)
    for ce in compiled:
        reachable |= _const_names(ce.eq.rhs)
    active = [ce for ce in compiled if ce.consts <= reachable]
    current = goal
    current_size = size(goal)
    steps = 0
    changed = False
    last_pos: tuple[int, ...] | None = None
    seen: set[str] = set()  # printed forms; term hashing would recurse deeply
    while active:
        replaced = False
        scan = (
            _rewritable_subterms(current)
            if last_pos is None
            else _scan_resumed(current, last_pos)
        )
        for pos, sub in scan:
            sub_head: tuple[Term, int] | None = None
            for ce in active:
                if ce.head is not None:
                    if sub_head is None:
                        sub_head = _spine(sub)
                    h, n = sub_head
                    if not (isinstance(h, Const) and (h.name, n) == ce.head):
                        continue
                s = match(ce.eq.lhs, sub, ce.pattern_vars)
                if s is None:
                    continue
                replacement = substitute(s, ce.eq.rhs)
                current = replace_at(current, pos, replacement)
                current_size += size(replacement) - size(sub)
                last_pos = pos
                steps += 1
                changed = True
                replaced = True
                break
            if replaced:
                break
        if not replaced:
            break
        if steps > limits.max_steps or current_size > limits.max_size:
            return Diverged()
        if steps <= _CYCLE_TRACK_MAX_STEPS and current_size <= _CYCLE_TRACK_MAX_SIZE:
            key = print_term(current)
            if key in seen:
                return Diverged()
            seen.add(key)
    if not changed or alpha_equal(current, goal):
        return Unchanged()
    return Changed(current)


def rewrite(goal: Term, param: Theorem, limits: RewriteLimits = RewriteLimits()) -> RewriteOutcome:
    """Rewrite `goal` by `param` to fixpoint under the given budgets."""
    eqs = as_equations(param)
    if eqs is None:
        REWRITE_CALLS.bump()
        return Unchanged()
    return rewrite_compiled(goal, compile_equations(eqs), limits)
