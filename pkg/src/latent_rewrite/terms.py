"""Simply-typed higher-order terms: types, alpha-equivalence, substitution, matching.

Terms are immutable trees of Var/Const/App/Abs nodes, each Var/Const carrying an
explicit simple type.  All traversals that may touch large rewrite intermediates
(several thousand nodes) are written iteratively so term height never hits the
interpreter recursion limit.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field


class TermError(Exception):
    """Base class for term-level failures."""


class TypingError(TermError):
    """A term or substitution violates the simple-type discipline."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TyVar:
    name: str


@dataclass(frozen=True)
class TyApp:
    name: str
    args: tuple["SimpleType", ...] = ()


SimpleType = TyVar | TyApp

BOOL = TyApp("bool")
NUM = TyApp("num")


def fun_type(arg: SimpleType, res: SimpleType) -> TyApp:
    return TyApp("fun", (arg, res))


def is_fun_type(ty: SimpleType) -> bool:
    return isinstance(ty, TyApp) and ty.name == "fun" and len(ty.args) == 2


def type_vars(ty: SimpleType) -> set[str]:
    out: set[str] = set()
    stack = [ty]
    while stack:
        t = stack.pop()
        if isinstance(t, TyVar):
            out.add(t.name)
        else:
            stack.extend(t.args)
    return out


def apply_type_subst(type_map: dict[str, SimpleType], ty: SimpleType) -> SimpleType:
    if isinstance(ty, TyVar):
        return type_map.get(ty.name, ty)
    if not ty.args:
        return ty
    return TyApp(ty.name, tuple(apply_type_subst(type_map, a) for a in ty.args))


def match_type(
    pattern: SimpleType, subject: SimpleType, type_map: dict[str, SimpleType]
) -> bool:
    """One-way type matching: pattern type variables bind to subject types.

    Subject type variables are rigid.  Extends ``type_map`` in place; returns
    False (leaving partial bindings behind) on failure, so callers should match
    against a scratch copy when they need rollback.
    """
    if isinstance(pattern, TyVar):
        bound = type_map.get(pattern.name)
        if bound is None:
            type_map[pattern.name] = subject
            return True
        return bound == subject
    if isinstance(subject, TyVar):
        return False
    if pattern.name != subject.name or len(pattern.args) != len(subject.args):
        return False
    return all(match_type(p, s, type_map) for p, s in zip(pattern.args, subject.args))


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    ty: SimpleType


@dataclass(frozen=True)
class Const:
    name: str
    ty: SimpleType


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    bound: Var
    body: "Term"


Term = Var | Const | App | Abs

Position = tuple[int, ...]


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, App):
        return (t.fun, t.arg)
    if isinstance(t, Abs):
        return (t.bound, t.body)
    return ()


class _IdMemo:
    """Weak id-keyed memo for derived term attributes.

    Rewriting shares subterm objects aggressively, so size/type queries repeat
    on identical objects; the weakref check guards against id reuse.
    """

    def __init__(self, limit: int = 1_000_000):
        self._map: dict[int, tuple[weakref.ref, object]] = {}
        self._limit = limit

    def get(self, obj):
        hit = self._map.get(id(obj))
        if hit is not None and hit[0]() is obj:
            return hit[1]
        return None

    def put(self, obj, value) -> None:
        if len(self._map) >= self._limit:
            self._map = {k: v for k, v in self._map.items() if v[0]() is not None}
            if len(self._map) >= self._limit:
                self._map.clear()
        self._map[id(obj)] = (weakref.ref(obj), value)


_SIZE_MEMO = _IdMemo()
_TYPE_MEMO = _IdMemo()


def size(t: Term) -> int:
    """Number of AST nodes (binder occurrences count)."""
    cached = _SIZE_MEMO.get(t)
    if cached is not None:
        return cached
    out: list[int] = []
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, done = stack.pop()
        kids = _children(node)
        if done:
            total = 1 + sum(out.pop() for _ in kids)
            out.append(total)
            _SIZE_MEMO.put(node, total)
            continue
        hit = _SIZE_MEMO.get(node)
        if hit is not None:
            out.append(hit)
        elif not kids:
            out.append(1)
        else:
            stack.append((node, True))
            stack.extend((k, False) for k in kids)
    return out[0]


def term_type(t: Term) -> SimpleType:
    """Type of a well-typed term; raises TypingError on an ill-typed App."""
    cached = _TYPE_MEMO.get(t)
    if cached is not None:
        return cached
    out: list[SimpleType] = []
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, done = stack.pop()
        if done:
            if isinstance(node, App):
                arg_ty = out.pop()
                fun_ty = out.pop()
                if not is_fun_type(fun_ty) or fun_ty.args[0] != arg_ty:
                    raise TypingError(
                        f"application of {fun_ty} to argument of type {arg_ty}"
                    )
                ty = fun_ty.args[1]
            else:
                ty = fun_type(node.bound.ty, out.pop())
            out.append(ty)
            _TYPE_MEMO.put(node, ty)
            continue
        hit = _TYPE_MEMO.get(node)
        if hit is not None:
            out.append(hit)
        elif isinstance(node, (Var, Const)):
            out.append(node.ty)
        else:
            stack.append((node, True))
            if isinstance(node, App):
                stack.append((node.arg, False))
                stack.append((node.fun, False))
            else:
                stack.append((node.body, False))
    return out[0]


def is_well_typed(t: Term) -> bool:
    try:
        term_type(t)
        return True
    except TypingError:
        return False


def free_vars(t: Term) -> set[Var]:
    """Free variables of t (a variable is identified by name and type)."""
    out: set[Var] = set()
    # (term, frozenset of bound Vars) pairs; bound sets stay tiny.
    stack: list[tuple[Term, frozenset[Var]]] = [(t, frozenset())]
    while stack:
        node, bound = stack.pop()
        if isinstance(node, Var):
            if node not in bound:
                out.add(node)
        elif isinstance(node, App):
            stack.append((node.fun, bound))
            stack.append((node.arg, bound))
        elif isinstance(node, Abs):
            stack.append((node.body, bound | {node.bound}))
    return out


def free_var_names(t: Term) -> set[str]:
    return {v.name for v in free_vars(t)}


def alpha_equal(a: Term, b: Term) -> bool:
    """Structural equality up to consistent renaming of bound variables."""
    # Work stack of (term, term, depth-env-a, depth-env-b).  Environments map a
    # bound variable name to its binder depth; types must agree exactly.
    stack: list[tuple[Term, Term, dict[str, int], dict[str, int], int]] = [
        (a, b, {}, {}, 0)
    ]
    while stack:
        ta, tb, env_a, env_b, depth = stack.pop()
        if type(ta) is not type(tb):
            return False
        if isinstance(ta, Var):
            da = env_a.get(ta.name)
            db = env_b.get(tb.name)
            if da is None and db is None:
                if ta != tb:
                    return False
            elif da != db or ta.ty != tb.ty:
                return False
        elif isinstance(ta, Const):
            if ta != tb:
                return False
        elif isinstance(ta, App):
            stack.append((ta.fun, tb.fun, env_a, env_b, depth))
            stack.append((ta.arg, tb.arg, env_a, env_b, depth))
        else:
            if ta.bound.ty != tb.bound.ty:
                return False
            ea = dict(env_a)
            eb = dict(env_b)
            ea[ta.bound.name] = depth
            eb[tb.bound.name] = depth
            stack.append((ta.body, tb.body, ea, eb, depth + 1))
    return True


# ---------------------------------------------------------------------------
# Positions
# ---------------------------------------------------------------------------


def subterm_positions(t: Term) -> list[Position]:
    """All AST positions in top-down, leftmost-outermost (preorder) order."""
    out: list[Position] = []
    stack: list[tuple[Term, Position]] = [(t, ())]
    while stack:
        node, pos = stack.pop()
        out.append(pos)
        kids = _children(node)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((kids[i], pos + (i,)))
    return out


def subterm_at(t: Term, pos: Position) -> Term:
    for i in pos:
        kids = _children(t)
        t = kids[i]
    return t


def replace_at(t: Term, pos: Position, new: Term) -> Term:
    """Replace the subterm at pos; rebuilds only the spine above it."""
    spine: list[Term] = [t]
    for i in pos:
        t = _children(t)[i]
        spine.append(t)
    current = new
    for parent, i in zip(reversed(spine[:-1]), reversed(pos)):
        if isinstance(parent, App):
            current = App(current, parent.arg) if i == 0 else App(parent.fun, current)
        else:
            if i == 0:
                if not isinstance(current, Var):
                    raise TermError("binder slot can only hold a variable")
                current = Abs(current, parent.body)
            else:
                current = Abs(parent.bound, current)
    return current


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


@dataclass
class Substitution:
    """Simultaneous first-order substitution over term and type variables."""

    term_map: dict[str, Term] = field(default_factory=dict)
    type_map: dict[str, SimpleType] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not self.term_map and not self.type_map


def _fresh_name(base: str, avoid: set[str]) -> str:
    candidate = base + "'"
    while candidate in avoid:
        candidate += "'"
    return candidate


def substitute(s: Substitution, t: Term) -> Term:
    """Capture-avoiding substitution; applies the type map everywhere.

    Raises TypingError if a variable's image disagrees with the variable's
    (type-substituted) type.
    """
    if s.is_empty():
        return t
    type_cache: dict[int, SimpleType] = {}

    def image_type(img: Term) -> SimpleType:
        key = id(img)
        if key not in type_cache:
            type_cache[key] = term_type(img)
        return type_cache[key]

    def go(node: Term, term_map: dict[str, Term]) -> Term:
        if isinstance(node, Var):
            ty = apply_type_subst(s.type_map, node.ty)
            img = term_map.get(node.name)
            if img is not None:
                img_ty = image_type(img)
                if img_ty != ty:
                    raise TypingError(
                        f"substituting {node.name}:{ty} with a term of type {img_ty}"
                    )
                return img
            return Var(node.name, ty)
        if isinstance(node, Const):
            return Const(node.name, apply_type_subst(s.type_map, node.ty))
        if isinstance(node, App):
            return App(go(node.fun, term_map), go(node.arg, term_map))
        # Abs: drop shadowed and unused entries, rename the binder on capture.
        body_free = free_var_names(node.body)
        inner = {
            k: v
            for k, v in term_map.items()
            if k != node.bound.name and k in body_free
        }
        bound_ty = apply_type_subst(s.type_map, node.bound.ty)
        image_free = {k: free_var_names(v) for k, v in inner.items()}
        if any(node.bound.name in fv for fv in image_free.values()):
            avoid = set(body_free)
            for fv in image_free.values():
                avoid |= fv
            new_name = _fresh_name(node.bound.name, avoid)
            # Renaming rides along in the same simultaneous map.
            inner[node.bound.name] = Var(new_name, bound_ty)
            return Abs(Var(new_name, bound_ty), go(node.body, inner))
        return Abs(Var(node.bound.name, bound_ty), go(node.body, inner))

    return go(t, dict(s.term_map))


# ---------------------------------------------------------------------------
# One-way first-order matching
# ---------------------------------------------------------------------------


def _contains_any_bound(t: Term, names: set[str]) -> bool:
    """True if t has a free occurrence of a variable named in `names`."""
    if not names:
        return False
    stack: list[tuple[Term, frozenset[str]]] = [(t, frozenset())]
    while stack:
        node, shadowed = stack.pop()
        if isinstance(node, Var):
            if node.name in names and node.name not in shadowed:
                return True
        elif isinstance(node, App):
            stack.append((node.fun, shadowed))
            stack.append((node.arg, shadowed))
        elif isinstance(node, Abs):
            stack.append((node.body, shadowed | {node.bound.name}))
    return False


def match(
    pattern: Term, subject: Term, pattern_vars: set[str]
) -> Substitution | None:
    """First-order, one-way match of pattern against subject.

    Pattern variables bind whole subterms; pattern type variables bind subject
    types.  Subject variables are never bound, and variables bound inside the
    subject argument may not escape into the result.  Returns None on failure.
    """
    subst = Substitution()

    def go(p: Term, s: Term, penv: dict[str, int], senv: dict[str, int], depth: int) -> bool:
        if isinstance(p, Var):
            if p.name in penv:
                # Bound in the pattern: must be the corresponding subject binder.
                return (
                    isinstance(s, Var)
                    and senv.get(s.name) == penv[p.name]
                    and apply_type_subst(subst.type_map, p.ty) == s.ty
                )
            if p.name in pattern_vars:
                if _contains_any_bound(s, set(senv)):
                    return False  # subject-bound variable would escape
                if not match_type(p.ty, term_type(s), subst.type_map):
                    return False
                prev = subst.term_map.get(p.name)
                if prev is not None:
                    return alpha_equal(prev, s)
                subst.term_map[p.name] = s
                return True
            # Rigid free variable: must be literally the same (and free) in s.
            return (
                isinstance(s, Var)
                and s.name not in senv
                and p.name == s.name
                and match_type(p.ty, s.ty, subst.type_map)
            )
        if isinstance(p, Const):
            return (
                isinstance(s, Const)
                and p.name == s.name
                and match_type(p.ty, s.ty, subst.type_map)
            )
        if isinstance(p, App):
            return (
                isinstance(s, App)
                and go(p.fun, s.fun, penv, senv, depth)
                and go(p.arg, s.arg, penv, senv, depth)
            )
        if not isinstance(s, Abs):
            return False
        if not match_type(p.bound.ty, s.bound.ty, subst.type_map):
            return False
        penv2 = dict(penv)
        senv2 = dict(senv)
        penv2[p.bound.name] = depth
        senv2[s.bound.name] = depth
        return go(p.body, s.body, penv2, senv2, depth + 1)

    if go(pattern, subject, {}, {}, 0):
        return subst
    return None
