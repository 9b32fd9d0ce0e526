"""S-expression surface syntax for terms and the theorem-database file format.

Grammar (UTF-8, whitespace separated):

    term := (v NAME TYPE) | (c NAME TYPE) | (app term term) | (abs (v NAME TYPE) term)
    TYPE := NAME | (NAME TYPE...)

A bare TYPE name starting with an uppercase letter is a type variable; any
other bare name is a nullary type constructor (``num``, ``bool``...).  The
database file starts with the header line ``lrwt-db 1`` followed by one record
``(thm NAME SPLIT term)`` per line, in index order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Abs,
    App,
    Const,
    SimpleType,
    Term,
    TermError,
    TyApp,
    TyVar,
    TypingError,
    Var,
    BOOL,
    free_vars,
    subterm_at,
    subterm_positions,
    term_type,
)

DB_HEADER = "lrwt-db 1"
SPLITS = ("train", "valid", "test")


class FormulaError(TermError):
    """Base class for parse- and database-level failures."""


class TermSyntaxError(FormulaError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class TermTypeError(FormulaError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in {subexpr}")
        self.subexpr = subexpr


class DatabaseError(FormulaError):
    pass


# ---------------------------------------------------------------------------
# Tokenizer / reader
# ---------------------------------------------------------------------------

_Token = tuple[str, int, int]  # text, line, col


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch in "()":
            tokens.append((ch, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], line, col))
            col += j - i
            i = j
    return tokens


def _read_sexpr(tokens: list[_Token], start: int):
    """Read one s-expression; returns (tree, next_index).

    Leaves are tokens; a list node is a pair (opening token, list of children).
    """
    if start >= len(tokens):
        raise TermSyntaxError("unexpected end of input", 0, 0)
    first = tokens[start]
    if first[0] == ")":
        raise TermSyntaxError("unexpected ')'", first[1], first[2])
    if first[0] != "(":
        return first, start + 1
    stack: list[tuple[_Token, list]] = [(first, [])]
    i = start + 1
    while True:
        if i >= len(tokens):
            opener = stack[-1][0]
            raise TermSyntaxError("unclosed '('", opener[1], opener[2])
        tok = tokens[i]
        i += 1
        if tok[0] == "(":
            stack.append((tok, []))
        elif tok[0] == ")":
            node = stack.pop()
            if not stack:
                return node, i
            stack[-1][1].append(node)
        else:
            stack[-1][1].append(tok)


def _is_list(tree) -> bool:
    return isinstance(tree, tuple) and len(tree) == 2 and isinstance(tree[1], list)


def _loc(tree) -> tuple[int, int]:
    tok = tree[0] if _is_list(tree) else tree
    return tok[1], tok[2]


def _atom(tree, what: str) -> str:
    if _is_list(tree):
        line, col = _loc(tree)
        raise TermSyntaxError(f"expected {what}, found a list", line, col)
    return tree[0]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


def _to_type(tree) -> SimpleType:
    if not _is_list(tree):
        name = tree[0]
        if name[0].isupper():
            return TyVar(name)
        return TyApp(name)
    _, items = tree
    if not items:
        line, col = _loc(tree)
        raise TermSyntaxError("empty type", line, col)
    name = _atom(items[0], "type constructor name")
    return TyApp(name, tuple(_to_type(a) for a in items[1:]))


def print_type(ty: SimpleType) -> str:
    if isinstance(ty, TyVar):
        return ty.name
    if not ty.args:
        return ty.name
    return "(" + " ".join([ty.name] + [print_type(a) for a in ty.args]) + ")"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


def _binder_from(tree) -> Var:
    line, col = _loc(tree)
    if not _is_list(tree):
        raise TermSyntaxError("binder must be a (v NAME TYPE) node", line, col)
    _, items = tree
    if len(items) != 3 or _atom(items[0], "node tag") != "v":
        raise TermSyntaxError("binder must be a (v NAME TYPE) node", line, col)
    return Var(_atom(items[1], "variable name"), _to_type(items[2]))


def _to_term(tree) -> Term:
    out: list[Term] = []
    stack: list[tuple[object, bool]] = [(tree, False)]
    while stack:
        node, done = stack.pop()
        line, col = _loc(node)
        if not _is_list(node):
            raise TermSyntaxError(f"bare atom {node[0]!r} is not a term", line, col)
        _, items = node
        if not items:
            raise TermSyntaxError("empty node", line, col)
        tag = _atom(items[0], "node tag")
        if done:
            if tag == "app":
                arg = out.pop()
                fun = out.pop()
                out.append(App(fun, arg))
            else:  # abs
                body = out.pop()
                out.append(Abs(_binder_from(items[1]), body))
            continue
        if tag == "v" or tag == "c":
            if len(items) != 3:
                raise TermSyntaxError(
                    f"({tag} ...) takes a name and a type, got {len(items) - 1} items",
                    line,
                    col,
                )
            name = _atom(items[1], "name")
            ty = _to_type(items[2])
            out.append(Var(name, ty) if tag == "v" else Const(name, ty))
        elif tag == "app":
            if len(items) != 3:
                raise TermSyntaxError("(app ...) takes two subterms", line, col)
            stack.append((node, True))
            stack.append((items[2], False))
            stack.append((items[1], False))
        elif tag == "abs":
            if len(items) != 3:
                raise TermSyntaxError("(abs ...) takes a binder and a body", line, col)
            _binder_from(items[1])  # validate shape early
            stack.append((node, True))
            stack.append((items[2], False))
        else:
            raise TermSyntaxError(f"unknown node tag {tag!r}", line, col)
    return out[0]


def _first_ill_typed(t: Term) -> Term:
    worst = t
    for pos in subterm_positions(t):
        sub = subterm_at(t, pos)
        try:
            term_type(sub)
        except TypingError:
            worst = sub  # deepest-last in preorder keeps the smallest offender
    return worst


def check_types(t: Term) -> SimpleType:
    try:
        return term_type(t)
    except TypingError as exc:
        raise TermTypeError(str(exc), print_term(_first_ill_typed(t))) from exc


def parse_term(text: str) -> Term:
    tokens = _tokenize(text)
    if not tokens:
        raise TermSyntaxError("empty input", 1, 1)
    tree, nxt = _read_sexpr(tokens, 0)
    if nxt != len(tokens):
        line, col = tokens[nxt][1], tokens[nxt][2]
        raise TermSyntaxError("trailing tokens after term", line, col)
    term = _to_term(tree)
    check_types(term)
    return term


def print_term(t: Term) -> str:
    pieces: list[str] = []
    stack: list[object] = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, str):
            pieces.append(x)
        elif isinstance(x, Var):
            pieces.append(f"(v {x.name} {print_type(x.ty)})")
        elif isinstance(x, Const):
            pieces.append(f"(c {x.name} {print_type(x.ty)})")
        elif isinstance(x, App):
            stack.extend([")", x.arg, " ", x.fun, "(app "])
        else:
            stack.extend([")", x.body, " ", x.bound, "(abs "])
    return "".join(pieces)


# ---------------------------------------------------------------------------
# Theorem database
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Theorem:
    name: str
    index: int
    statement: Term
    split: str


@dataclass
class TheoremDatabase:
    theorems: list[Theorem]

    def __post_init__(self):
        names = set()
        for i, thm in enumerate(self.theorems):
            if thm.index != i:
                raise DatabaseError(f"index of {thm.name} is {thm.index}, expected {i}")
            if thm.name in names:
                raise DatabaseError(f"duplicate theorem name {thm.name}")
            if thm.split not in SPLITS:
                raise DatabaseError(f"unknown split {thm.split!r} for {thm.name}")
            names.add(thm.name)

    def __len__(self) -> int:
        return len(self.theorems)

    def split_theorems(self, split: str) -> list[Theorem]:
        return [t for t in self.theorems if t.split == split]

    def by_name(self, name: str) -> Theorem:
        for t in self.theorems:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def signature(self) -> frozenset[tuple[str, SimpleType]]:
        """Typed constants as they occur in the statements."""
        consts: set[tuple[str, SimpleType]] = set()
        for thm in self.theorems:
            stack = [thm.statement]
            while stack:
                node = stack.pop()
                if isinstance(node, Const):
                    consts.add((node.name, node.ty))
                elif isinstance(node, App):
                    stack.extend((node.fun, node.arg))
                elif isinstance(node, Abs):
                    stack.append(node.body)
        return frozenset(consts)

    def validate_statements(self) -> None:
        for thm in self.theorems:
            if term_type(thm.statement) != BOOL:
                raise DatabaseError(f"statement of {thm.name} is not boolean")
            if free_vars(thm.statement):
                raise DatabaseError(f"statement of {thm.name} is not closed")


def save_database(db: TheoremDatabase, path) -> None:
    lines = [DB_HEADER]
    for thm in db.theorems:
        lines.append(f"(thm {thm.name} {thm.split} {print_term(thm.statement)})")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_database(path) -> TheoremDatabase:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != DB_HEADER:
        raise DatabaseError(f"{path}: missing '{DB_HEADER}' header")
    theorems: list[Theorem] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        tokens = _tokenize(raw)
        tree, nxt = _read_sexpr(tokens, 0)
        if nxt != len(tokens) or not _is_list(tree):
            raise DatabaseError(f"{path}:{lineno}: malformed record")
        _, items = tree
        if len(items) != 4 or _atom(items[0], "record tag") != "thm":
            raise DatabaseError(f"{path}:{lineno}: expected (thm NAME SPLIT term)")
        name = _atom(items[1], "theorem name")
        split = _atom(items[2], "split")
        statement = _to_term(items[3])
        check_types(statement)
        theorems.append(Theorem(name, len(theorems), statement, split))
    if not theorems:
        raise DatabaseError(f"{path}: database has no theorems")
    return TheoremDatabase(theorems)
