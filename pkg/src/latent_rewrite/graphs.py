"""Formula-to-graph conversion for the embedding towers.

A term is alpha-normalized (binders renamed by depth), then identical subterms
are collapsed into single nodes (maximal sharing).  Variables are blinded: all
of them carry one shared token, their identity surviving only through the
sharing structure.  Types are not encoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .formula_io import TheoremDatabase
from .terms import Abs, App, Const, Term, Var

TOKEN_APP = "APP"
TOKEN_ABS = "ABS"
TOKEN_VAR = "VAR"
TOKEN_OOV = "OOV"
RESERVED_TOKENS = (TOKEN_APP, TOKEN_ABS, TOKEN_VAR, TOKEN_OOV)


@dataclass(frozen=True)
class Vocabulary:
    token_ids: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.token_ids)

    def const_token(self, name: str) -> int:
        return self.token_ids.get(name, self.token_ids[TOKEN_OOV])

    def __getitem__(self, token: str) -> int:
        return self.token_ids[token]


def build_vocabulary(db: TheoremDatabase) -> Vocabulary:
    """Reserved tokens plus all constant names of the training split, sorted."""
    names: set[str] = set()
    for thm in db.split_theorems("train"):
        stack = [thm.statement]
        while stack:
            node = stack.pop()
            if isinstance(node, Const):
                names.add(node.name)
            elif isinstance(node, App):
                stack.extend((node.fun, node.arg))
            elif isinstance(node, Abs):
                stack.append(node.body)
    tokens = list(RESERVED_TOKENS) + sorted(names)
    return Vocabulary({tok: i for i, tok in enumerate(tokens)})


@dataclass
class FormulaGraph:
    tokens: list[int]
    edges: list[tuple[int, int, int]]  # (parent, child, slot)
    root: int
    _plan: "AggregationPlan | None" = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.tokens)

    def aggregation_plan(self) -> "AggregationPlan":
        if self._plan is None:
            self._plan = AggregationPlan.from_edges(self.n_nodes, self.edges)
        return self._plan


@dataclass
class AggregationPlan:
    """Neighbor indices grouped by degree, for vectorized mean aggregation.

    ``in_groups``/``out_groups`` hold (node_ids, neighbor_matrix) pairs where
    neighbor_matrix has one row of neighbor indices per node in node_ids.
    Multi-edges (e.g. an App applying a node to itself) keep their multiplicity.
    """

    n_nodes: int
    in_groups: list[tuple[np.ndarray, np.ndarray]]
    out_groups: list[tuple[np.ndarray, np.ndarray]]

    @staticmethod
    def from_edges(n_nodes: int, edges: list[tuple[int, int, int]]) -> "AggregationPlan":
        in_lists: list[list[int]] = [[] for _ in range(n_nodes)]
        out_lists: list[list[int]] = [[] for _ in range(n_nodes)]
        for parent, child, _slot in edges:
            in_lists[child].append(parent)
            out_lists[parent].append(child)

        def group(lists: list[list[int]]):
            by_deg: dict[int, list[int]] = {}
            for v, nbrs in enumerate(lists):
                if nbrs:
                    by_deg.setdefault(len(nbrs), []).append(v)
            groups = []
            for deg in sorted(by_deg):
                vs = by_deg[deg]
                mat = np.array([lists[v] for v in vs], dtype=np.int64)
                groups.append((np.array(vs, dtype=np.int64), mat))
            return groups

        return AggregationPlan(n_nodes, group(in_lists), group(out_lists))


def alpha_normalize(t: Term) -> Term:
    """Rename each binder to a canonical depth-indexed name."""
    out: list[Term] = []
    stack: list[tuple[Term, dict[str, str], int, bool]] = [(t, {}, 0, False)]
    while stack:
        node, env, depth, done = stack.pop()
        if isinstance(node, Var):
            out.append(Var(env.get(node.name, node.name), node.ty))
        elif isinstance(node, Const):
            out.append(node)
        elif isinstance(node, App):
            if done:
                arg = out.pop()
                fun = out.pop()
                out.append(App(fun, arg))
            else:
                stack.append((node, env, depth, True))
                stack.append((node.arg, env, depth, False))
                stack.append((node.fun, env, depth, False))
        else:
            if done:
                body = out.pop()
                out.append(Abs(Var(f"%{depth}", node.bound.ty), body))
            else:
                env2 = dict(env)
                env2[node.bound.name] = f"%{depth}"
                stack.append((node, env, depth, True))
                stack.append((node.body, env2, depth + 1, False))
    return out[0]


def alpha_canonical_string(t: Term) -> str:
    """Canonical key: alpha-equal terms map to the same string."""
    from .formula_io import print_term

    return print_term(alpha_normalize(t))


def encode(t: Term, vocab: Vocabulary) -> FormulaGraph:
    """Shared-subterm graph of the alpha-normalized term."""
    norm = alpha_normalize(t)
    tokens: list[int] = []
    edges: list[tuple[int, int, int]] = []
    memo: dict[tuple, int] = {}
    out: list[int] = []
    stack: list[tuple[Term, bool]] = [(norm, False)]

    def intern(key: tuple, token: int, children: tuple[tuple[int, int], ...]) -> int:
        node_id = memo.get(key)
        if node_id is None:
            node_id = len(tokens)
            tokens.append(token)
            memo[key] = node_id
            for child_id, slot in children:
                edges.append((node_id, child_id, slot))
        return node_id

    while stack:
        node, done = stack.pop()
        if isinstance(node, Var):
            out.append(intern(("v", node.name, node.ty), vocab[TOKEN_VAR], ()))
        elif isinstance(node, Const):
            out.append(
                intern(("c", node.name, node.ty), vocab.const_token(node.name), ())
            )
        elif isinstance(node, App):
            if done:
                arg_id = out.pop()
                fun_id = out.pop()
                out.append(
                    intern(("a", fun_id, arg_id), vocab[TOKEN_APP], ((fun_id, 0), (arg_id, 1)))
                )
            else:
                stack.append((node, True))
                stack.append((node.arg, False))
                stack.append((node.fun, False))
        else:
            if done:
                body_id = out.pop()
                bound_id = out.pop()
                out.append(
                    intern(("l", bound_id, body_id), vocab[TOKEN_ABS], ((bound_id, 0), (body_id, 1)))
                )
            else:
                stack.append((node, True))
                stack.append((node.body, False))
                stack.append((node.bound, False))
    return FormulaGraph(tokens, edges, root=out[0])
