"""Message-passing embedding towers.

Each tower: token table -> `hops` rounds of relu(W_self h + W_in mean(in) +
W_out mean(out) + b) with per-hop weights -> shared dense expansion to the
embedding width -> coordinatewise max over nodes.  Neighbor means sum values
in per-coordinate sorted order, which makes tower outputs bitwise invariant
under graph node permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import FormulaGraph
from .tensor import ParamStore, Tape, Tensor, uniform_init

SPACE_SUCCESS = "success"  # consumed by the success model's combiner
SPACE_OUTCOME = "outcome"  # consumed by the outcome model's combiner


class SpaceTagError(TypeError):
    """An embedding was offered to a consumer from the wrong latent space."""


@dataclass(frozen=True)
class Embedding:
    space: str
    vec: np.ndarray

    def require(self, space: str) -> "Embedding":
        if self.space != space:
            raise SpaceTagError(f"expected a {space!r}-space embedding, got {self.space!r}")
        return self

    def __len__(self) -> int:
        return len(self.vec)


@dataclass(frozen=True)
class TowerConfig:
    vocab_size: int
    hops: int = 4
    node_dim: int = 32
    embed_dim: int = 64

    def __post_init__(self):
        if min(self.vocab_size, self.hops, self.node_dim, self.embed_dim) < 1:
            raise ValueError("tower dimensions must be >= 1")


def _grouped_mean(tape: Tape, h: Tensor, groups, n_nodes: int) -> Tensor:
    """Mean over neighbor states per node; empty neighbor sets give zero rows.

    Contributions are summed in per-coordinate sorted value order so the result
    is exactly invariant under any relabeling of the nodes.
    """
    H = h.data
    out = np.zeros_like(H)
    for node_ids, nbr_mat in groups:
        vals = H[nbr_mat]               # (k, deg, d)
        vals = np.sort(vals, axis=1)    # canonical summation order
        out[node_ids] = vals.sum(axis=1) / nbr_mat.shape[1]

    def backward(g):
        gh = np.zeros_like(H)
        for node_ids, nbr_mat in groups:
            contrib = g[node_ids] / nbr_mat.shape[1]      # (k, d)
            np.add.at(gh, nbr_mat.reshape(-1), np.repeat(contrib, nbr_mat.shape[1], axis=0))
        return (gh,)

    return tape.record(Tensor(out), (h,), backward)


class Tower:
    """One embedding tower; parameters live in `store` under `prefix/`."""

    def __init__(self, store: ParamStore, prefix: str, cfg: TowerConfig, space: str):
        self.store = store
        self.prefix = prefix
        self.cfg = cfg
        self.space = space

    def param_names(self) -> list[str]:
        names = [f"{self.prefix}/token_table"]
        for h in range(self.cfg.hops):
            names += [
                f"{self.prefix}/hop{h}/w_self",
                f"{self.prefix}/hop{h}/w_in",
                f"{self.prefix}/hop{h}/w_out",
                f"{self.prefix}/hop{h}/bias",
            ]
        names += [f"{self.prefix}/expand/w", f"{self.prefix}/expand/b"]
        return names

    def init_params(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        d, k = cfg.node_dim, cfg.embed_dim
        self.store.add(f"{self.prefix}/token_table", uniform_init(rng, (cfg.vocab_size, d), d))
        for h in range(cfg.hops):
            self.store.add(f"{self.prefix}/hop{h}/w_self", uniform_init(rng, (d, d), d))
            self.store.add(f"{self.prefix}/hop{h}/w_in", uniform_init(rng, (d, d), d))
            self.store.add(f"{self.prefix}/hop{h}/w_out", uniform_init(rng, (d, d), d))
            self.store.add(f"{self.prefix}/hop{h}/bias", np.zeros(d))
        self.store.add(f"{self.prefix}/expand/w", uniform_init(rng, (d, k), d))
        self.store.add(f"{self.prefix}/expand/b", np.zeros(k))

    def embed_on_tape(self, tape: Tape, graph: FormulaGraph) -> Tensor:
        """Embedding vector (embed_dim,) as a tape value."""
        cfg = self.cfg
        tokens = np.asarray(graph.tokens, dtype=np.int64)
        if tokens.size and tokens.max() >= cfg.vocab_size:
            raise ValueError(
                f"token id {tokens.max()} out of range for vocabulary of {cfg.vocab_size}"
            )
        plan = graph.aggregation_plan()
        p = self.store
        h = tape.gather_rows(p[f"{self.prefix}/token_table"], tokens)
        for hop in range(cfg.hops):
            m_in = _grouped_mean(tape, h, plan.in_groups, graph.n_nodes)
            m_out = _grouped_mean(tape, h, plan.out_groups, graph.n_nodes)
            z = tape.add(
                tape.add(
                    tape.matmul(h, p[f"{self.prefix}/hop{hop}/w_self"]),
                    tape.matmul(m_in, p[f"{self.prefix}/hop{hop}/w_in"]),
                ),
                tape.matmul(m_out, p[f"{self.prefix}/hop{hop}/w_out"]),
            )
            h = tape.relu(tape.add_bias(z, p[f"{self.prefix}/hop{hop}/bias"]))
        expanded = tape.add_bias(
            tape.matmul(h, p[f"{self.prefix}/expand/w"]), p[f"{self.prefix}/expand/b"]
        )
        return tape.reduce_max_over_axis(expanded, axis=0)


def embed(tower: Tower, graph: FormulaGraph) -> Embedding:
    """Inference entry point: tagged embedding of one formula graph."""
    vec = tower.embed_on_tape(Tape(), graph)
    return Embedding(tower.space, vec.data.copy())
