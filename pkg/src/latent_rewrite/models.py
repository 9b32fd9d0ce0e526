"""The three models: rewrite-success scoring, outcome prediction, space alignment.

* SuccessModel (CLI name ``sigma``): two towers -> combiner MLP -> success logit.
* OutcomeModel (CLI name ``omega``): same shape with a wider combiner and an
  extra head predicting the success-space embedding of the rewrite result.
* AlignModel (CLI name ``alpha``): translates success-space vectors into the
  outcome model's goal space so latent chains can continue.

Combiner input is [goal, param, goal*param] concatenated.  Goal-side space
tags are enforced at every entry point; batch entry points take raw matrices
and are used by training and evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gnn import (
    Embedding,
    SPACE_OUTCOME,
    SPACE_SUCCESS,
    Tower,
    TowerConfig,
)
from .graphs import FormulaGraph
from .tensor import ParamStore, Tape, Tensor, backward, uniform_init


@dataclass(frozen=True)
class SuccessModelConfig:
    tower: TowerConfig
    combiner_width: int = 128


@dataclass(frozen=True)
class OutcomeModelConfig:
    tower: TowerConfig
    combiner_width: int = 256


@dataclass(frozen=True)
class AlignModelConfig:
    embed_dim: int = 64  # hidden width is fixed at twice this


def _init_mlp(store: ParamStore, prefix: str, dims: list[int], rng: np.random.Generator):
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        store.add(f"{prefix}/w{i}", uniform_init(rng, (a, b), a))
        store.add(f"{prefix}/b{i}", np.zeros(b))


def _mlp_relu(tape: Tape, store: ParamStore, prefix: str, x: Tensor, n_layers: int) -> Tensor:
    h = x
    for i in range(n_layers):
        h = tape.relu(
            tape.add_bias(tape.matmul(h, store[f"{prefix}/w{i}"]), store[f"{prefix}/b{i}"])
        )
    return h


def _linear(tape: Tape, store: ParamStore, prefix: str, x: Tensor) -> Tensor:
    return tape.add_bias(tape.matmul(x, store[f"{prefix}/w"]), store[f"{prefix}/b"])


def _pair_features(tape: Tape, goal_rows: Tensor, param_rows: Tensor) -> Tensor:
    return tape.concat(
        [goal_rows, param_rows, tape.elementwise_mul(goal_rows, param_rows)], axis=1
    )


class SuccessModel:
    """Predicts the log-odds that a parameter rewrites a goal."""

    space = SPACE_SUCCESS

    def __init__(self, cfg: SuccessModelConfig):
        self.cfg = cfg
        self.store = ParamStore()
        self.goal_tower = Tower(self.store, "goal", cfg.tower, SPACE_SUCCESS)
        self.param_tower = Tower(self.store, "param", cfg.tower, SPACE_SUCCESS)

    def init_params(self, rng: np.random.Generator) -> None:
        k = self.cfg.tower.embed_dim
        w = self.cfg.combiner_width
        self.goal_tower.init_params(rng)
        self.param_tower.init_params(rng)
        _init_mlp(self.store, "combiner", [3 * k, w, w, w], rng)
        self.store.add("head_logit/w", uniform_init(rng, (w, 1), w))
        self.store.add("head_logit/b", np.zeros(1))

    def logits_on_tape(self, tape: Tape, goal_rows: Tensor, param_rows: Tensor) -> Tensor:
        x = _pair_features(tape, goal_rows, param_rows)
        h = _mlp_relu(tape, self.store, "combiner", x, 3)
        return tape.reshape(_linear(tape, self.store, "head_logit", h), (x.shape[0],))

    def embed_goal(self, graph: FormulaGraph) -> Embedding:
        vec = self.goal_tower.embed_on_tape(Tape(), graph)
        return Embedding(SPACE_SUCCESS, vec.data.copy())

    def embed_param(self, graph: FormulaGraph) -> Embedding:
        vec = self.param_tower.embed_on_tape(Tape(), graph)
        return Embedding(SPACE_SUCCESS, vec.data.copy())

    def score(self, goal: Embedding, param: Embedding) -> float:
        """Success logit for one pair; the goal must live in this model's space."""
        goal.require(SPACE_SUCCESS)
        tape = Tape()
        g = Tensor(goal.vec.reshape(1, -1))
        p = Tensor(param.vec.reshape(1, -1))
        return self.logits_on_tape(tape, g, p).item()

    def score_matrix(self, goal_vecs: np.ndarray, param_vecs: np.ndarray) -> np.ndarray:
        """(n_goals, n_params) logits for the full cross product."""
        n_g, n_p = goal_vecs.shape[0], param_vecs.shape[0]
        tape = Tape()
        gi = np.repeat(np.arange(n_g), n_p)
        pi = np.tile(np.arange(n_p), n_g)
        logits = self.logits_on_tape(
            tape,
            tape.gather_rows(Tensor(goal_vecs), gi),
            tape.gather_rows(Tensor(param_vecs), pi),
        )
        return logits.data.reshape(n_g, n_p).copy()


class OutcomeModel:
    """Predicts rewrite success plus the success-space embedding of the result."""

    space = SPACE_OUTCOME

    def __init__(self, cfg: OutcomeModelConfig):
        self.cfg = cfg
        self.store = ParamStore()
        self.goal_tower = Tower(self.store, "goal", cfg.tower, SPACE_OUTCOME)
        self.param_tower = Tower(self.store, "param", cfg.tower, SPACE_OUTCOME)
        self.result_head_calls = 0

    def init_params(self, rng: np.random.Generator) -> None:
        k = self.cfg.tower.embed_dim
        w = self.cfg.combiner_width
        self.goal_tower.init_params(rng)
        self.param_tower.init_params(rng)
        _init_mlp(self.store, "combiner", [3 * k, w, w, w], rng)
        self.store.add("head_logit/w", uniform_init(rng, (w, 1), w))
        self.store.add("head_logit/b", np.zeros(1))
        self.store.add("head_result/w", uniform_init(rng, (w, k), w))
        self.store.add("head_result/b", np.zeros(k))

    def forward_on_tape(
        self, tape: Tape, goal_rows: Tensor, param_rows: Tensor
    ) -> tuple[Tensor, Tensor]:
        x = _pair_features(tape, goal_rows, param_rows)
        h = _mlp_relu(tape, self.store, "combiner", x, 3)
        logits = tape.reshape(_linear(tape, self.store, "head_logit", h), (x.shape[0],))
        preds = _linear(tape, self.store, "head_result", h)
        return logits, preds

    def embed_goal(self, graph: FormulaGraph) -> Embedding:
        vec = self.goal_tower.embed_on_tape(Tape(), graph)
        return Embedding(SPACE_OUTCOME, vec.data.copy())

    def embed_param(self, graph: FormulaGraph) -> Embedding:
        vec = self.param_tower.embed_on_tape(Tape(), graph)
        return Embedding(SPACE_OUTCOME, vec.data.copy())

    def predict(self, goal: Embedding, param: Embedding) -> tuple[float, Embedding]:
        """(success logit, predicted result embedding in the success space)."""
        goal.require(SPACE_OUTCOME)
        self.result_head_calls += 1
        tape = Tape()
        g = Tensor(goal.vec.reshape(1, -1))
        p = Tensor(param.vec.reshape(1, -1))
        logits, preds = self.forward_on_tape(tape, g, p)
        return logits.item(), Embedding(SPACE_SUCCESS, preds.data[0].copy())


class AlignModel:
    """Two-layer perceptron mapping success-space vectors to outcome space."""

    def __init__(self, cfg: AlignModelConfig):
        self.cfg = cfg
        self.store = ParamStore()
        self.translate_calls = 0

    def init_params(self, rng: np.random.Generator) -> None:
        k = self.cfg.embed_dim
        self.store.add("align/w0", uniform_init(rng, (k, 2 * k), k))
        self.store.add("align/b0", np.zeros(2 * k))
        self.store.add("align/w1", uniform_init(rng, (2 * k, k), 2 * k))
        self.store.add("align/b1", np.zeros(k))

    def rows_on_tape(self, tape: Tape, x: Tensor) -> Tensor:
        h = tape.relu(tape.add_bias(tape.matmul(x, self.store["align/w0"]), self.store["align/b0"]))
        return tape.add_bias(tape.matmul(h, self.store["align/w1"]), self.store["align/b1"])

    def translate(self, v: Embedding) -> Embedding:
        v.require(SPACE_SUCCESS)
        self.translate_calls += 1
        out = self.rows_on_tape(Tape(), Tensor(v.vec.reshape(1, -1)))
        return Embedding(SPACE_OUTCOME, out.data[0].copy())


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def bce_from_logits(tape: Tape, logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean binary cross-entropy; equals softplus(x) - x*y elementwise."""
    if logits.shape != labels.shape:
        raise ValueError(f"logits {logits.shape} vs labels {labels.shape}")
    y = Tensor(labels)
    per = tape.sub(tape.softplus(logits), tape.elementwise_mul(logits, y))
    return tape.scale(tape.reduce_sum(per), 1.0 / labels.size)


def sigma_loss(tape: Tape, logits: Tensor, labels: np.ndarray) -> Tensor:
    return bce_from_logits(tape, logits, labels)


def omega_loss(
    tape: Tape,
    logits: Tensor,
    labels: np.ndarray,
    preds: Tensor,
    targets: np.ndarray,
    positive_rows: np.ndarray,
    lam: float = 1.0,
) -> Tensor:
    """BCE plus lam * mean squared result-embedding error over the positives.

    `targets` holds one true result embedding per entry of `positive_rows`
    (rows of `preds` belonging to positive examples).
    """
    if len(positive_rows) != len(targets):
        raise ValueError(f"{len(positive_rows)} positive rows vs {len(targets)} targets")
    loss = bce_from_logits(tape, logits, labels)
    if len(positive_rows) == 0:
        return loss
    pos_preds = tape.gather_rows(preds, positive_rows)
    diff = tape.sub(pos_preds, Tensor(targets))
    sq = tape.scale(tape.reduce_sum(tape.square(diff)), 1.0 / len(positive_rows))
    return tape.add(loss, tape.scale(sq, lam))


def align_loss(tape: Tape, outputs: Tensor, targets: np.ndarray) -> Tensor:
    """Mean squared distance between translated and true outcome-space rows."""
    diff = tape.sub(outputs, Tensor(targets))
    return tape.scale(tape.reduce_sum(tape.square(diff)), 1.0 / targets.shape[0])
