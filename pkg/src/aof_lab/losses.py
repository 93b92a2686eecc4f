"""Loss functions, Bayes actions, and generalized entropy.

A loss specification pairs a per-outcome loss ``L(y, a)`` with its action
space.  The generalized entropy of a distribution is the minimum expected
loss over that action space, attained by the Bayes action:

* logarithmic  — actions are pmfs, ``L(y, q) = -ln q(y)``; the Bayes action
  is the distribution itself and the entropy is Shannon entropy (nats).
* quadratic    — actions are reals, ``L(y, a) = (y - a)^2``; Bayes action is
  the mean and the entropy is the variance (numeric outcomes only).
* zero-one     — actions are labels, ``L(y, a) = 1[y != a]``; Bayes action is
  the mode and the entropy is one minus the top probability.
* finite-table — an explicit action list with a loss table; the Bayes action
  is found by exhaustive search.

Ties are always broken by the first label/action in the fixed ordering, so
repeated calls on identical inputs return identical actions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import xlogy

from .errors import IncompatibleSpaceError, UnboundedCrossEntropyError
from .spaces import OutcomeSpace, Pmf

LOGARITHMIC = "logarithmic"
QUADRATIC = "quadratic"
ZERO_ONE = "zero-one"
FINITE_TABLE = "finite-table"


@dataclass(frozen=True, eq=False)
class LossSpec:
    """A loss function plus its action space."""

    kind: str
    outcomes: tuple | None = None  # finite-table: labels indexing table rows
    actions: tuple | None = None   # finite-table: action labels (columns)
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (LOGARITHMIC, QUADRATIC, ZERO_ONE, FINITE_TABLE):
            raise IncompatibleSpaceError(f"unknown loss kind {self.kind!r}")
        if self.kind == FINITE_TABLE:
            if self.outcomes is None or self.actions is None or self.table is None:
                raise IncompatibleSpaceError("finite-table loss needs outcomes, actions, table")
            table = np.asarray(self.table, dtype=float)
            if table.shape != (len(self.outcomes), len(self.actions)):
                raise IncompatibleSpaceError(
                    f"table shape {table.shape} does not match "
                    f"{len(self.outcomes)} outcomes x {len(self.actions)} actions"
                )
            if not np.all(np.isfinite(table)):
                raise IncompatibleSpaceError("finite-table losses must be finite")
            table.setflags(write=False)
            object.__setattr__(self, "outcomes", tuple(self.outcomes))
            object.__setattr__(self, "actions", tuple(self.actions))
            object.__setattr__(self, "table", table)

    def aligned_table(self, space: OutcomeSpace) -> np.ndarray:
        """Loss table with rows reordered to match ``space.labels``."""
        rows = [self.outcomes.index(lab) if lab in self.outcomes else -1 for lab in space.labels]
        if any(r < 0 for r in rows):
            missing = [lab for lab, r in zip(space.labels, rows) if r < 0]
            raise IncompatibleSpaceError(f"loss table missing outcomes {missing}")
        return self.table[rows, :]

    def check_space(self, space: OutcomeSpace) -> None:
        if self.kind == QUADRATIC and not space.is_numeric:
            raise IncompatibleSpaceError("quadratic loss needs a numeric outcome space")
        if self.kind == FINITE_TABLE:
            self.aligned_table(space)


def log_loss() -> LossSpec:
    return LossSpec(LOGARITHMIC)


def quadratic_loss() -> LossSpec:
    return LossSpec(QUADRATIC)


def zero_one_loss() -> LossSpec:
    return LossSpec(ZERO_ONE)


def table_loss(outcomes: Sequence, actions: Sequence, table) -> LossSpec:
    return LossSpec(FINITE_TABLE, tuple(outcomes), tuple(actions), np.asarray(table, dtype=float))


@dataclass(frozen=True, eq=False)
class BayesResult:
    """Minimizing action and its expected loss."""

    action: Any
    value: float


def bayes_action(p: Pmf, loss: LossSpec) -> BayesResult:
    """Minimize expected loss under ``p`` over the loss's action space."""
    loss.check_space(p.space)
    if loss.kind == LOGARITHMIC:
        value = -float(xlogy(p.probs, p.probs).sum())
        return BayesResult(p, value)
    if loss.kind == QUADRATIC:
        v = p.space.levels()
        mu = float(p.probs @ v)
        return BayesResult(mu, float(p.probs @ (v - mu) ** 2))
    if loss.kind == ZERO_ONE:
        i = int(np.argmax(p.probs))
        return BayesResult(p.space.labels[i], float(1.0 - p.probs[i]))
    table = loss.aligned_table(p.space)
    expected = p.probs @ table
    j = int(np.argmin(expected))
    return BayesResult(loss.actions[j], float(expected[j]))


def entropy(p: Pmf, loss: LossSpec) -> float:
    """Generalized entropy: the Bayes-optimal expected loss under ``p``."""
    return bayes_action(p, loss).value


def expected_loss(p: Pmf, action, loss: LossSpec) -> float:
    """Expected loss of a fixed action under ``p``.

    For logarithmic loss the action is a :class:`Pmf` on the same space; zero
    action probability on the support of ``p`` raises
    :class:`UnboundedCrossEntropyError`.
    """
    loss.check_space(p.space)
    if loss.kind == LOGARITHMIC:
        if not isinstance(action, Pmf):
            raise IncompatibleSpaceError("logarithmic actions are pmfs")
        if action.space.labels != p.space.labels:
            raise IncompatibleSpaceError("action pmf lives on a different space")
        bad = (p.probs > 0.0) & (action.probs == 0.0)
        if np.any(bad):
            cells = [p.space.labels[i] for i in np.flatnonzero(bad)]
            raise UnboundedCrossEntropyError(
                f"zero action probability on supported outcomes {cells}", cells
            )
        return -float(xlogy(p.probs, action.probs).sum())
    if loss.kind == QUADRATIC:
        v = p.space.levels()
        return float(p.probs @ (v - float(action)) ** 2)
    if loss.kind == ZERO_ONE:
        return float(1.0 - p.prob(action))
    table = loss.aligned_table(p.space)
    j = loss.actions.index(action)
    return float(p.probs @ table[:, j])
