"""Chi-squared divergence machinery.

Neyman's chi-squared divergence ``sum (P - Q)^2 / Q`` measures two kinds of
closeness in this package: the Markov-deviation coefficient of a process
(via the chi-squared conditional mutual information maximized over a lag
grid) and the train/test mismatch radius ``beta``.

Cells where both the compared law and the reference vanish contribute zero.
The conditional mutual information always uses the product reference
``P(y|x) P(z|x) P(x)``, which dominates the triple law, so degenerate
(deterministic) conditionals are handled exactly rather than rejected.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import IncompatibleSpaceError, PositivityError, ReferenceNotInteriorError
from .spaces import JointPmf, Pmf

if TYPE_CHECKING:  # pragma: no cover
    from .laws import LawProvider


def _aligned_arrays(p, q):
    if isinstance(p, Pmf) and isinstance(q, Pmf):
        if p.space.labels != q.space.labels:
            raise IncompatibleSpaceError("pmfs live on different spaces")
        return p.probs, q.probs, lambda i: p.space.labels[i]
    if isinstance(p, JointPmf) and isinstance(q, JointPmf):
        if p.names != q.names:
            raise IncompatibleSpaceError(f"variable mismatch: {p.names} vs {q.names}")
        for (n, sa), (_, sb) in zip(p.variables, q.variables):
            if sa.labels != sb.labels:
                raise IncompatibleSpaceError(f"space mismatch on variable {n!r}")
        return p.probs.ravel(), q.probs.ravel(), p.cell_label
    raise IncompatibleSpaceError("chi2_divergence needs two Pmfs or two JointPmfs of the same shape")


def chi2_divergence(p, q) -> float:
    """Neyman's chi-squared divergence of ``p`` from the reference ``q``.

    Zero iff ``p == q``.  The reference must be positive wherever ``p`` has
    mass; otherwise the divergence is infinite and
    :class:`ReferenceNotInteriorError` is raised with the offending cells.
    """
    pa, qa, label = _aligned_arrays(p, q)
    bad = (pa > 0.0) & (qa == 0.0)
    if np.any(bad):
        cells = [label(int(i)) for i in np.flatnonzero(bad)]
        raise ReferenceNotInteriorError(f"reference not interior: zero mass at {cells}", cells)
    pos = qa > 0.0
    d = pa[pos] - qa[pos]
    return float((d * d / qa[pos]).sum())


def chi2_conditional_mi(
    joint: JointPmf, target: str, future: Iterable[str], given: Iterable[str]
) -> float:
    """Chi-squared conditional mutual information of target and future given X.

    Computed as the chi-squared divergence of the triple law from the product
    reference ``P(y|x) P(z|x) P(x)``.  Zero iff the target and the future
    block are conditionally independent given the conditioning block.
    """
    future = list(dict.fromkeys(future))
    given = list(dict.fromkeys(given))
    overlap = set(future) & set(given)
    if overlap:
        raise IncompatibleSpaceError(f"future and given sets overlap: {sorted(overlap)}")
    if target in future or target in given:
        raise IncompatibleSpaceError("target cannot appear among the lagged blocks")
    sub = joint.arrange([*given, target, *future])
    n_y = len(joint.space(target))
    n_z = int(np.prod([len(joint.space(n)) for n in future], dtype=np.int64))
    n_x = sub.probs.size // (n_y * n_z)
    cube = sub.probs.reshape(n_x, n_y, n_z)
    total = 0.0
    for x in range(n_x):
        slab = cube[x]
        w = slab.sum()
        if w <= 0.0:
            continue
        py = slab.sum(axis=1)
        pz = slab.sum(axis=0)
        ref = np.outer(py, pz) / w
        pos = ref > 0.0
        stray = slab[~pos]
        if np.any(stray > 1e-15):
            raise PositivityError(
                "positivity violated: triple mass on a zero product-reference cell",
                [int(x)],
            )
        d = slab[pos] - ref[pos]
        total += float((d * d / ref[pos]).sum())
    return total


@dataclass(frozen=True)
class EpsilonReport:
    """Markov-deviation coefficient over a capped lag grid.

    ``epsilon`` is the square root of the largest chi-squared conditional
    mutual information found on the grid; because the grid is capped it is a
    certified lower bound on the uncapped supremum.  ``grid`` retains every
    evaluated (tau, mu, value) triple for audit.
    """

    epsilon: float
    argmax_tau: tuple[int, ...]
    argmax_mu: tuple[int, ...]
    tau_max: int
    mu_max: int
    grid: tuple[tuple[tuple[int, ...], tuple[int, ...], float], ...]

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "tau_max": self.tau_max,
            "mu_max": self.mu_max,
            "argmax_tau": list(self.argmax_tau),
            "argmax_mu": list(self.argmax_mu),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)


def epsilon_coefficient(laws: "LawProvider", tau_max: int = 8, mu_max: int = 8) -> EpsilonReport:
    """Maximize the chi-squared conditional MI over the capped lag grid.

    For every tau vector in [0, tau_max]^m and mu vector in [0, mu_max]^m
    with mu not identically zero, evaluates the triple (target now, features
    at lags tau, features at lags tau + mu).  Ties in the maximum go to the
    lexicographically smallest (tau, mu) pair, so the result is independent
    of evaluation order.
    """
    if tau_max < 0 or mu_max < 0:
        raise IncompatibleSpaceError("lag caps must be nonnegative")
    m = laws.m
    best = -1.0
    best_pair = None
    grid_values = []
    for tau in itertools.product(range(tau_max + 1), repeat=m):
        for mu in itertools.product(range(mu_max + 1), repeat=m):
            if all(u == 0 for u in mu):
                continue
            requests = [("y", 0)]
            x_names = []
            z_names = []
            for l in range(m):
                var = f"x{l + 1}"
                requests.append((var, tau[l]))
                x_names.append(f"{var}@{tau[l]}")
                z_lag = tau[l] + mu[l]
                requests.append((var, z_lag))
                z_names.append(f"{var}@{z_lag}")
            law = laws.window_law(requests)
            future = [n for n in dict.fromkeys(z_names) if n not in set(x_names)]
            value = chi2_conditional_mi(law.law, "y@0", future, list(dict.fromkeys(x_names)))
            grid_values.append((tau, mu, value))
            if value > best:
                best = value
                best_pair = (tau, mu)
    if best_pair is None:
        raise IncompatibleSpaceError("empty lag grid: mu_max must allow a nonzero lag")
    return EpsilonReport(
        epsilon=float(np.sqrt(max(best, 0.0))),
        argmax_tau=best_pair[0],
        argmax_mu=best_pair[1],
        tau_max=tau_max,
        mu_max=mu_max,
        grid=tuple(grid_values),
    )


@dataclass(frozen=True)
class BetaReport:
    """Chi-squared neighborhood radius between two laws."""

    beta: float
    divergence: float

    def to_json_dict(self) -> dict:
        return {"beta": self.beta, "divergence": self.divergence}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)


def beta_between(train: JointPmf, test: JointPmf) -> BetaReport:
    """Radius of the smallest chi-squared ball around the train law
    containing the test law; the train law is the reference."""
    d = chi2_divergence(test, train)
    return BetaReport(beta=float(np.sqrt(d)), divergence=float(d))
