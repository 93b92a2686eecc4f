"""Independent brute-force oracles used to pin expected values in tests.

Everything here is deliberately written as plain loops over cells, separate
from the vectorized production code paths.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from aof_lab import JointPmf, Pmf, bayes_action, expected_loss


def enumerate_decision_rules(joint: JointPmf, target: str, given, loss) -> float:
    """Minimize expected loss over decision functions by full enumeration.

    The action space must be finite (finite-table or zero-one losses).  This
    checks the interchange of sum and min that justifies per-cell training.
    """
    given = [n for n in joint.names if n in set(given)]
    sub = joint.arrange([*given, target])
    y_space = joint.space(target)
    rows = sub.probs.reshape(-1, len(y_space))
    if loss.kind == "zero-one":
        actions = list(y_space.labels)

        def cell_loss(row, a):
            return row.sum() - row[y_space.index(a)]

    else:
        actions = list(loss.actions)
        table = loss.aligned_table(y_space)

        def cell_loss(row, a):
            return float(row @ table[:, actions.index(a)])

    best = math.inf
    for rule in itertools.product(actions, repeat=rows.shape[0]):
        total = sum(cell_loss(rows[i], a) for i, a in enumerate(rule))
        best = min(best, total)
    return best


def per_cell_bayes_search(joint: JointPmf, target: str, given, loss, extra_actions=()) -> float:
    """Per-cell exhaustive search over a finite candidate action set.

    Candidates are the closed-form optimum of every conditioning cell plus
    any decoys supplied; the weighted per-cell minima sum to the minimum
    training loss whenever the true optimum is in the candidate set.
    """
    given = [n for n in joint.names if n in set(given)]
    y_space = joint.space(target)
    sub = joint.arrange([*given, target])
    rows = sub.probs.reshape(-1, len(y_space))
    candidates = list(extra_actions)
    for row in rows:
        w = row.sum()
        if w <= 0:
            continue
        cond = Pmf(y_space, row / w)
        candidates.append(bayes_action(cond, loss).action)
    total = 0.0
    for row in rows:
        w = row.sum()
        if w <= 0:
            continue
        cond = Pmf(y_space, row / w)
        best = math.inf
        for action in candidates:
            try:
                best = min(best, expected_loss(cond, action, loss))
            except Exception:
                continue
        total += w * best
    return total


def shannon_mi_direct(joint: JointPmf, target: str, features) -> float:
    """Mutual information via the direct sum p log(p / (p_x p_y)), in nats."""
    features = [n for n in joint.names if n in set(features)]
    pxy = joint.arrange([*features, target])
    y_space = joint.space(target)
    rows = pxy.probs.reshape(-1, len(y_space))
    px = rows.sum(axis=1)
    py = rows.sum(axis=0)
    total = 0.0
    for i in range(rows.shape[0]):
        for j in range(rows.shape[1]):
            p = rows[i, j]
            if p > 0:
                total += p * math.log(p / (px[i] * py[j]))
    return total


def expected_conditional_variance(joint: JointPmf, target: str, given) -> float:
    """E[Var(Y | X)] by looping over conditioning cells."""
    given = [n for n in joint.names if n in set(given)]
    y_space = joint.space(target)
    levels = np.asarray(y_space.labels, dtype=float)
    sub = joint.arrange([*given, target])
    rows = sub.probs.reshape(-1, len(y_space))
    total = 0.0
    for row in rows:
        w = row.sum()
        if w <= 0:
            continue
        q = row / w
        mu = float(q @ levels)
        total += w * float(q @ (levels - mu) ** 2)
    return total


def chi2_mc(p: Pmf, q: Pmf, n: int, seed: int) -> float:
    """Importance-sampled chi-squared divergence: E_q[(p/q - 1)^2]."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(q.space), size=n, p=q.probs)
    ratio = p.probs[idx] / q.probs[idx]
    return float(((ratio - 1.0) ** 2).mean())


def chi2_cmi_direct(joint: JointPmf, target: str, future, given) -> float:
    """Literal triple sum of (P - P(y|x)P(z|x)P(x))^2 / reference."""
    future = [n for n in joint.names if n in set(future)]
    given = [n for n in joint.names if n in set(given)]
    sub = joint.arrange([*given, target, *future])
    ny = len(joint.space(target))
    nz = int(np.prod([len(joint.space(n)) for n in future]))
    cube = sub.probs.reshape(-1, ny, nz)
    total = 0.0
    for x in range(cube.shape[0]):
        w = cube[x].sum()
        if w <= 0:
            continue
        for y in range(ny):
            py = cube[x, y, :].sum() / w
            for z in range(nz):
                pz = cube[x, :, z].sum() / w
                ref = py * pz * w
                if ref > 0:
                    total += (cube[x, y, z] - ref) ** 2 / ref
    return total


def upclosed_subsets(points):
    """All up-closed subsets of a finite set of integer vectors."""
    points = list(points)
    subsets = []
    for mask in range(1 << len(points)):
        chosen = [points[i] for i in range(len(points)) if mask >> i & 1]
        ok = True
        for c in chosen:
            for other in points:
                if all(o >= ci for o, ci in zip(other, c)) and other not in chosen:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            subsets.append(chosen)
    return subsets


def stochastic_order_upper_sets(p, q, atol=1e-9) -> bool:
    """Multivariate stochastic order by exhaustive upper-set comparison."""
    support = sorted(set(p.vectors) | set(q.vectors))
    mass_p = dict(zip(p.vectors, p.probs))
    mass_q = dict(zip(q.vectors, q.probs))
    for subset in upclosed_subsets(support):
        in_set = set(subset)
        pm = sum(mass_p.get(v, 0.0) for v in in_set)
        qm = sum(mass_q.get(v, 0.0) for v in in_set)
        if pm > qm + atol:
            return False
    return True


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])


def random_pmf(rng, space, floor=0.0) -> Pmf:
    raw = rng.random(len(space)) + floor
    return Pmf(space, raw / raw.sum())


def random_joint(rng, variables, floor=0.0) -> JointPmf:
    shape = tuple(len(s) for _, s in variables)
    raw = rng.random(shape) + floor
    return JointPmf(tuple(variables), raw / raw.sum())
