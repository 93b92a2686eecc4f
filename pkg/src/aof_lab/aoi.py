"""Age-of-information bookkeeping over discrete slots.

Ages are derived from per-source generation/delivery event lists: the age of
source ``l`` at slot ``t`` is ``t`` minus the creation slot of the freshest
feature delivered by ``t``.  Slots before the first delivery carry a
sentinel and must be trimmed before any aggregation.

Stochastic ordering of age vectors is decided by monotone-coupling
feasibility (a max-flow problem): mass of the smaller distribution must be
transportable to the larger one along componentwise-dominating edges.  On
failure the minimum cut yields a violating upper set as a certificate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import AofLabError, IncompatibleSpaceError, WarmupError
from .spaces import NORMALIZATION_ATOL, Pmf

SENTINEL = -1

FLOW_ATOL = 1e-9


@dataclass(frozen=True)
class DeliveryTrace:
    """Per-source lists of (generation slot, delivery slot) pairs."""

    events: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        events = tuple(tuple((int(g), int(d)) for g, d in src) for src in self.events)
        if not events:
            raise AofLabError("trace needs at least one source")
        for l, src in enumerate(events):
            last_g = None
            for g, d in src:
                if g > d:
                    raise AofLabError(f"source {l + 1}: generation {g} after delivery {d}")
                if last_g is not None and g < last_g:
                    raise AofLabError(f"source {l + 1}: generation slots must be nondecreasing")
                last_g = g
        object.__setattr__(self, "events", events)

    @property
    def m(self) -> int:
        return len(self.events)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source_id", "G", "D"])
            for l, src in enumerate(self.events, start=1):
                for g, d in src:
                    writer.writerow([l, g, d])

    @classmethod
    def from_csv(cls, path) -> "DeliveryTrace":
        per_source: dict[int, list[tuple[int, int]]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                per_source.setdefault(int(row["source_id"]), []).append(
                    (int(row["G"]), int(row["D"]))
                )
        if not per_source:
            raise AofLabError("empty delivery trace")
        sources = [per_source[k] for k in sorted(per_source)]
        return cls(tuple(tuple(src) for src in sources))


@dataclass(frozen=True, eq=False)
class AgeProcess:
    """Per-source age sample paths; SENTINEL marks pre-first-delivery slots."""

    ages: np.ndarray  # (m, horizon) int

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=np.int64)
        if ages.ndim != 2 or ages.shape[1] == 0:
            raise AofLabError("ages must be a (sources, horizon) array")
        ages.setflags(write=False)
        object.__setattr__(self, "ages", ages)

    @property
    def m(self) -> int:
        return self.ages.shape[0]

    @property
    def horizon(self) -> int:
        return self.ages.shape[1]

    def has_sentinel(self, start: int = 0, stop: int | None = None) -> bool:
        return bool(np.any(self.ages[:, start:stop] == SENTINEL))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"age_{l}" for l in range(1, self.m + 1)])
            for t in range(self.horizon):
                row = [t]
                for l in range(self.m):
                    a = int(self.ages[l, t])
                    row.append("" if a == SENTINEL else a)
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "AgeProcess":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            m = len(header) - 1
            for row in reader:
                rows.append([SENTINEL if cell == "" else int(cell) for cell in row[1:]])
        return cls(np.asarray(rows, dtype=np.int64).T.reshape(m, -1))


def age_process(trace: DeliveryTrace, horizon: int) -> AgeProcess:
    """Evaluate the age of every source at every slot in [0, horizon)."""
    if horizon <= 0:
        raise AofLabError("horizon must be positive")
    ages = np.full((trace.m, horizon), SENTINEL, dtype=np.int64)
    for l, src in enumerate(trace.events):
        if not src:
            continue
        by_delivery = sorted(src, key=lambda gd: gd[1])
        deliveries = np.array([d for _, d in by_delivery])
        freshest = np.maximum.accumulate(np.array([g for g, _ in by_delivery]))
        for t in range(horizon):
            k = int(np.searchsorted(deliveries, t, side="right"))
            if k > 0:
                ages[l, t] = t - freshest[k - 1]
    return AgeProcess(ages)


@dataclass(frozen=True, eq=False)
class AgeDistribution:
    """Finite distribution over age vectors."""

    vectors: tuple[tuple[int, ...], ...]
    probs: np.ndarray

    def __post_init__(self):
        vectors = tuple(tuple(int(v) for v in vec) for vec in self.vectors)
        if not vectors:
            raise AofLabError("age distribution needs support points")
        m = len(vectors[0])
        if any(len(vec) != m for vec in vectors):
            raise AofLabError("age vectors have inconsistent dimension")
        if any(v < 0 for vec in vectors for v in vec):
            raise AofLabError("age components must be nonnegative")
        if len(set(vectors)) != len(vectors):
            raise AofLabError("age vectors must be distinct")
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(vectors),):
            raise AofLabError("probs length must match support size")
        if np.any(probs < 0) or abs(float(probs.sum()) - 1.0) > NORMALIZATION_ATOL:
            raise AofLabError("age probabilities must be nonnegative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "probs", probs)

    @property
    def m(self) -> int:
        return len(self.vectors[0])

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[int, ...], float]) -> "AgeDistribution":
        vecs = tuple(mapping.keys())
        return cls(vecs, np.array([mapping[v] for v in vecs], dtype=float))

    @classmethod
    def point_mass(cls, vector: Sequence[int]) -> "AgeDistribution":
        return cls((tuple(vector),), np.array([1.0]))

    @classmethod
    def uniform(cls, vectors: Iterable[Sequence[int]]) -> "AgeDistribution":
        vecs = tuple(tuple(v) for v in vectors)
        return cls(vecs, np.full(len(vecs), 1.0 / len(vecs)))

    def component_pmf(self, l: int) -> Pmf:
        """Marginal distribution of component ``l`` (0-based) as an integer Pmf."""
        values: dict[int, float] = {}
        for vec, p in zip(self.vectors, self.probs):
            values[vec[l]] = values.get(vec[l], 0.0) + float(p)
        from .spaces import OutcomeSpace

        space = OutcomeSpace(tuple(sorted(values)))
        return Pmf(space, np.array([values[v] for v in space.labels]))

    def to_json_dict(self) -> dict:
        return {
            "vectors": [list(v) for v in self.vectors],
            "probs": [float(p) for p in self.probs],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AgeDistribution":
        return cls(tuple(tuple(v) for v in data["vectors"]), np.asarray(data["probs"], dtype=float))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "AgeDistribution":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def empirical_age_distribution(
    ages: AgeProcess, start: int = 0, stop: int | None = None
) -> AgeDistribution:
    """Relative frequency of observed age vectors over [start, stop)."""
    window = ages.ages[:, start:stop]
    if window.shape[1] == 0:
        raise AofLabError("empty aggregation window")
    if np.any(window == SENTINEL):
        raise WarmupError(
            "warm-up not trimmed: sentinel ages inside the aggregation window "
            f"(first delivery has not happened by slot {start})"
        )
    counts: dict[tuple[int, ...], int] = {}
    for t in range(window.shape[1]):
        vec = tuple(int(v) for v in window[:, t])
        counts[vec] = counts.get(vec, 0) + 1
    total = window.shape[1]
    vecs = tuple(sorted(counts))
    return AgeDistribution(vecs, np.array([counts[v] / total for v in vecs]))


def sample_path_dominates(a: AgeProcess, b: AgeProcess) -> bool:
    """True iff every component of ``a`` is at most ``b`` at every slot."""
    if a.ages.shape != b.ages.shape:
        raise IncompatibleSpaceError(f"shape mismatch: {a.ages.shape} vs {b.ages.shape}")
    if a.has_sentinel() or b.has_sentinel():
        raise WarmupError("warm-up not trimmed: sentinel ages present")
    return bool(np.all(a.ages <= b.ages))


def stochastic_order_univariate(p: Pmf, q: Pmf) -> bool:
    """True iff P(X > x) <= P(Z > x) at every threshold."""
    for pm in (p, q):
        if not pm.space.is_numeric:
            raise IncompatibleSpaceError("stochastic order needs numeric supports")
    points = sorted(
        {lab for lab, pr in zip(p.space.labels, p.probs) if pr > 0}
        | {lab for lab, pr in zip(q.space.labels, q.probs) if pr > 0}
    )
    for x in points:
        tail_p = sum(pr for lab, pr in zip(p.space.labels, p.probs) if lab > x)
        tail_q = sum(pr for lab, pr in zip(q.space.labels, q.probs) if lab > x)
        if tail_p > tail_q + FLOW_ATOL:
            return False
    return True


@dataclass(frozen=True)
class UpperSetWitness:
    """An upper set violating the ordering: mass under the allegedly smaller
    distribution exceeds mass under the larger one."""

    generators: tuple[tuple[int, ...], ...]
    p_mass: float
    q_mass: float

    def contains(self, vector: Sequence[int]) -> bool:
        vec = tuple(vector)
        return any(all(v >= g for v, g in zip(vec, gen)) for gen in self.generators)

    def to_json_dict(self) -> dict:
        return {
            "generators": [list(g) for g in self.generators],
            "p_mass": self.p_mass,
            "q_mass": self.q_mass,
        }


@dataclass(frozen=True)
class OrderingVerdict:
    holds: bool
    witness: UpperSetWitness | None = None

    def to_json_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_json_dict(),
        }


def _dominates(x: tuple[int, ...], z: tuple[int, ...]) -> bool:
    return all(a <= b for a, b in zip(x, z))


def stochastic_order_multivariate(p: AgeDistribution, q: AgeDistribution) -> OrderingVerdict:
    """Decide multivariate stochastic dominance by coupling feasibility.

    ``p`` is stochastically smaller than ``q`` iff a transport plan moves all
    of ``p``'s mass to ``q`` using only componentwise-increasing edges; this
    max-flow check is equivalent to comparing the two laws on every upper
    set.  On failure the minimum cut produces a violating upper set.
    """
    if p.m != q.m:
        raise IncompatibleSpaceError(f"component count mismatch: {p.m} vs {q.m}")
    graph = nx.DiGraph()
    for i, (vec, pr) in enumerate(zip(p.vectors, p.probs)):
        graph.add_edge("s", ("p", i), capacity=float(pr))
        for j, zvec in enumerate(q.vectors):
            if _dominates(vec, zvec):
                graph.add_edge(("p", i), ("q", j), capacity=2.0)
    for j, (zvec, qr) in enumerate(zip(q.vectors, q.probs)):
        graph.add_edge(("q", j), "t", capacity=float(qr))
    if not graph.has_node("s") or not graph.has_node("t"):
        raise AofLabError("degenerate supports")
    flow_value, _ = nx.maximum_flow(graph, "s", "t")
    if flow_value >= 1.0 - FLOW_ATOL:
        return OrderingVerdict(holds=True)
    _, (s_side, _) = nx.minimum_cut(graph, "s", "t")
    generators = [p.vectors[i] for kind, i in (n for n in s_side if n != "s") if kind == "p"]
    minimal = [
        g for g in generators if not any(other != g and _dominates(other, g) for other in generators)
    ]
    witness_gen = tuple(sorted(set(minimal)))
    p_mass = sum(
        float(pr)
        for vec, pr in zip(p.vectors, p.probs)
        if any(_dominates(g, vec) for g in witness_gen)
    )
    q_mass = sum(
        float(qr)
        for vec, qr in zip(q.vectors, q.probs)
        if any(_dominates(g, vec) for g in witness_gen)
    )
    return OrderingVerdict(
        holds=False,
        witness=UpperSetWitness(generators=witness_gen, p_mass=p_mass, q_mass=q_mass),
    )
