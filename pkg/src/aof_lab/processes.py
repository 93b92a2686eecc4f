"""Stationary hidden-state process models with exactly computable window laws.

A model is a finite irreducible aperiodic state chain plus per-source
emission kernels, a target kernel, a feature window length ``b``, and a
feature processing delay.  The feature of source ``l`` at slot ``t`` is the
tuple of its last ``b`` emissions ending at ``t - delay`` (newest first); a
window length of one keeps the bare symbol.

``exact_window_law`` produces the exact joint distribution of any set of
lagged features and targets.  It scans the needed slot range once, carrying
a table over (accumulated observed variables, current state): the chain is
collapsed on the fly, so cost grows with the size of the answer rather than
with the number of state paths.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import AofLabError, IncompatibleSpaceError, NotNormalizedError, SpanCapError
from .ingest import Dataset
from .laws import (
    LawProvider,
    MixtureLawProvider,
    Request,
    WindowLaw,
    canonical_requests,
    check_compatible,
    source_index,
    variable_name,
)
from .spaces import JointPmf, OutcomeSpace

DEFAULT_SPAN_CAP = 16
DEFAULT_MAX_CELLS = 4_000_000

STATIONARY_ATOL = 1e-12


def _stationary_distribution(transition: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eig(transition.T)
    k = int(np.argmin(np.abs(values - 1.0)))
    pi = np.real(vectors[:, k])
    pi = np.abs(pi)
    pi = pi / pi.sum()
    # polish with a few power steps to push the residual to float precision
    for _ in range(200):
        nxt = pi @ transition
        if np.abs(nxt - pi).sum() < 1e-16:
            pi = nxt
            break
        pi = nxt
    return pi


def _is_primitive(transition: np.ndarray) -> bool:
    n = transition.shape[0]
    reach = transition > 0
    power = np.eye(n, dtype=bool) | reach
    # Wielandt bound: a primitive matrix has a strictly positive power by
    # exponent (n-1)^2 + 1
    target = (n - 1) ** 2 + 1
    acc = np.eye(n, dtype=bool)
    base = reach.copy()
    e = target
    while e:
        if e & 1:
            acc = (acc.astype(np.int64) @ base.astype(np.int64)) > 0
        base = (base.astype(np.int64) @ base.astype(np.int64)) > 0
        e >>= 1
    return bool(acc.all())


def _check_rows(name: str, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise NotNormalizedError(f"{name} must be a nonnegative matrix")
    if np.any(np.abs(matrix.sum(axis=1) - 1.0) > 1e-12):
        raise NotNormalizedError(f"{name} rows must each sum to 1")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class ProcessModel:
    """Hidden-state chain with per-source emissions and a target kernel."""

    states: tuple
    transition: np.ndarray
    stationary: np.ndarray
    emissions: tuple[np.ndarray, ...]
    emission_spaces: tuple[OutcomeSpace, ...]
    target_kernel: np.ndarray
    target_space: OutcomeSpace
    window: int = 1
    delay: int = 0
    seed: int | None = None

    def __post_init__(self):
        n = len(self.states)
        transition = _check_rows("transition", self.transition)
        if transition.shape != (n, n):
            raise IncompatibleSpaceError("transition must be square over the states")
        if not _is_primitive(transition):
            raise AofLabError("chain is reducible or periodic; stationarity is not well-defined")
        stationary = np.asarray(self.stationary, dtype=float)
        if np.abs(stationary @ transition - stationary).max() > 1e-10:
            raise NotNormalizedError("stationary vector does not satisfy pi T = pi")
        stationary.setflags(write=False)
        emissions = tuple(_check_rows(f"emission[{l}]", e) for l, e in enumerate(self.emissions))
        if len(emissions) != len(self.emission_spaces):
            raise IncompatibleSpaceError("one emission kernel per source is required")
        for l, (kernel, space) in enumerate(zip(emissions, self.emission_spaces)):
            if kernel.shape != (n, len(space)):
                raise IncompatibleSpaceError(f"emission kernel {l} shape mismatch")
        target_kernel = _check_rows("target_kernel", self.target_kernel)
        if target_kernel.shape != (n, len(self.target_space)):
            raise IncompatibleSpaceError("target kernel shape mismatch")
        if self.window < 1 or self.delay < 0:
            raise AofLabError("window must be >= 1 and delay >= 0")
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "stationary", stationary)
        object.__setattr__(self, "emissions", emissions)
        object.__setattr__(self, "target_kernel", target_kernel)

    @classmethod
    def build(
        cls,
        transition,
        emissions: Sequence,
        emission_spaces: Sequence[OutcomeSpace],
        target_kernel,
        target_space: OutcomeSpace,
        window: int = 1,
        delay: int = 0,
        seed: int | None = None,
        states: Sequence | None = None,
    ) -> "ProcessModel":
        transition = np.asarray(transition, dtype=float)
        if states is None:
            states = tuple(range(transition.shape[0]))
        stationary = _stationary_distribution(transition)
        return cls(
            states=tuple(states),
            transition=transition,
            stationary=stationary,
            emissions=tuple(np.asarray(e, dtype=float) for e in emissions),
            emission_spaces=tuple(emission_spaces),
            target_kernel=np.asarray(target_kernel, dtype=float),
            target_space=target_space,
            window=window,
            delay=delay,
            seed=seed,
        )

    @property
    def m(self) -> int:
        return len(self.emissions)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def feature_space(self, l: int) -> OutcomeSpace:
        base = self.emission_spaces[l - 1]
        if self.window == 1:
            return base
        labels = tuple(itertools.product(base.labels, repeat=self.window))
        return OutcomeSpace(labels)

    def with_window(self, window: int) -> "ProcessModel":
        return replace(self, window=window)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "states": list(self.states),
            "transition": self.transition.tolist(),
            "emissions": [e.tolist() for e in self.emissions],
            "emission_symbols": [list(s.labels) for s in self.emission_spaces],
            "target_kernel": self.target_kernel.tolist(),
            "target_symbols": list(self.target_space.labels),
            "window": self.window,
            "delay": self.delay,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProcessModel":
        return cls.build(
            transition=data["transition"],
            emissions=data["emissions"],
            emission_spaces=tuple(OutcomeSpace(tuple(s)) for s in data["emission_symbols"]),
            target_kernel=data["target_kernel"],
            target_space=OutcomeSpace(tuple(data["target_symbols"])),
            window=data["window"],
            delay=data["delay"],
            seed=data.get("seed"),
            states=tuple(data["states"]),
        )

    @classmethod
    def load(cls, path) -> "ProcessModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def _elementary_reads(model: ProcessModel, requests: tuple[Request, ...]):
    """Distinct (kind, source, slot) cells each request reads, newest first
    inside a feature tuple.  Slots are relative: lag k reads slot -k."""
    per_request: dict[Request, list[tuple]] = {}
    for var, lag in requests:
        src = source_index(var)
        if src is None:
            per_request[(var, lag)] = [("y", 0, -lag)]
        else:
            if src > model.m:
                raise IncompatibleSpaceError(f"model has {model.m} sources; got {var!r}")
            base = -(lag + model.delay)
            per_request[(var, lag)] = [("x", src, base - j) for j in range(model.window)]
    distinct = sorted({r for reads in per_request.values() for r in reads}, key=lambda r: (r[2], r[0], r[1]))
    return per_request, distinct


def exact_window_law(
    model: ProcessModel,
    requests: Sequence,
    span_cap: int = DEFAULT_SPAN_CAP,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> WindowLaw:
    """Exact joint law of the requested lagged variables under stationarity."""
    reqs = canonical_requests(requests)
    if not reqs:
        raise IncompatibleSpaceError("at least one variable must be requested")
    per_request, reads = _elementary_reads(model, reqs)
    slots = [r[2] for r in reads]
    span = max(slots) - min(slots)
    if span > span_cap:
        raise SpanCapError(f"lag span {span} exceeds cap {span_cap}")

    def read_size(read) -> int:
        kind, src, _ = read
        return len(model.target_space) if kind == "y" else len(model.emission_spaces[src - 1])

    n_cells = 1
    for r in reads:
        n_cells *= read_size(r)
    if n_cells * model.n_states > max_cells:
        raise AofLabError(f"unrolled law would need {n_cells * model.n_states} cells (cap {max_cells})")

    reads_at: dict[int, list] = {}
    for r in reads:
        reads_at.setdefault(r[2], []).append(r)
    order: list = []
    table = model.stationary.copy()
    lo, hi = min(slots), max(slots)
    for slot in range(lo, hi + 1):
        for read in reads_at.get(slot, ()):
            kind, src, _ = read
            kernel = model.target_kernel if kind == "y" else model.emissions[src - 1]
            table = np.einsum("...s,sk->...ks", table, kernel)
            order.append(read)
        if slot < hi:
            table = table @ model.transition
    elem = table.sum(axis=-1)

    axis_of = {read: i for i, read in enumerate(order)}
    var_entries = []
    for var, lag in reqs:
        src = source_index(var)
        if src is None:
            space = model.target_space
            weights = [(axis_of[per_request[(var, lag)][0]], 1)]
        else:
            space = model.feature_space(src)
            k = len(model.emission_spaces[src - 1])
            reads_v = per_request[(var, lag)]
            weights = [
                (axis_of[r], k ** (model.window - 1 - j)) for j, r in enumerate(reads_v)
            ]
        var_entries.append((variable_name(var, lag), space, weights))

    coeff = np.zeros(len(order), dtype=np.int64)
    strides = []
    stride = 1
    for _, space, _ in reversed(var_entries):
        strides.append(stride)
        stride *= len(space)
    strides.reverse()
    total_cells = stride
    for (_, _, weights), var_stride in zip(var_entries, strides):
        for axis, weight in weights:
            coeff[axis] += var_stride * weight

    flat_index = np.zeros(elem.shape, dtype=np.int64)
    for axis, size in enumerate(elem.shape):
        shape = [1] * elem.ndim
        shape[axis] = size
        flat_index = flat_index + coeff[axis] * np.arange(size, dtype=np.int64).reshape(shape)
    probs = np.bincount(flat_index.ravel(), weights=elem.ravel(), minlength=total_cells)
    probs = probs.reshape(tuple(len(space) for _, space, _ in var_entries))
    # matrix products drift at float precision; snap the total back to one
    probs = probs / probs.sum()
    law = JointPmf(tuple((name, space) for name, space, _ in var_entries), probs)
    return WindowLaw(law=law, requests=reqs, meta={"source": "exact"})


@dataclass(eq=False)
class ExactLawProvider:
    """Caching provider of exact window laws for one model."""

    model: ProcessModel
    span_cap: int = DEFAULT_SPAN_CAP
    max_cells: int = DEFAULT_MAX_CELLS
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.model.m

    def feature_space(self, l: int) -> OutcomeSpace:
        return self.model.feature_space(l)

    @property
    def target_space(self) -> OutcomeSpace:
        return self.model.target_space

    def window_law(self, requests: Sequence) -> WindowLaw:
        key = canonical_requests(requests)
        law = self._cache.get(key)
        if law is None:
            law = exact_window_law(self.model, key, self.span_cap, self.max_cells)
            self._cache[key] = law
        return law


def make_markov_observable(
    seed: int,
    n_states: int = 3,
    n_sources: int = 1,
    n_targets: int = 3,
    window: int = 1,
    delay: int = 0,
) -> ProcessModel:
    """Random chain whose features reveal the state exactly.

    Emissions are per-source random bijections of the state, so the observed
    feature/target process is itself Markov and the Markov-deviation
    coefficient is zero at every lag horizon.
    """
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    transition = transition + 0.05 / n_states
    transition = transition / transition.sum(axis=1, keepdims=True)
    emissions = []
    spaces = []
    for _ in range(n_sources):
        perm = rng.permutation(n_states)
        kernel = np.zeros((n_states, n_states))
        kernel[np.arange(n_states), perm] = 1.0
        emissions.append(kernel)
        spaces.append(OutcomeSpace(tuple(range(n_states))))
    target = rng.dirichlet(np.ones(n_targets), size=n_states)
    target = target + 0.02 / n_targets
    target = target / target.sum(axis=1, keepdims=True)
    return ProcessModel.build(
        transition=transition,
        emissions=emissions,
        emission_spaces=spaces,
        target_kernel=target,
        target_space=OutcomeSpace(tuple(range(n_targets))),
        window=window,
        delay=delay,
        seed=seed,
    )


def make_hidden_nonmarkov(
    seed: int,
    n_states: int = 4,
    n_sources: int = 1,
    n_symbols: int | Sequence[int] = 2,
    n_targets: int = 2,
    window: int = 1,
    delay: int = 0,
    noise: float = 0.2,
    concentration: float = 1.0,
) -> ProcessModel:
    """Random hidden chain with aliased, noisy emissions.

    ``noise`` blends each deterministic emission row with a random positive
    row; ``concentration`` below one makes transition rows spikier, which
    produces strongly history-dependent observed processes.  With zero noise
    and as many symbols as states the emissions are bijections and the model
    degenerates to an observable Markov one.
    """
    if not 0.0 <= noise <= 1.0:
        raise AofLabError(f"noise must lie in [0, 1], got {noise}")
    if concentration <= 0:
        raise AofLabError("concentration must be positive")
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.full(n_states, concentration), size=n_states)
    transition = transition + 1e-3 / n_states
    transition = transition / transition.sum(axis=1, keepdims=True)
    if isinstance(n_symbols, int):
        symbol_counts = [n_symbols] * n_sources
    else:
        symbol_counts = [int(k) for k in n_symbols]
        if len(symbol_counts) != n_sources:
            raise AofLabError("one symbol count per source is required")
    emissions = []
    spaces = []
    for k in symbol_counts:
        base = np.concatenate([rng.permutation(k), rng.integers(0, k, size=max(0, n_states - k))])
        base = base[rng.permutation(n_states)][:n_states]
        onehot = np.zeros((n_states, k))
        onehot[np.arange(n_states), base] = 1.0
        rows = rng.dirichlet(np.ones(k), size=n_states)
        emissions.append((1.0 - noise) * onehot + noise * rows)
        spaces.append(OutcomeSpace(tuple(range(k))))
    target = rng.dirichlet(np.full(n_targets, concentration), size=n_states)
    target = target + 1e-3 / n_targets
    target = target / target.sum(axis=1, keepdims=True)
    return ProcessModel.build(
        transition=transition,
        emissions=emissions,
        emission_spaces=spaces,
        target_kernel=target,
        target_space=OutcomeSpace(tuple(range(n_targets))),
        window=window,
        delay=delay,
        seed=seed,
    )


def mix_toward_markov(model: ProcessModel, markov_ref: ProcessModel, eta: float) -> MixtureLawProvider:
    """Provider whose laws blend a Markov reference (weight 1 - eta) with the
    given model (weight eta); its Markov deviation vanishes as eta -> 0."""
    base = ExactLawProvider(markov_ref)
    other = ExactLawProvider(model)
    check_compatible(base, other)
    return MixtureLawProvider(base=base, other=other, eta=eta)


def sample_trajectory(model: ProcessModel, length: int, seed: int) -> Dataset:
    """Simulate ``length`` slots and emit one fresh-feature row per usable slot.

    Rows start once the first full feature window is available; all age
    columns are zero because every row carries the freshest feature.
    """
    warm = model.delay + model.window - 1
    if length <= warm:
        raise AofLabError(f"length must exceed the warm-up of {warm} slots")
    rng = np.random.default_rng(seed)
    n = model.n_states
    cum_t = np.cumsum(model.transition, axis=1)
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.choice(n, p=model.stationary)
    u = rng.random(length)
    for t in range(1, length):
        states[t] = int(np.searchsorted(cum_t[states[t - 1]], u[t], side="right"))

    def draw(kernel):
        cum = np.cumsum(kernel, axis=1)[states]
        r = rng.random(length)
        return (r[:, None] > cum).sum(axis=1)

    emitted = [draw(e) for e in model.emissions]
    targets = draw(model.target_kernel)

    t_values = np.arange(warm, length, dtype=np.int64)
    xs = []
    for l in range(model.m):
        sym = emitted[l]
        if model.window == 1:
            col = [int(sym[t - model.delay]) for t in t_values]
        else:
            col = [
                tuple(int(sym[t - model.delay - j]) for j in range(model.window))
                for t in t_values
            ]
        xs.append(col)
    ages = [np.zeros(len(t_values), dtype=np.int64) for _ in range(model.m)]
    y = [int(v) for v in targets[warm:]]
    return Dataset(t=t_values, xs=tuple(xs), ages=tuple(ages), y=y)
