"""Window laws and the provider interface shared by exact and empirical sources.

A window law is a joint distribution over lagged variables: the target at
some lag plus any number of per-source features at their own lags.  The
variable naming convention is ``"y@<lag>"`` for the target and
``"x<l>@<lag>"`` for source ``l`` (1-based).  Requests are (variable, lag)
pairs such as ``("y", 0)`` or ``("x2", 3)``.

Providers produce window laws on demand: exact providers unroll a process
model, empirical providers count sliding windows in a dataset, and the
mixture provider blends two compatible providers cell by cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .errors import IncompatibleSpaceError
from .spaces import JointPmf, OutcomeSpace, mix_joints

Request = tuple[str, int]


def parse_request(req) -> Request:
    var, lag = req
    var = str(var)
    lag = int(lag)
    if lag < 0:
        raise IncompatibleSpaceError(f"lags must be nonnegative, got {lag} for {var!r}")
    if var != "y":
        if not (var.startswith("x") and var[1:].isdigit() and int(var[1:]) >= 1):
            raise IncompatibleSpaceError(f"unknown variable {var!r}; expected 'y' or 'x<l>'")
    return var, lag


def source_index(var: str) -> int | None:
    """1-based source index of an 'x<l>' variable; None for the target."""
    return None if var == "y" else int(var[1:])


def canonical_requests(requests: Sequence) -> tuple[Request, ...]:
    """Deduplicate and sort requests: target lags first, then source, lag."""
    parsed = {parse_request(r) for r in requests}

    def key(req: Request):
        var, lag = req
        src = source_index(var)
        return (0, 0, lag) if src is None else (1, src, lag)

    return tuple(sorted(parsed, key=key))


def variable_name(var: str, lag: int) -> str:
    return f"{var}@{lag}"


@dataclass(frozen=True, eq=False)
class WindowLaw:
    """Joint law over lagged variables plus the lag bookkeeping behind it."""

    law: JointPmf
    requests: tuple[Request, ...]
    meta: dict = field(default_factory=dict)

    @property
    def names(self) -> tuple[str, ...]:
        return self.law.names

    def lag_of(self, name: str) -> int:
        for var, lag in self.requests:
            if variable_name(var, lag) == name:
                return lag
        raise IncompatibleSpaceError(f"unknown variable {name!r}")


class LawProvider(Protocol):
    """Anything that can produce exact-or-estimated window laws."""

    @property
    def m(self) -> int:
        """Number of feature sources."""
        ...

    def feature_space(self, l: int) -> OutcomeSpace:
        """Outcome space of source ``l`` (1-based)."""
        ...

    @property
    def target_space(self) -> OutcomeSpace:
        ...

    def window_law(self, requests: Sequence) -> WindowLaw:
        ...


def check_compatible(a: LawProvider, b: LawProvider) -> None:
    if a.m != b.m:
        raise IncompatibleSpaceError(f"source count mismatch: {a.m} vs {b.m}")
    if a.target_space.labels != b.target_space.labels:
        raise IncompatibleSpaceError("target spaces differ")
    for l in range(1, a.m + 1):
        if a.feature_space(l).labels != b.feature_space(l).labels:
            raise IncompatibleSpaceError(f"feature spaces differ for source {l}")


@dataclass(frozen=True, eq=False)
class MixtureLawProvider:
    """Cell-wise convex mixture of two compatible law providers.

    Every window law is ``(1 - eta) * base + eta * other``, which drives the
    Markov-deviation coefficient continuously between the two endpoints.
    """

    base: LawProvider
    other: LawProvider
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise IncompatibleSpaceError(f"eta must lie in [0, 1], got {self.eta}")
        check_compatible(self.base, self.other)

    @property
    def m(self) -> int:
        return self.base.m

    def feature_space(self, l: int) -> OutcomeSpace:
        return self.base.feature_space(l)

    @property
    def target_space(self) -> OutcomeSpace:
        return self.base.target_space

    def window_law(self, requests: Sequence) -> WindowLaw:
        reqs = canonical_requests(requests)
        a = self.base.window_law(reqs)
        b = self.other.window_law(reqs)
        mixed = mix_joints([(1.0 - self.eta, a.law), (self.eta, b.law)])
        return WindowLaw(law=mixed, requests=reqs, meta={"mixture_eta": self.eta})


def positional_rename(law: WindowLaw) -> Mapping[str, str]:
    """Map lag-tagged names to bare positional names ('x1@3' -> 'x1')."""
    mapping = {}
    for var, lag in law.requests:
        mapping[variable_name(var, lag)] = var
    if len(set(mapping.values())) != len(mapping):
        raise IncompatibleSpaceError("law repeats a variable at several lags; cannot drop lags")
    return mapping
