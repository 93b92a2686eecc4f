import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aof_lab import (
    AgeDistribution,
    AgeProcess,
    DeliveryTrace,
    Pmf,
    age_process,
    empirical_age_distribution,
    sample_path_dominates,
    stochastic_order_multivariate,
    stochastic_order_univariate,
)
from aof_lab.aoi import SENTINEL
from aof_lab.errors import AofLabError, IncompatibleSpaceError, WarmupError

from oracles import stochastic_order_upper_sets


def test_sawtooth_trace():
    trace = DeliveryTrace((((0, 1), (3, 5)),))
    ap = age_process(trace, 7)
    assert ap.ages[0].tolist() == [SENTINEL, 1, 2, 3, 4, 2, 3]


def test_instant_delivery_is_always_fresh():
    trace = DeliveryTrace((tuple((i, i) for i in range(6)),))
    ap = age_process(trace, 6)
    assert ap.ages[0].tolist() == [0] * 6


def test_single_event_grows_by_one():
    trace = DeliveryTrace((((0, 0),),))
    assert age_process(trace, 4).ages[0].tolist() == [0, 1, 2, 3]


def test_trace_invariants_enforced():
    with pytest.raises(AofLabError):
        DeliveryTrace((((3, 2),),))  # delivery before generation
    with pytest.raises(AofLabError):
        DeliveryTrace((((3, 4), (1, 5)),))  # generations out of order


def _random_trace(rng, n_events, horizon):
    gens = np.sort(rng.integers(0, horizon, size=n_events))
    delays = rng.integers(0, 4, size=n_events)
    return tuple((int(g), int(g + d)) for g, d in zip(gens, delays))


@given(st.integers(0, 100_000))
@settings(max_examples=60, deadline=None)
def test_unit_increment_between_deliveries(seed):
    rng = np.random.default_rng(seed)
    horizon = 20
    trace = DeliveryTrace((_random_trace(rng, 5, horizon), _random_trace(rng, 3, horizon)))
    ap = age_process(trace, horizon)
    deliveries = [{d for _, d in src} for src in trace.events]
    for l in range(ap.m):
        for t in range(1, horizon):
            prev, cur = ap.ages[l, t - 1], ap.ages[l, t]
            if cur == SENTINEL:
                assert prev == SENTINEL
            elif t not in deliveries[l]:
                if prev != SENTINEL:
                    assert cur == prev + 1
            else:
                assert cur <= (prev + 1 if prev != SENTINEL else cur)


def test_empirical_age_distribution_counts():
    trace = DeliveryTrace((((0, 1), (3, 5)),))
    ap = age_process(trace, 7)
    with pytest.raises(WarmupError):
        empirical_age_distribution(ap)
    dist = empirical_age_distribution(ap, start=1)
    # slot census of [1,2,3,4,2,3]
    assert dist.vectors == ((1,), (2,), (3,), (4,))
    assert np.allclose(dist.probs, [1 / 6, 2 / 6, 2 / 6, 1 / 6])


def test_constant_and_alternating_age_distributions():
    ages = AgeProcess(np.array([[1, 1, 1], [2, 2, 2]]))
    d = empirical_age_distribution(ages)
    assert d.vectors == ((1, 2),) and d.probs[0] == 1.0
    alt = AgeProcess(np.array([[1, 2, 1, 2], [1, 2, 1, 2]]))
    d2 = empirical_age_distribution(alt)
    assert d2.vectors == ((1, 1), (2, 2))
    assert np.allclose(d2.probs, [0.5, 0.5])


def test_sample_path_dominance():
    a = AgeProcess(np.array([[1, 2, 3]]))
    b = AgeProcess(np.array([[1, 2, 3]]))
    assert sample_path_dominates(a, b)
    c = AgeProcess(np.array([[2, 3, 4]]))
    assert sample_path_dominates(a, c)
    assert not sample_path_dominates(c, a)
    crossing = AgeProcess(np.array([[0, 5, 0]]))
    assert not sample_path_dominates(a, crossing)
    assert not sample_path_dominates(crossing, a)
    with pytest.raises(IncompatibleSpaceError):
        sample_path_dominates(a, AgeProcess(np.array([[1, 2]])))


def test_univariate_order():
    one = Pmf.from_mapping({1: 1.0})
    two = Pmf.from_mapping({2: 1.0})
    assert stochastic_order_univariate(one, two)
    assert not stochastic_order_univariate(two, one)
    u01 = Pmf.from_mapping({0: 0.5, 1: 0.5})
    u12 = Pmf.from_mapping({1: 0.5, 2: 0.5})
    assert stochastic_order_univariate(u01, u12)
    spread = Pmf.from_mapping({0: 0.5, 3: 0.5})
    assert not stochastic_order_univariate(spread, two)  # tail at 2: 0.5 > 0


def test_multivariate_point_masses():
    assert stochastic_order_multivariate(
        AgeDistribution.point_mass((1, 1)), AgeDistribution.point_mass((2, 3))
    ).holds
    verdict = stochastic_order_multivariate(
        AgeDistribution.point_mass((1, 3)), AgeDistribution.point_mass((2, 2))
    )
    assert not verdict.holds
    w = verdict.witness
    assert w is not None
    assert w.p_mass > w.q_mass
    assert w.contains((1, 3)) and not w.contains((2, 2))


def _random_age_dist(rng, m, size):
    vecs = set()
    while len(vecs) < size:
        vecs.add(tuple(int(v) for v in rng.integers(0, 5, size=m)))
    vecs = tuple(sorted(vecs))
    probs = rng.random(len(vecs)) + 0.05
    return AgeDistribution(vecs, probs / probs.sum())


def _coupled_ordered_pair(rng, m, size):
    base = [tuple(int(v) for v in rng.integers(0, 4, size=m)) for _ in range(size)]
    upper = [tuple(int(v + rng.integers(0, 3)) for v in vec) for vec in base]
    probs = rng.random(size) + 0.05
    probs /= probs.sum()
    low, high = {}, {}
    for vec, uvec, pr in zip(base, upper, probs):
        low[vec] = low.get(vec, 0.0) + pr
        high[uvec] = high.get(uvec, 0.0) + pr
    return AgeDistribution.from_mapping(low), AgeDistribution.from_mapping(high)


def test_flow_verdict_agrees_with_upper_set_enumeration():
    rng = np.random.default_rng(100)
    checked = agree = 0
    for trial in range(120):
        m = int(rng.integers(1, 4))
        if trial % 2 == 0:
            p = _random_age_dist(rng, m, int(rng.integers(1, 5)))
            q = _random_age_dist(rng, m, int(rng.integers(1, 5)))
        else:
            p, q = _coupled_ordered_pair(rng, m, int(rng.integers(1, 4)))
        want = stochastic_order_upper_sets(p, q)
        got = stochastic_order_multivariate(p, q)
        assert got.holds == want
        if not got.holds:
            w = got.witness
            assert w.p_mass > w.q_mass + 1e-12
        checked += 1
        agree += got.holds == want
    assert checked == agree == 120


def test_pathwise_coupling_implies_stochastic_order():
    rng = np.random.default_rng(7)
    for seed in range(10):
        r = np.random.default_rng(seed)
        base = np.abs(np.cumsum(r.integers(-1, 2, size=(2, 15)), axis=1) % 5)
        a = AgeProcess(base)
        b = AgeProcess(base + r.integers(0, 3, size=base.shape))
        assert sample_path_dominates(a, b)
        da = empirical_age_distribution(a)
        db = empirical_age_distribution(b)
        assert stochastic_order_multivariate(da, db).holds


def test_ordering_reflexive_and_transitive():
    rng = np.random.default_rng(8)
    dists = [_random_age_dist(rng, 2, 3) for _ in range(6)]
    for d in dists:
        assert stochastic_order_multivariate(d, d).holds
    for a in dists:
        for b in dists:
            for c in dists:
                ab = stochastic_order_multivariate(a, b).holds
                bc = stochastic_order_multivariate(b, c).holds
                if ab and bc:
                    assert stochastic_order_multivariate(a, c).holds


def test_age_process_csv_roundtrip(tmp_path):
    trace = DeliveryTrace((((0, 1), (3, 5)), ((0, 0),)))
    ap = age_process(trace, 7)
    path = tmp_path / "ages.csv"
    ap.to_csv(path)
    back = AgeProcess.from_csv(path)
    assert np.array_equal(back.ages, ap.ages)
    text = path.read_text().splitlines()
    assert text[0] == "t,age_1,age_2"
    assert text[1] == "0,,0"  # sentinel rendered as empty cell


def test_trace_csv_roundtrip(tmp_path):
    trace = DeliveryTrace((((0, 1), (3, 5)), ((2, 2),)))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    assert DeliveryTrace.from_csv(path).events == trace.events


def test_age_distribution_json_roundtrip(tmp_path):
    d = AgeDistribution.uniform([(0, 1), (2, 2)])
    path = tmp_path / "ages.json"
    d.save(path)
    back = AgeDistribution.load(path)
    assert back.vectors == d.vectors
    assert np.allclose(back.probs, d.probs)


def test_univariate_ordering_reflexive_and_transitive():
    rng = np.random.default_rng(9)
    from aof_lab import OutcomeSpace

    space = OutcomeSpace(tuple(range(5)))
    pmfs = []
    for _ in range(5):
        raw = rng.random(5) + 0.02
        pmfs.append(Pmf(space, raw / raw.sum()))
    for p in pmfs:
        assert stochastic_order_univariate(p, p)
    for a in pmfs:
        for b in pmfs:
            for c in pmfs:
                if stochastic_order_univariate(a, b) and stochastic_order_univariate(b, c):
                    assert stochastic_order_univariate(a, c)
