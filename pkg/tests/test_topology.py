import numpy as np
import pytest

from eeenet.core import ns
from eeenet.port import ConfigError, EeeConfig, Mode
from eeenet.topology import build_aggregation, build_tandem, simulate
from eeenet.traffic import Bimodal, Poisson, TrafficSpec

MIX = Bimodal(800, 0.54, 12000)


def poisson(load, n=1):
    return TrafficSpec(Poisson(load * 1e10 / MIX.mean_bits / n), MIX)


def test_aggregation_rejects_overload():
    with pytest.raises(ConfigError):
        build_aggregation(10, Mode.REGULAR, EeeConfig(), poisson(1.2, 10))


def test_aggregation_needs_a_source():
    with pytest.raises(ConfigError):
        build_aggregation(0, Mode.REGULAR, EeeConfig(), poisson(0.5))


def test_tandem_rejects_unequal_rates():
    with pytest.raises(ConfigError):
        build_tandem([EeeConfig.regular(), EeeConfig(rate=1_000_000_000)], poisson(0.5))


def test_tandem_rejects_empty_chain():
    with pytest.raises(ConfigError):
        build_tandem([], poisson(0.5))


def test_aggregation_arrival_rate_at_second_stage():
    net = build_aggregation(100, Mode.REGULAR, EeeConfig(), poisson(0.5, 100))
    res = simulate(net, 1, 200_000)
    agg = res.hops[0]
    lam = 0.5 * 1e10 / MIX.mean_bits
    measured = (len(agg.arrival) - 1) / ((agg.arrival[-1] - agg.arrival[0]) / 1e12)
    assert abs(measured / lam - 1) < 0.01


def test_single_source_aggregation_is_a_tandem():
    agg = simulate(build_aggregation(1, Mode.REGULAR, EeeConfig(), poisson(0.4)), 9, 20_000)
    tan = simulate(build_tandem([EeeConfig.regular(), EeeConfig()], poisson(0.4)), 9, 20_000)
    assert (agg.hops[0].start == tan.hops[1].start).all()
    assert (agg.first_stage[0].start == tan.hops[0].start).all()


def test_two_eee_sources_structure():
    net = build_aggregation(2, Mode.EEE, EeeConfig(), poisson(0.5, 2))
    assert [c.mode for c in net.first_stage] == [Mode.EEE, Mode.EEE]
    assert net.first_stage[0].t_wake == net.aggregator.t_wake


@pytest.mark.parametrize("backend", ["events", "kernel"])
def test_zero_delay_forwarding_and_conservation(backend):
    res = simulate(build_tandem([EeeConfig.regular(), EeeConfig(), EeeConfig()], poisson(0.5)), 2, 5000, backend)
    for up, down in zip(res.hops, res.hops[1:]):
        assert (up.departure == down.arrival).all()
        assert (up.frame_ids == down.frame_ids).all()
    assert res.frames == 5000
    assert all(len(h.arrival) == 5000 for h in res.hops)


def test_busy_period_gaps_equal_service_times():
    res = simulate(build_tandem([EeeConfig(), EeeConfig()], poisson(0.7)), 6, 20_000)
    h0, h1 = res.hops
    svc = h0.departure - h0.start
    in_busy = h0.arrival[1:] < h0.departure[:-1]
    gaps = np.diff(h1.arrival)
    assert in_busy.any()
    assert (gaps[in_busy] == svc[1:][in_busy]).all()


def test_regular_tandem_queueing_limited_by_size_difference():
    chain = [EeeConfig.regular()] * 4
    res = simulate(build_tandem(chain, poisson(0.8)), 3, 50_000)
    for hop in res.hops[1:]:
        assert hop.waiting().max() <= ns(1200) - ns(80)
