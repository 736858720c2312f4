"""The single-port model assumes an instantaneous sleep transition.

With the sleep timer set to zero the aggregation runs reproduce it; the
acceptance suite keeps the standard 2.88 us timer.
"""
import pytest

from eeenet.runner import run_scenario, validate
from eeenet.scenario import load_scenario

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("preset", ["fig3", "fig4"])
def test_instant_sleep_matches_single_port_model(preset):
    sc = load_scenario(preset).with_overrides(t_sleep=0, replications=3, frames=300_000)
    checks = [c for c in validate(run_scenario(sc)).checks if c.name == "w_eee"]
    assert all(c.passed for c in checks), "\n".join(c.line() for c in checks)


def test_sleep_timer_adds_delay_beyond_model():
    base = load_scenario("fig3").with_overrides(loads=[0.5], replications=2, frames=200_000)
    slow = validate(run_scenario(base)).checks[0]
    fast = validate(run_scenario(base.with_overrides(t_sleep=0))).checks[0]
    assert slow.sim > fast.sim
    assert fast.error < 0.05 < slow.error
