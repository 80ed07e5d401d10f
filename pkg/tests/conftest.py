import numpy as np
import pytest

from rsmabeam import assemble, build_stats, desk_scenario, drop_users, hex_layout


def make_desk_instance(seed: int = 0, **overrides):
    """One small scenario + channel statistics pair for solver tests."""
    s = desk_scenario(**overrides)
    rng = np.random.default_rng(seed)
    layout = hex_layout(s)
    drop = drop_users(s, layout, rng)
    chan = assemble(s, drop, rng)
    return s, chan, build_stats(s, chan)


@pytest.fixture
def desk_instance():
    return make_desk_instance(seed=0, snr_db=20.0, phase_err_var=0.1)
