import dataclasses

import pytest
from hypothesis import given, strategies as st

from rsmabeam.scenario import (
    Scenario,
    ScenarioFormatError,
    default_scenario,
    desk_scenario,
    from_text,
    load_scenario,
    save_scenario,
    to_text,
    validate,
)


def test_default_matches_system_table():
    s = default_scenario()
    assert s.n_antennas == 7 and s.n_groups == 7
    assert s.n_users == s.n_groups * s.users_per_group == 14
    assert s.carrier_freq_hz == 20e9
    assert s.altitude_m == 35786e3
    assert s.bandwidth_hz == 500e6
    assert s.max_beam_gain_db == 52.0
    assert s.user_antenna_gain_db == 41.7
    assert s.noise_temp_k == 517.0
    assert s.boltzmann == 1.38e-23
    assert (s.rain_mu, s.rain_sigma2) == (-3.125, 1.591)
    assert s.angle_3db_deg == 0.4
    assert s.amp_efficiency == 1.0
    assert s.sca_eps == 0.0001
    assert s.mc_realizations == 500


def test_default_is_valid():
    assert validate(default_scenario()) == []
    assert validate(desk_scenario()) == []


def test_snr_definition_sets_power_budget():
    s = default_scenario(snr_db=20.0, noise_var=1.0)
    assert s.total_power_w == pytest.approx(100.0)


def test_feed_count_must_match_group_count():
    s = default_scenario(n_antennas=7, n_groups=6, group_map=tuple([0, 1, 2, 3, 4, 5] * 2))
    errs = validate(s)
    assert any("SFPB" in e for e in errs)


def test_amp_efficiency_boundaries():
    errs = validate(dataclasses.replace(default_scenario(), amp_efficiency=0.0))
    assert any("amp_efficiency" in e for e in errs)
    errs = validate(dataclasses.replace(default_scenario(), amp_efficiency=1.5))
    assert any("amp_efficiency" in e for e in errs)
    assert validate(dataclasses.replace(default_scenario(), amp_efficiency=1.0)) == []


def test_group_map_surjectivity_checked():
    s = dataclasses.replace(default_scenario(), group_map=tuple([0] * 14))
    errs = validate(s)
    assert any("surjective" in e for e in errs)


def test_mode_flags_checked():
    assert any("sic_mode" in e for e in
               validate(dataclasses.replace(default_scenario(), sic_mode="tdma")))
    assert any("objective_mode" in e for e in
               validate(dataclasses.replace(default_scenario(), objective_mode="mmf")))


def test_text_round_trip_exact():
    s = desk_scenario(snr_db=17.3, phase_err_var=0.123456789012345,
                      rate_power_coeff=1e-3, rng_seed=987654321)
    assert from_text(to_text(s)) == s


def test_file_round_trip(tmp_path):
    s = default_scenario(snr_db=5.0)
    path = tmp_path / "scenario.txt"
    save_scenario(s, path)
    assert load_scenario(path) == s


def test_unknown_key_rejected():
    text = to_text(default_scenario()) + "carrier_freq_ghz = 20\n"
    with pytest.raises(ScenarioFormatError, match="unknown key"):
        from_text(text)


def test_missing_key_rejected():
    text = "\n".join(to_text(default_scenario()).splitlines()[:-2])
    with pytest.raises(ScenarioFormatError, match="missing keys"):
        from_text(text)


def test_duplicate_key_rejected():
    text = to_text(default_scenario())
    text += text.splitlines()[1] + "\n"
    with pytest.raises(ScenarioFormatError, match="duplicate"):
        from_text(text)


def test_malformed_line_rejected():
    with pytest.raises(ScenarioFormatError, match="expected"):
        from_text("not a key value line\n")


@given(
    snr=st.floats(-20, 40, allow_nan=False),
    delta2=st.floats(0, 5, allow_nan=False),
    xi=st.floats(0, 10, allow_nan=False),
    seed=st.integers(0, 2**63 - 1),
)
def test_round_trip_property(snr, delta2, xi, seed):
    s = desk_scenario(snr_db=snr, phase_err_var=delta2,
                      rate_power_coeff=xi, rng_seed=seed)
    assert from_text(to_text(s)) == s
