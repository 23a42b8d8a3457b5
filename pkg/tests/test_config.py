import math

import pytest
from hypothesis import given, strategies as st

from rsma_covert.config import (
    ConfigError,
    GammaParams,
    PowerAllocation,
    SystemConfig,
    TransmitSnr,
    validate_config,
)


def test_baseline_is_valid():
    cfg = SystemConfig(antennas=4, users=4, csit_quality=0.95, path_loss_exponent=2.0,
                       user_distances=5.0, protected_radius=10.0, covert_tolerance=0.1)
    assert validate_config(cfg) is cfg
    assert cfg.user_distances == (5.0,) * 4
    assert cfg.path_gain(0) == pytest.approx(0.04)


def test_fewer_antennas_than_users():
    with pytest.raises(ConfigError, match="M < K"):
        SystemConfig(antennas=3, users=4)


def test_user_outside_zone():
    with pytest.raises(ConfigError, match="user outside protected zone"):
        SystemConfig(user_distances=(15.0, 5.0, 5.0, 5.0), protected_radius=10.0)


def test_all_problems_reported():
    with pytest.raises(ConfigError) as info:
        SystemConfig(csit_quality=1.5, covert_tolerance=0.0, warden_density=-1.0)
    fields = " ".join(info.value.problems)
    for name in ("csit_quality", "covert_tolerance", "warden_density"):
        assert name in fields


def test_wrong_number_of_distances():
    with pytest.raises(ConfigError, match="expected 4 entries"):
        SystemConfig(user_distances=(5.0, 5.0))


def test_validation_idempotent(cfg):
    assert validate_config(validate_config(cfg)) == cfg


def test_with_updates_rebroadcasts(cfg):
    two = cfg.with_updates(users=2, antennas=2)
    assert two.user_distances == (5.0, 5.0)
    assert two.private_thresholds == (0.01, 0.01)


def test_common_one_rejected():
    with pytest.raises(ConfigError):
        PowerAllocation(1.0, (0.0,))


def test_allocation_must_sum_to_one():
    with pytest.raises(ConfigError, match="sums to"):
        PowerAllocation(0.5, (0.1, 0.1))


def test_sdma_allocation_allowed():
    a = PowerAllocation.symmetric(0.0, 4)
    assert a.private == (0.25,) * 4


@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 64))
def test_symmetric_sums_to_one(ac, k):
    a = PowerAllocation.symmetric(ac, k)
    assert abs(a.common + math.fsum(a.private) - 1.0) <= 1e-12


def test_gamma_moments():
    g = GammaParams(3.0, 2.0)
    assert g.mean() == 6.0
    assert g.variance() == 12.0
    with pytest.raises(ValueError):
        GammaParams(0.0, 1.0)


@given(st.floats(-40.0, 60.0))
def test_snr_db_round_trip(db):
    snr = TransmitSnr.from_db(db)
    assert TransmitSnr.from_db(snr.db).value == pytest.approx(snr.value, rel=1e-12)


def test_snr_must_be_positive():
    with pytest.raises(ValueError):
        TransmitSnr(0.0)
