import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sappo.channel import (
    AirModel,
    ChannelError,
    NoiseModel,
    Receiver,
    RfModel,
    apply_noise,
    earliest_by_beacon,
    make_rng,
    propagate,
    sound_speed,
)
from sappo.geometry import Room
from sappo.ring import PolygonRing, Pose2, TransducerSite, build_ring


def site(x, y, facing, index=0, aperture=30.0):
    return TransducerSite(index, np.array([x, y]), facing, 0.0, math.radians(aperture), 0)


def test_sound_speed_model():
    assert sound_speed(0) == pytest.approx(331.4)
    assert sound_speed(20) == pytest.approx(343.52)
    with pytest.raises(ChannelError):
        sound_speed(80)


@given(st.floats(-40, 59))
def test_sound_speed_increases(t):
    assert sound_speed(t + 1) > sound_speed(t)


def test_direct_and_reflected_paths():
    room = Room.rectangle(10.0, 4.0)
    emit = [site(2.0, 1.0, 0.0, aperture=120)]
    rx = Receiver("B", [site(5.0, 1.0, math.pi, aperture=120)], 9.0, 1.45)
    arr = propagate(emit, [rx], room, AirModel(), max_order=1, emitter_height=1.45)
    direct = [a for a in arr if a.path == "direct"]
    refl = [a for a in arr if a.path == "reflected"]
    assert direct[0].path_length == pytest.approx(3.0)
    assert direct[0].tof == pytest.approx(3.0 / 343.52)
    # floor-side wall y=0: image at (2, -1)
    assert [a.path_length for a in refl if a.wall == 0] == pytest.approx([math.hypot(3, 2)])
    assert all(a.tof > direct[0].tof for a in refl)
    assert earliest_by_beacon(arr)["B"].path == "direct"


def test_no_reflection_when_disabled_and_out_of_cone():
    room = Room.rectangle(10.0, 4.0)
    emit = [site(2.0, 1.0, math.pi)]  # facing away
    rx = Receiver("B", [site(5.0, 1.0, math.pi)], 9.0, 1.45)
    assert propagate(emit, [rx], room, AirModel(), max_order=0) == []


def test_slant_range_limit():
    emit = [site(0.0, 0.0, 0.0)]
    rx = Receiver("B", [site(8.9, 0.0, math.pi)], 9.0, 1.45 + 2.0)
    assert propagate(emit, [rx], None, AirModel(), max_order=0, emitter_height=1.45) == []


def test_ring_to_ring_direct_range_matches_geometry():
    robot = build_ring(PolygonRing(12, 0.016077, pose=Pose2(0, 0, 0)))
    rx = Receiver("B", build_ring(PolygonRing(8, 0.025, pose=Pose2(4.0, 0.0, math.pi))), 9.0, 1.45)
    a = earliest_by_beacon(propagate(robot, [rx], None, AirModel(), max_order=0))["B"]
    assert a.path_length == pytest.approx(4.0 - a.emitter_apothem - a.receiver_apothem, abs=1e-6)


def test_noise_std_and_draw_count():
    nm = NoiseModel(outlier_rate=0.0)
    rng = make_rng(5)
    c = 343.0
    d = np.array([apply_noise(0.01, nm, rng, c) for _ in range(10_000)]) * c
    assert d.std() == pytest.approx(25e-6 * 343, rel=0.05)
    a, b = make_rng(9), make_rng(9)
    apply_noise(0.01, NoiseModel(outlier_rate=0.0), a, c)
    apply_noise(0.01, NoiseModel(outlier_rate=1.0), b, c)
    assert a.random() == b.random()


def test_outliers_are_late():
    nm = NoiseModel(tof_sigma=0.0, outlier_rate=1.0)
    rng = make_rng(2)
    extra = [(apply_noise(0.01, nm, rng, 343.0) - 0.01) * 343.0 for _ in range(500)]
    assert 0.01 - 1e-12 <= min(extra) and max(extra) <= 0.05 + 1e-12


def test_noise_validation():
    with pytest.raises(ChannelError):
        NoiseModel(outlier_rate=1.5)
    with pytest.raises(ChannelError):
        NoiseModel(outlier_extra=(0.05, 0.01))


def test_rf_latency_models():
    rng = make_rng(1)
    ook = RfModel()
    assert ook.draw(rng) == ook.nominal == 5e-6
    pr = RfModel(kind="packet_radio")
    draws = [pr.draw(rng) for _ in range(2000)]
    assert 50e-6 <= min(draws) and max(draws) <= 500e-6
    assert pr.nominal == pytest.approx(275e-6)
    with pytest.raises(ChannelError):
        RfModel(kind="wifi")


def test_streams_are_independent_and_reproducible():
    assert make_rng(1, 2).random() == make_rng(1, 2).random()
    assert make_rng(1, 2).random() != make_rng(1, 3).random()
