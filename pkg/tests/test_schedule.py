import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcct.errors import ConfigError
from dcct.schedule import ScheduleSpec, constant, params_at


def test_endpoints_at_base():
    assert params_at(ScheduleSpec(0.5, 0.35, 50), 0) == (0.5, 0.5)


def test_midpoint_reaches_extremes():
    p1, p2 = params_at(ScheduleSpec(0.5, 0.35, 50), 25)
    assert p1 == pytest.approx(0.85, abs=1e-15)
    assert p2 == pytest.approx(0.15, abs=1e-15)


def test_kmeans_midpoint():
    assert params_at(ScheduleSpec(800, 400, 50, "kmeans_k"), 25) == (1200, 400)


def test_kmeans_values_are_ceiled():
    p1, p2 = params_at(ScheduleSpec(10, 3, 7, "kmeans_k"), 1)  # offset 6/7
    assert (p1, p2) == (11, 10)


def test_both_branches_agree_at_half():
    spec = ScheduleSpec(0.5, 0.35, 10)
    e, d = spec.total_epochs, spec.delta
    rising = 2 * d * 5 / e
    falling = 2 * d - 2 * d * 5 / e
    assert rising == pytest.approx(falling)
    assert params_at(spec, 5)[0] == pytest.approx(0.5 + rising)


def test_triangle_shape():
    spec = ScheduleSpec(0.5, 0.35, 50)
    p1 = np.array([params_at(spec, i)[0] for i in range(51)])
    assert (np.diff(p1[:26]) > 0).all()
    assert (np.diff(p1[25:]) < 0).all()
    np.testing.assert_allclose(p1, p1[::-1], atol=1e-15)


def test_zero_delta_is_constant():
    spec = ScheduleSpec(0.5, 0.0, 20)
    for i in range(21):
        assert params_at(spec, i) == constant(spec, i) == (0.5, 0.5)


@settings(max_examples=300, deadline=None)
@given(
    base=st.floats(0.01, 5.0),
    frac=st.floats(0.0, 0.999),
    e=st.integers(2, 200),
    data=st.data(),
)
def test_invariants_exact(base, frac, e, data):
    delta = base * frac
    spec = ScheduleSpec(base, delta, e)
    i = data.draw(st.integers(0, e))
    p1, p2 = params_at(spec, i)
    assert p1 + p2 == 2 * base
    assert base <= p1 <= base + delta
    assert base - delta <= p2 <= base
    for j in (0, e):
        assert params_at(spec, j) == (base, base)


@settings(max_examples=200, deadline=None)
@given(base=st.integers(2, 2000), frac=st.floats(0.0, 1.0), e=st.integers(2, 100), data=st.data())
def test_kmeans_invariants_within_ceiling(base, frac, e, data):
    delta = (base - 1) * frac
    spec = ScheduleSpec(base, delta, e, "kmeans_k")
    i = data.draw(st.integers(0, e))
    p1, p2 = params_at(spec, i)
    assert isinstance(p1, int) and isinstance(p2, int)
    assert abs(p1 + p2 - 2 * base) <= 1
    assert base <= p1 <= np.ceil(base + delta)
    assert np.ceil(base - delta) <= p2 <= base
    assert params_at(spec, 0) == params_at(spec, e) == (base, base)


def test_odd_epoch_count():
    spec = ScheduleSpec(1.0, 0.5, 5)
    vals = [params_at(spec, i)[0] for i in range(6)]
    assert vals[0] == vals[5] == 1.0
    assert vals[2] == pytest.approx(1.4) and vals[3] == pytest.approx(1.4)


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"base": 0.3, "delta": 0.3, "total_epochs": 10}, "delta"),
        ({"base": 0.5, "delta": -0.1, "total_epochs": 10}, "delta"),
        ({"base": 0.5, "delta": 0.1, "total_epochs": 1}, "total_epochs"),
        ({"base": 5, "delta": 4.5, "total_epochs": 10, "kind": "kmeans_k"}, "delta"),
        ({"base": 0.5, "delta": 0.1, "total_epochs": 10, "kind": "spectral"}, "kind"),
    ],
)
def test_invalid_specs(kw, field):
    with pytest.raises(ConfigError) as err:
        ScheduleSpec(**kw)
    assert err.value.field == field


def test_epoch_out_of_range():
    spec = ScheduleSpec(0.5, 0.1, 10)
    for i in (-1, 11):
        with pytest.raises(ValueError):
            params_at(spec, i)
