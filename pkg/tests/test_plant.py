import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dacc import plant
from dacc.plant import DesSpec, PlantState, ReferenceSignal


def _specs(ms):
    return {f"d{i}": DesSpec(f"d{i}", m) for i, m in enumerate(ms)}


@st.composite
def plants(draw):
    n = draw(st.integers(1, 20))
    ms = draw(st.lists(st.floats(1e-4, 2.0), min_size=n, max_size=n))
    specs = _specs(ms)
    theta = {i: draw(st.floats(300.0, 330.0)) for i in specs}
    active = draw(st.sets(st.sampled_from(sorted(specs)), min_size=1))
    load = draw(st.floats(0.0, 1e4))
    return specs, PlantState(theta, active, load)


def test_types_validate():
    with pytest.raises(ValueError):
        DesSpec("x", 0.0)
    with pytest.raises(plant.EmptyActiveSet):
        PlantState({"a": 1.0}, set(), 1.0)
    with pytest.raises(ValueError):
        PlantState({"a": 1.0}, {"a"}, -1.0)
    assert PlantState({"a": 1.0}, {"a"}, 100.0).p_total == pytest.approx(106.0)


def test_dispatch_two_units():
    specs = _specs([0.5, 0.5])
    st_ = PlantState({"d0": 1.0, "d1": 1.0}, {"d0", "d1"}, 2.0, loss_factor=0.0)
    d = plant.dispatch(st_, specs)
    assert d.omega_sync == pytest.approx(0.5)
    assert d.p == pytest.approx({"d0": 1.0, "d1": 1.0})


def test_dispatch_equal_theta_shares_proportionally():
    specs = _specs([5e-4, 1e-3, 2e-3])
    st_ = PlantState({i: 314.0 for i in specs}, set(specs), 900.0)
    d = plant.dispatch(st_, specs)
    shares = [specs[i].m * d.p[i] for i in specs]
    assert max(shares) - min(shares) <= 1e-12


def test_dispatch_inactive_units_carry_nothing():
    specs = _specs([1.0, 1.0])
    d = plant.dispatch(PlantState({"d0": 5.0, "d1": 9.0}, {"d0"}, 1.0, 0.0), specs)
    assert d.p["d1"] == 0.0 and d.p["d0"] == pytest.approx(1.0)


@settings(max_examples=1000)
@given(plants())
def test_dispatch_conservation_and_common_frequency(case):
    specs, state = case
    d = plant.dispatch(state, specs)
    total = sum(d.p.values())
    assert abs(total - state.p_total) <= 1e-9 * max(1.0, state.p_total)
    for i in state.active_set:
        assert state.theta[i] - specs[i].m * d.p[i] == pytest.approx(d.omega_sync, abs=1e-9)


def test_reference_power_stage1():
    specs = plant.ieee33_roster()
    assert sum(1 / s.m for s in specs.values()) == pytest.approx(28000.0)
    assert plant.reference_power(0.0, specs, specs) == 0.0
    load = plant.load_for_reference(0.1852, specs, specs)
    assert plant.reference_power(load, specs, specs) == pytest.approx(0.1852, rel=1e-12)
    # a round 4.89 MW stage load lands on the same value
    assert plant.reference_power(4892.0, specs, specs) == pytest.approx(0.1852, abs=5e-5)


@given(plants())
def test_reference_power_matches_direct_sum(case):
    specs, state = case
    direct = 1.06 * state.p_load / math.fsum(1 / specs[i].m for i in state.active_set)
    assert plant.reference_power(state.p_load, specs, state.active_set) == pytest.approx(direct, rel=1e-12)


def test_plm_cases():
    specs = _specs([0.2])
    st_ = PlantState({"d0": 3.0}, {"d0"}, 4.0)
    d = plant.dispatch(st_, specs)
    assert plant.plm(st_, specs, d) == pytest.approx(0.2 * d.p["d0"])

    specs = plant.ieee33_roster()
    st_ = PlantState({i: 314.5 for i in specs}, set(specs), 5000.0)
    d = plant.dispatch(st_, specs)
    assert plant.plm(st_, specs, d) == pytest.approx(314.5 - d.omega_sync, rel=1e-12)

    smaller = PlantState(st_.theta, set(specs) - {"19", "20", "21"}, 5000.0)
    assert plant.plm(smaller, specs) > plant.plm(st_, specs)


def test_plm_equals_reference_power_of_the_active_set():
    specs = plant.ieee33_roster()
    active = set(specs) - {"19", "20", "21"}
    st_ = PlantState({i: 314.0 + k * 0.01 for k, i in enumerate(specs)}, active, 3000.0)
    assert plant.plm(st_, specs) == pytest.approx(plant.reference_power(3000.0, specs, active), rel=1e-12)


def test_consensus_at_reference_synchronizes_frequency():
    specs = plant.ieee33_roster()
    ref = ReferenceSignal(100 * math.pi, 0.1852)
    load = plant.load_for_reference(ref.p_l, specs, specs)
    theta = {i: ref.omega_l + ref.p_l for i in specs}
    st_ = PlantState(theta, set(specs), load)
    d = plant.dispatch(st_, specs)
    assert d.omega_sync == pytest.approx(ref.omega_l, abs=1e-9)
    e = plant.error_coords(theta, ref, plant.plm(st_, specs, d))
    assert max(abs(v) for v in e.values()) <= 1e-9


def test_error_coords_fixed_point_and_bounds():
    ref = ReferenceSignal(100 * math.pi, 0.1852)
    e = plant.error_coords({"a": ref.omega_l + 0.3}, ref, 0.3)
    assert e == {"a": 0.0}
    rng = np.random.default_rng(0)
    theta = {str(i): ref.omega_l + ref.p_l + rng.uniform(-math.pi, math.pi) for i in range(17)}
    assert all(abs(v) <= math.pi for v in plant.error_coords(theta, ref, ref.p_l).values())


@given(st.dictionaries(st.text("abc", min_size=1, max_size=3), st.floats(-1e3, 1e3)),
       st.floats(300, 330), st.floats(-1, 1))
def test_error_coords_round_trip(theta, omega_l, plm_value):
    ref = ReferenceSignal(omega_l, 0.0)
    back = plant.theta_from_errors(plant.error_coords(theta, ref, plm_value), ref, plm_value)
    for i in theta:
        assert back[i] == pytest.approx(theta[i], abs=1e-12 * max(1.0, abs(theta[i]) + 330))


def test_roster_round_trip(tmp_path):
    specs = plant.ieee33_roster()
    p = tmp_path / "r.roster"
    p.write_text("# comment\n" + plant.format_roster(specs))
    assert plant.read_roster(p) == specs
    with pytest.raises(ValueError):
        plant.parse_roster("a 1 2\n")
    with pytest.raises(ValueError):
        plant.parse_roster("a -1\n")
