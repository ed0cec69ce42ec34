import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainent.chain import ChainConfig, ControlSchedule
from chainent.modes import SqueezeDecomposition, extract_squeeze, final_moments, initial_moments
from chainent.thermo import (
    chain_energy,
    dissipated_work_mode,
    max_entanglement_temperature,
    thermal_factor,
    total_dissipated_work,
)


def test_dissipated_work_examples():
    assert dissipated_work_mode(1.0, 0.0) == 0.0
    assert dissipated_work_mode(1.0, 1.0) == pytest.approx(1.3810978455418157, abs=1e-12)
    w = dissipated_work_mode(1.0, 0.1)
    assert w == pytest.approx(0.010033377809537924, abs=1e-12)
    assert w == pytest.approx(0.01, rel=0.01)


def test_work_asymptotics():
    for r in (0.01, 0.05):
        assert dissipated_work_mode(1.0, r) == pytest.approx(r**2, rel=0.01)
    # relative gap is ~2 e^{-2r}: 1.35% at r = 2.5, under 1% from r = 2.65
    assert dissipated_work_mode(1.0, 2.5) == pytest.approx(np.exp(5.0) / 4, rel=0.014)
    for r in (2.65, 4.0):
        assert dissipated_work_mode(1.0, r) == pytest.approx(np.exp(2 * r) / 4, rel=0.01)


def test_total_work_report():
    cfg = ChainConfig(8)
    rep = total_dissipated_work(SqueezeDecomposition(np.ones(8), np.zeros(8), np.zeros(8)), cfg)
    assert rep.dissipated_work == 0.0 and rep.ground_energy == 4.0
    rep = total_dissipated_work(SqueezeDecomposition(np.ones(8), np.full(8, 0.4), np.zeros(8)), cfg)
    assert rep.dissipated_work == pytest.approx(1.3497397852193785, abs=1e-12)
    assert rep.mean_squeezing == pytest.approx(0.4)
    assert rep.energy == pytest.approx(4 + 1.3497397852193785)


@given(r=st.lists(st.floats(0, 3), min_size=4, max_size=4), k=st.integers(0, 3), dr=st.floats(0, 1))
def test_work_monotone_in_squeezing(r, k, dr):
    cfg = ChainConfig(4)
    r = np.array(r)
    more = r.copy()
    more[k] += dr
    a = total_dissipated_work(SqueezeDecomposition(np.ones(4), r, np.zeros(4)), cfg).dissipated_work
    b = total_dissipated_work(SqueezeDecomposition(np.ones(4), more, np.zeros(4)), cfg).dissipated_work
    assert b >= a


def test_chain_energy_ground_and_conservation():
    cfg = ChainConfig(8)
    assert chain_energy(initial_moments(cfg), cfg, 0.0) == 4.0
    m = final_moments(initial_moments(cfg), cfg, ControlSchedule(((3.0, 0.05), (1.0, 0.0)), 0.05))
    e0 = chain_energy(m, cfg, 0.03)
    m2 = final_moments(m, cfg, ControlSchedule(((37.0, 0.03),), 0.05))
    assert chain_energy(m2, cfg, 0.03) == pytest.approx(e0, rel=1e-10)


def test_work_energy_identity_for_cyclic_protocol():
    cfg = ChainConfig(8)
    rng = np.random.default_rng(5)
    sched = ControlSchedule.uniform(np.r_[rng.choice([0.0, 0.05], 30), 0.0], 20.0, 0.05)
    m = final_moments(initial_moments(cfg), cfg, sched)
    rep = total_dissipated_work(extract_squeeze(m, cfg, 0.0), cfg)
    assert abs(chain_energy(m, cfg, 0.0) - rep.energy) <= 1e-6 * 4


def test_thermal_factor():
    assert thermal_factor(0.0) == 1.0
    assert thermal_factor(0.5, 1.0) == pytest.approx(1.3130352854993313, abs=1e-12)
    assert thermal_factor(100.0, 1.0) == pytest.approx(200.0016666638889, rel=1e-10)
    ts = np.linspace(0.05, 5, 50)
    f = np.array([thermal_factor(t) for t in ts])
    assert np.all(np.diff(f) > 0) and np.all(f > 1)
    assert thermal_factor(1e-3) == 1.0 + 2 * np.exp(-1000.0)


def test_max_entanglement_temperature():
    assert max_entanglement_temperature(0.4) == pytest.approx(2.442493003573089, rel=1e-10)
    assert max_entanglement_temperature(1.0) == pytest.approx(27.29602213696656, rel=1e-10)
    assert max_entanglement_temperature(1e-3) < 0.2
    rs = np.linspace(0.05, 2, 20)
    assert np.all(np.diff([max_entanglement_temperature(r) for r in rs]) > 0)
    with pytest.raises(ValueError):
        max_entanglement_temperature(0.0)
