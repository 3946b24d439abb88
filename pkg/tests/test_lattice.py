import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from zbdt.lattice import (
    BdtLattice,
    LatticeError,
    ZbdtLattice,
    ZbdtParams,
    node_yield,
    price_bond,
    price_bond_bdt,
    price_bond_zbdt,
    rollback,
)

from conftest import PUBLISHED_PARAMS, SCENARIOS, pct_levels


def random_levels(rng, n, lo=0.004, hi=0.12):
    levels = []
    for i in range(n):
        base = rng.uniform(lo, hi / 3)
        sig = rng.uniform(0.02, 0.4)
        levels.append(base * np.exp(2 * sig * np.arange(i + 1)))
    return levels


seeds = st.integers(0, 2**32 - 1)


def test_one_period_discount():
    lat = BdtLattice([[0.0136]])
    assert price_bond(lat, 1).root == pytest.approx(100 / 1.0136, abs=1e-12)
    assert round(price_bond(lat, 1).root, 4) == 98.6582


def test_reference_bdt_bond_grids(tables, published_bdt):
    # rates are given to 0.005pp; prices fall in every rate, so shifting all
    # rates by -/+0.005pp brackets what the unrounded grid would price to
    for s in SCENARIOS:
        grid = tables[s]["bdt_rates"]
        hi = price_bond(BdtLattice([[(r - 0.005) / 100 for r in lv] for lv in grid]), 5)
        lo = price_bond(BdtLattice([[(r + 0.005) / 100 for r in lv] for lv in grid]), 5)
        assert price_bond(published_bdt[s], 5).root == pytest.approx(tables[s]["bdt_bonds"][0][0], abs=0.01)
        for i, row in enumerate(tables[s]["bdt_bonds"]):
            row = np.asarray(row)
            assert np.all(row + 0.005 >= lo.layers[i]), (s, i)
            assert np.all(row - 0.005 <= hi.layers[i]), (s, i)


def test_reference_zbdt_root_and_rail_at_nominal_params(tables, published_zbdt):
    # the reference ZBDT grid does not reprice under p=0.02, q=0.07: the root
    # lands 0.2 to 0.36 above the tabulated price and the first rail node 0.09
    # below it.  Recorded here so a change in pricing rules shows up.
    pl = price_bond_zbdt(published_zbdt["I"], 5)
    assert pl.root == pytest.approx(84.8257, abs=1e-4)
    assert pl.node(1, 0) == pytest.approx(98.667, abs=1e-3)


def test_rail_node_rule():
    prm = ZbdtParams(0.02, 0.07, 0.0025)
    lat = ZbdtLattice([[0.0136], [0.0113, 0.0421]], prm)
    pl = price_bond(lat, 2)
    b1 = 100 / 1.0113
    assert pl.node(1, 0) == pytest.approx(100 / 1.0025, rel=1e-15)
    want = (prm.p_hat * (100 / 1.0113 + 100 / 1.0421) + prm.p * 100 / 1.0025) / 1.0136
    assert pl.root == pytest.approx(want, rel=1e-15)
    pl3 = price_bond(ZbdtLattice([[0.0136], [0.0113, 0.0421], [0.01, 0.03, 0.09]], prm), 3)
    rail2 = 100 / 1.0025
    assert pl3.node(1, 0) == pytest.approx((prm.q * pl3.node(2, 1) + (1 - prm.q) * rail2) / 1.0025, rel=1e-15)
    assert b1 > 0


def test_terminal_layer_and_bounds():
    rng = np.random.default_rng(0)
    lat = ZbdtLattice(random_levels(rng, 5), ZbdtParams(0.05, 0.1, 0.001))
    pl = price_bond(lat, 5, face=100)
    assert_array_equal(pl.layers[5], 100.0)
    assert pl.rail[5] == 100.0 and math.isnan(pl.rail[0])
    for layer in pl.layers:
        assert np.all((layer > 0) & (layer <= 100))


@pytest.mark.parametrize("price,m,want", [(98.6582, 1, 0.0136), (100.0, 3, 0.0)])
def test_node_yield(price, m, want):
    assert node_yield(price, m) == pytest.approx(want, abs=1e-6)


def test_node_yield_five_year():
    assert node_yield(84.53, 5) == pytest.approx((100 / 84.53) ** 0.2 - 1, rel=1e-15)
    assert 0.0341 < node_yield(84.53, 5) < 0.0342
    with pytest.raises(ValueError):
        node_yield(0.0, 2)


def test_errors():
    lat = BdtLattice([[0.01], [0.01, 0.02]])
    with pytest.raises(LatticeError):
        price_bond(lat, 3)
    with pytest.raises(LatticeError):
        price_bond(lat, 0)
    with pytest.raises(LatticeError):
        BdtLattice([[0.01], [0.02, 0.01]])
    with pytest.raises(LatticeError):
        BdtLattice([[0.01], [0.01]])
    with pytest.raises(LatticeError):
        ZbdtLattice([[0.01], [0.002, 0.02]], ZbdtParams(x0=0.0025))
    with pytest.raises(TypeError):
        price_bond_zbdt(lat, 1)
    with pytest.raises(ValueError):
        ZbdtParams(p=0.0)
    with pytest.raises(LatticeError):
        rollback(ZbdtLattice([[0.01], [0.01, 0.02]], ZbdtParams()), np.ones(3), None, 2)


def test_rates_are_immutable():
    lat = BdtLattice([[0.01], [0.01, 0.02]])
    with pytest.raises(ValueError):
        lat.rates[1][0] = 0.5


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_vanishing_p_matches_bdt(seed):
    rng = np.random.default_rng(seed)
    levels = random_levels(rng, 5)
    b = price_bond(BdtLattice(levels), 5)
    z = price_bond(ZbdtLattice(levels, ZbdtParams(1e-300, 0.3, 0.001)), 5)
    for lb, lz in zip(b.layers, z.layers):
        assert_array_equal(lb, lz)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 6), st.data())
def test_single_rate_bump_lowers_root(seed, n, data):
    rng = np.random.default_rng(seed)
    levels = random_levels(rng, n)
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, i))
    bumped = [lvl.copy() for lvl in levels]
    bumped[i][j] *= 1.0 + 1e-9 if j < i else 1.01
    if j < i and not bumped[i][j] < bumped[i][j + 1]:
        return
    for make in (BdtLattice, lambda lv: ZbdtLattice(lv, ZbdtParams(0.03, 0.1, 0.001))):
        assert price_bond(make(bumped), n).root < price_bond(make(levels), n).root


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_layer_prices_fall_with_state(seed):
    rng = np.random.default_rng(seed)
    pl = price_bond(BdtLattice(random_levels(rng, 5)), 5)
    for layer in pl.layers[:-1]:
        assert np.all(np.diff(layer) <= 0)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(1e-4, 0.3), st.floats(1e-3, 0.9))
def test_rail_dominance(seed, p, q):
    rng = np.random.default_rng(seed)
    levels = random_levels(rng, 5)
    x0 = 0.5 * min(lvl[0] for lvl in levels)
    b = price_bond(BdtLattice(levels), 5).root
    z = price_bond(ZbdtLattice(levels, ZbdtParams(p, q, x0)), 5).root
    assert z > b


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-12, 1 - 1e-12), st.floats(1e-12, 1 - 1e-12))
def test_branch_weights_sum_to_one(p, q):
    lat = ZbdtLattice([[0.02], [0.01, 0.03], [0.01, 0.02, 0.04]], ZbdtParams(p, q, 0.001))
    bdt = BdtLattice([[0.02], [0.01, 0.03]])
    for i in range(lat.periods):
        for j in range(0 if i else 1, i + 2):
            assert sum(w for _, w in lat.branches(i, j)) == 1.0
    for i in range(bdt.periods):
        for j in range(1, i + 2):
            assert sum(w for _, w in bdt.branches(i, j)) == 1.0


def test_equality():
    a = BdtLattice([[0.01], [0.01, 0.02]])
    assert a == BdtLattice([[0.01], [0.01, 0.02]])
    assert a != ZbdtLattice([[0.01], [0.01, 0.02]], ZbdtParams())
