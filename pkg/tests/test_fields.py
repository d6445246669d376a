import math

import numpy as np
import pytest

from lilfields.fields import (IID, CoefficientField, GSpec, HermiteFunctional, HolderOfLinear, Linear, ModelError,
                              PairCoefficientField, Volterra, holder_center, innovation_block, model_from_dict,
                              model_to_dict, read_grid_binary, simulate_block, simulate_coupled_pair,
                              write_grid_binary, write_grid_csv)
from lilfields.innovations import CapabilityError, InnovationSpec
from lilfields.lattice import Rect, sup_norm

NORMAL = InnovationSpec("standard_normal")
RADEMACHER = InnovationSpec("rademacher")


def linear_example():
    return Linear(CoefficientField({(0, 0): 1.0, (1, 0): 0.5}, 2), NORMAL)


def test_linear_single_coefficient_values():
    model = Linear(CoefficientField({(0, 0): 2.0}, 2), RADEMACHER)
    vals = simulate_block(model, Rect((1, 1), (8, 8)), 3).values
    assert set(np.unique(vals)) <= {-2.0, 2.0}


def test_linear_matches_definition():
    model = linear_example()
    block = Rect((0, 0), (5, 4))
    grid = simulate_block(model, block, 12)
    eps = innovation_block(NORMAL, block.inflate(1), 12)
    for j in block.points():
        ref = eps[j[0] + 1, j[1] + 1] + 0.5 * eps[j[0] + 1 - 1, j[1] + 1]
        assert grid.value_at(j) == pytest.approx(ref, abs=1e-15)


def test_volterra_matches_definition():
    pairs = PairCoefficientField({((1, 0), (0, 1)): 1.0}, 2)
    model = Volterra(pairs, NORMAL)
    block = Rect((2, -1), (6, 3))
    grid = simulate_block(model, block, 4)
    eps = innovation_block(NORMAL, block.inflate(1), 4)
    lo = block.inflate(1).lo
    for j in block.points():
        e1 = eps[j[0] - 1 - lo[0], j[1] - lo[1]]
        e2 = eps[j[0] - lo[0], j[1] - 1 - lo[1]]
        assert grid.value_at(j) == e1 * e2


def test_block_consistency():
    model = linear_example()
    big = simulate_block(model, Rect((0, 0), (9, 9)), 21)
    small = simulate_block(model, Rect((3, 2), (6, 8)), 21)
    np.testing.assert_array_equal(big.sub_grid(small.rect).values, small.values)


def test_iid_mean_clt():
    model = IID(NORMAL, 2)
    block = Rect((1, 1), (32, 32))
    inside = sum(abs(simulate_block(model, block, s).values.mean()) <= 4 / 32 for s in range(100))
    assert inside >= 95


def test_coupled_pair_locality():
    model = linear_example()
    block = Rect((0, 0), (9, 9))
    a, b = simulate_coupled_pair(model, block, 5, (4, 4))
    diff = np.argwhere(a.values != b.values)
    assert len(diff) >= 1
    for idx in diff:
        assert sup_norm(tuple(int(c) - 4 for c in idx)) <= model.support_radius
    single = Linear(CoefficientField({(0, 0): 1.0}, 2), NORMAL)
    a, b = simulate_coupled_pair(single, block, 5, (4, 4))
    assert [tuple(i) for i in np.argwhere(a.values != b.values)] == [(4, 4)]
    iid = IID(NORMAL, 2)
    a, b = simulate_coupled_pair(iid, block, 5, (40, 40))
    np.testing.assert_array_equal(a.values, b.values)


def test_diagonal_volterra_rejected():
    with pytest.raises(ModelError):
        PairCoefficientField({((0, 0), (0, 0)): 1.0}, 2)


def test_hermite_needs_unit_variance():
    with pytest.raises(ModelError):
        HermiteFunctional(CoefficientField({(0,): 0.5}, 1), (1.0,))
    with pytest.raises(ModelError):
        HermiteFunctional(CoefficientField({(0,): 1.0}, 1), (1.0,), RADEMACHER)


def test_holder_centering():
    ident = GSpec("clip", lo=-1e9, hi=1e9)
    c, se = holder_center(ident, CoefficientField({(0,): 1.0}, 1), RADEMACHER)
    assert abs(c) <= 3 * se + 1e-12
    c, _ = holder_center(GSpec("abs_power", gamma=1.0), CoefficientField({(0,): 1.0}, 1), NORMAL)
    assert c == pytest.approx(math.sqrt(2 / math.pi), abs=1e-10)
    assert holder_center(GSpec("signed_power", gamma=1.0), CoefficientField({(0,): 1.0}, 1), NORMAL)[0] == 0.0
    with pytest.raises(CapabilityError):
        GSpec("relu")


def test_holder_field_is_centered():
    model = HolderOfLinear(CoefficientField({(0,): 1.0, (1,): 0.5}, 1), NORMAL, GSpec("abs_power", gamma=0.5))
    vals = simulate_block(model, Rect((1,), (200_000,)), 2).values
    assert abs(vals.mean()) < 5 * vals.std() / math.sqrt(vals.size) * 3


def test_grid_round_trip(tmp_path):
    grid = simulate_block(linear_example(), Rect((-1, 2), (3, 5)), 1)
    write_grid_binary(grid, tmp_path / "g.bin")
    back = read_grid_binary(tmp_path / "g.bin")
    assert back.origin == grid.origin
    np.testing.assert_array_equal(back.values, grid.values)
    write_grid_csv(grid, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "i1,i2,value" and len(lines) == 1 + grid.values.size
    assert float(lines[1].split(",")[2]) == grid.value_at((-1, 2))


def test_model_dict_round_trip():
    models = [
        IID(RADEMACHER, 3),
        linear_example(),
        Volterra(PairCoefficientField({((1, 0), (0, 1)): 1.0}, 2), NORMAL),
        HermiteFunctional(CoefficientField({(0,): 0.6, (1,): 0.8}, 1), (0.0, 1.0)),
        HolderOfLinear(CoefficientField({(0,): 1.0}, 1), NORMAL, GSpec("abs_power", gamma=0.5)),
    ]
    for m in models:
        again = model_from_dict(model_to_dict(m))
        assert model_to_dict(again) == model_to_dict(m)
