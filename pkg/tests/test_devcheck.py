import math

import numpy as np
import pytest

from lilfields.devcheck import (bercu_touati_bound, check_bercu_touati, check_freedman, check_maximal_ergodic,
                                ergodic_bound, freedman_bound, log_power_primitive)
from lilfields.fields import IID
from lilfields.innovations import CapabilityError, InnovationSpec

RADEMACHER = InnovationSpec("rademacher")
NORMAL = InnovationSpec("standard_normal")


def test_bercu_touati_single_step():
    rep = check_bercu_touati(RADEMACHER, 1, [0.5, 1e6], 2.0, 2000, 1)
    assert rep.empirical[0] == 1.0 and rep.bound[0] == pytest.approx(2 * math.exp(-1 / 24))
    assert rep.empirical[1] == 0.0 and rep.verdict


def test_freedman_trivial_points():
    rep = check_freedman(RADEMACHER, 1, [0.0, 2.0], 1.0, 2000, 2)
    assert rep.empirical == [1.0, 0.0] and rep.bound[0] == 2.0 and rep.verdict


def test_freedman_needs_bounded_law():
    with pytest.raises(CapabilityError):
        check_freedman(NORMAL, 4, [1.0], 4.0, 100, 0)


def test_freedman_bound_decreasing():
    x = np.linspace(0, 50, 400)
    assert np.all(np.diff(freedman_bound(x, 64.0, 1.0)) < 0)
    assert np.all(np.diff(bercu_touati_bound(x, 64.0, 64.0)) < 0)


def test_log_power_primitive_against_quadrature():
    from scipy import integrate

    for m in range(4):
        for u in (1.0, 2.5, 40.0):
            ref = integrate.quad(lambda t: math.log(t) ** m, 1, u)[0]
            assert float(log_power_primitive(u, m)) == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_ergodic_bound_constant_field():
    c, y = 2.0, 1.5
    assert ergodic_bound(np.full(10, c), y, 1) == pytest.approx(2 * c / y - 1)
    rep = check_maximal_ergodic(lambda block, seed: np.full(block.extents, c), 1, 16, [y, 10.0], 20, 0)
    assert rep.empirical == [1.0, 0.0] and rep.verdict


def test_ergodic_rejects_negative_values():
    with pytest.raises(ValueError):
        check_maximal_ergodic(IID(NORMAL, 1), 1, 8, [1.0], 5, 0, transform="none")


def test_suites_pass_small():
    grids = [
        check_bercu_touati(NORMAL, 100, np.linspace(5, 50, 10), 100.0, 20_000, 3),
        check_freedman(RADEMACHER, 64, np.linspace(4, 32, 8), 64.0, 20_000, 4),
        check_maximal_ergodic(IID(NORMAL, 2), 2, 32, [1.0, 2.0, 3.0, 4.0], 400, 5),
    ]
    for rep in grids:
        assert rep.verdict
        assert all(a >= b for a, b in zip(rep.empirical, rep.empirical[1:]))


def test_report_serialization():
    rep = check_freedman(RADEMACHER, 8, [1.0, 2.0], 8.0, 500, 1)
    assert '"verdict": true' in rep.to_json()
    lines = rep.to_csv().splitlines()
    assert lines[0] == "check,point,empirical,se,bound,pass" and len(lines) == 3
