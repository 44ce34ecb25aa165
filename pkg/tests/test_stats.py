import json
import math

import numpy as np
import pytest

from heatflow.errors import RangeError
from heatflow.special import ClassicalGrid, classical_locations
from heatflow.stats import LAMBDAS, equilibrium_deviation, gap_report, lehmer_scan
from heatflow.zeros import ZeroConfiguration, parse_zero_table


def grid_config(n):
    return ZeroConfiguration(0.0, (1, n), classical_locations(np.arange(1, n + 1)))


def test_grid_source_is_picket_fence():
    r = gap_report(grid_config(500), None, (1, 500))
    assert np.all(r.normalized_gaps == 1.0)
    assert r.variance == 0.0 and r.mean == 1.0


def test_fraction_below_on_table(table):
    r = gap_report(table, None, (1, 100000))
    fb = r.summary()["fraction_below"]
    assert fb["0.77"] > 0
    assert len(str(fb["0.77"]).replace("0.", "", 1).lstrip("0")) <= 4
    x = 2 * np.asarray(table.gammas)
    g = np.diff(x)
    # oracle: loop over dyadic index blocks [2^m, 2^{m+1}), density at the block start
    below = 0
    m = 0
    while 2**m < 100000:
        a, b = 2**m, min(2 ** (m + 1), 100000)
        dens = math.log(x[a - 1] / (4 * math.pi)) / (4 * math.pi)
        below += sum(1 for v in g[a - 1:b - 1] if v * dens < 0.77)
        m += 1
    assert r.fraction_below[0.77] == pytest.approx(below / len(g), abs=1e-15)
    # per-gap local density gives a nearby value
    local = g * np.log(x[:-1] / (4 * math.pi)) / (4 * math.pi)
    assert abs(r.fraction_below[0.77] - np.mean(local < 0.77)) < 0.05


def test_mean_normalized_gap_decade(table):
    r = gap_report(table, None, (1000, 10000))
    assert abs(r.mean - 1) <= 0.02
    # telescoping oracle: total span over classical span is close to the mean ratio
    x = 2 * table.gammas
    xi = classical_locations(np.array([1000, 10000]))
    assert abs(r.mean - (x[9999] - x[999]) / (xi[1] - xi[0])) < 0.01


def test_fraction_below_monotone_and_saturates(table):
    r = gap_report(table, None, (1, 20000), LAMBDAS + (10.0,))
    vals = [r.fraction_below[k] for k in sorted(r.fraction_below)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert r.fraction_below[10.0] == 1.0
    assert np.all(r.gaps > 0) and np.all(r.normalized_gaps > 0)


def test_gap_report_exports(table):
    r = gap_report(table, None, (1, 50))
    lines = r.to_csv().splitlines()
    assert lines[0] == "j,gap,normalized_gap" and len(lines) == 50
    assert float(lines[1].split(",")[1]) == r.gaps[0]
    d = json.loads(r.to_json())
    assert d["count"] == 49 and set(d["fraction_below"]) == {"0.5", "0.6", "0.7", "0.77", "0.9", "1"}


def test_gap_report_range_errors(table):
    with pytest.raises(RangeError):
        gap_report(table, None, (0, 10))
    with pytest.raises(RangeError):
        gap_report(table, None, (1, table.count + 1))
    with pytest.raises(RangeError):
        gap_report(grid_config(10), None, (1, 11))


def test_lehmer_threshold_zero(table):
    assert lehmer_scan(table, 10, 0.0) == []


def test_lehmer_progression():
    tab = parse_zero_table("\n".join(str(10 + 0.5 * k) for k in range(200)))
    assert lehmer_scan(tab, 10, 0.999) == []


def test_lehmer_finds_famous_pair(table):
    c = lehmer_scan(table, 10, 0.3)
    assert c
    assert all(0 < a.quality < 0.3 and a.gap > 0 for a in c)
    assert [a.quality for a in c] == sorted(a.quality for a in c)
    near = [a for a in c if abs(a.x / 2 - 7005.1) < 0.2]
    assert len(near) == 1
    j = near[0].j
    assert table.gammas[j] - table.gammas[j - 1] == pytest.approx(near[0].gap / 2, rel=1e-12)


def test_lehmer_needs_enough_zeros():
    with pytest.raises(RangeError):
        lehmer_scan(parse_zero_table("1\n2\n3\n"), 2, 0.5)


def test_equilibrium_deviation_grid():
    assert equilibrium_deviation(grid_config(300), None, (1, 300)) == 0.0


def test_equilibrium_deviation_doubled_gaps():
    xi = classical_locations(np.arange(1, 101))
    c = ZeroConfiguration(0.0, (1, 100), 2 * xi)
    assert equilibrium_deviation(c, None, (1, 100)) == pytest.approx(1.25, rel=1e-12)


def test_equilibrium_deviation_decades(table):
    vals = [equilibrium_deviation(table, None, r) for r in ((1, 10), (10, 100), (100, 1000), (1000, 10000))]
    assert all(math.isfinite(v) and v > 0 for v in vals)


def test_equilibrium_deviation_translation_invariant(table):
    n = 400
    xi = classical_locations(np.arange(1, n + 1))
    x = 2 * np.asarray(table.gammas[:n])
    a = equilibrium_deviation(ZeroConfiguration(0.0, (1, n), x, False), ClassicalGrid((1, n), xi, False), (1, n))
    b = equilibrium_deviation(
        ZeroConfiguration(0.0, (1, n), x - 500.0, False), ClassicalGrid((1, n), xi - 500.0, False), (1, n)
    )
    assert a == pytest.approx(b, rel=1e-9)
