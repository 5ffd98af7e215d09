import itertools
from importlib import resources

import numpy as np
import pytest

from omnitrack.fuzzy import (
    DELTA_RANGE,
    ERROR_RANGE,
    LABELS,
    EmptyAggregateError,
    FouMf,
    FouPartition,
    FuzzyPartition,
    GainDeltas,
    RuleBase,
    TriMf,
    Type1Engine,
    Type2Engine,
    centroid_of_fou,
    km_centroid,
    write_control_surface,
)

# Independent transcription of the 49-rule gain-scheduling table.  Each
# cell reads "kp\ki\kd"; rows are e = NB..PB, columns de = NB..PB.  Kept
# as one block string so the audit below compares cell for cell against
# the shipped tables (147 label comparisons).
RULE_TRIPLES = """
PB\\NB\\PS PB\\NB\\NS PM\\NM\\NB PM\\NM\\NB PS\\NS\\NB ZO\\ZO\\NM ZO\\ZO\\PS
PB\\NB\\PS PB\\NB\\NS PM\\NM\\NB PS\\NS\\NM PS\\NS\\NM ZO\\ZO\\NS NS\\ZO\\ZO
PM\\NB\\ZO PM\\NM\\NM PM\\NS\\NM PS\\NS\\NM ZO\\ZO\\NS NS\\PS\\NS NS\\PS\\ZO
PM\\NM\\ZO PM\\NM\\NS PS\\NS\\NS ZO\\ZO\\NS NS\\PS\\NS NM\\PM\\NS NM\\PM\\ZO
PS\\NM\\ZO PS\\NS\\ZO ZO\\ZO\\ZO NS\\PS\\ZO NS\\PS\\ZO NM\\PM\\ZO NM\\PB\\ZO
PS\\ZO\\PB ZO\\ZO\\NS NS\\PS\\PS NM\\PS\\PS NM\\PM\\PS NM\\PB\\PS NB\\PB\\PB
ZO\\ZO\\PB ZO\\ZO\\PM NM\\PS\\PM NM\\PM\\PM NM\\PM\\PS NB\\PB\\PS NB\\PB\\PB
"""


def audit_tables():
    kp = np.zeros((7, 7), dtype=np.int8)
    ki = np.zeros((7, 7), dtype=np.int8)
    kd = np.zeros((7, 7), dtype=np.int8)
    rows = [r.split() for r in RULE_TRIPLES.strip().splitlines()]
    assert len(rows) == 7 and all(len(r) == 7 for r in rows)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            p, i_, d = cell.split("\\")
            kp[i, j] = LABELS.index(p)
            ki[i, j] = LABELS.index(i_)
            kd[i, j] = LABELS.index(d)
    return kp, ki, kd


# ------------------------------------------------------------ rule base


def test_rule_tables_match_audit_copy():
    kp, ki, kd = audit_tables()
    rules = RuleBase.default()
    assert np.array_equal(rules.kp, kp)
    assert np.array_equal(rules.ki, ki)
    assert np.array_equal(rules.kd, kd)


def test_bundled_rule_file_matches_default():
    path = resources.files("omnitrack").joinpath("data", "pid_rules.csv")
    shipped = RuleBase.from_csv(str(path))
    rules = RuleBase.default()
    for name, table in rules.tables().items():
        assert np.array_equal(shipped.tables()[name], table)


def test_rule_csv_round_trip(tmp_path):
    rules = RuleBase.default()
    rules.to_csv(tmp_path / "rules.csv")
    back = RuleBase.from_csv(tmp_path / "rules.csv")
    assert np.array_equal(back.kp, rules.kp)
    assert np.array_equal(back.ki, rules.ki)
    assert np.array_equal(back.kd, rules.kd)


def test_rule_csv_rejects_incomplete(tmp_path):
    rules = RuleBase.default()
    rules.to_csv(tmp_path / "rules.csv")
    lines = (tmp_path / "rules.csv").read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        RuleBase.from_csv(tmp_path / "short.csv")


# ----------------------------------------------------------- partitions


def test_membership_triangle_shape():
    mf = TriMf(-1.0, 0.0, 2.0)
    assert mf(0.0) == 1.0
    assert mf(-1.0) == 0.0
    assert mf(2.0) == 0.0
    assert mf(-0.5) == pytest.approx(0.5)
    assert mf(1.0) == pytest.approx(0.5)
    assert mf(3.0) == 0.0


def test_uniform_partition_crosses_at_half():
    part = FuzzyPartition.uniform(-1.0, 1.0)
    apexes = np.array([mf.apex for mf in part.mfs])
    assert apexes == pytest.approx(np.linspace(-1, 1, 7))
    # Adjacent sets overlap exactly at membership one half.
    mid = 0.5 * (apexes[2] + apexes[3])
    mu = part.fuzzify(mid)
    assert mu[2] == pytest.approx(0.5)
    assert mu[3] == pytest.approx(0.5)
    assert mu.sum() == pytest.approx(1.0)


def test_fuzzify_clamps_out_of_range():
    part = FuzzyPartition.uniform(-1.0, 1.0)
    assert np.array_equal(part.fuzzify(5.0), part.fuzzify(1.0))
    assert np.array_equal(part.fuzzify(-5.0), part.fuzzify(-1.0))
    assert part.fuzzify(1.0)[6] == 1.0


def test_fou_construction_and_containment():
    umf = TriMf(-1.0, 0.0, 1.0)
    fou = FouMf.from_umf(umf, height_scale=0.8, lag=0.25)
    xs = np.linspace(-1.2, 1.2, 201)
    assert np.all(fou.lower(xs) <= fou.upper(xs) + 1e-15)
    assert fou.lmf.left == pytest.approx(-0.75)
    assert fou.lmf.right == pytest.approx(0.75)
    assert fou.lower(0.0) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        FouMf.from_umf(umf, lag=1.0)
    with pytest.raises(ValueError):
        FouMf.from_umf(umf, height_scale=0.0)


# ------------------------------------------------------- type reduction


def brute_force_centroid_bounds(x, fl, fu):
    """Enumerate every lower/upper weight assignment (the oracle).

    The centroid is linear-fractional in each weight, so its extrema over
    the weight box sit at vertices; 2^n enumeration finds them exactly.
    """
    best_lo, best_hi = np.inf, -np.inf
    for choice in itertools.product((0, 1), repeat=len(x)):
        theta = np.where(choice, fu, fl)
        mass = theta.sum()
        if mass <= 0.0:
            continue
        y = float((x * theta).sum() / mass)
        best_lo = min(best_lo, y)
        best_hi = max(best_hi, y)
    return best_lo, best_hi


def test_centroid_bounds_match_enumeration():
    rng = np.random.default_rng(13)
    for _ in range(30):
        n = rng.integers(2, 11)
        x = np.sort(rng.uniform(-1.0, 1.0, n))
        fu = rng.uniform(0.05, 1.0, n)
        fl = fu * rng.uniform(0.0, 1.0, n)
        y_left, y_right = km_centroid(x, fl, fu)
        lo, hi = brute_force_centroid_bounds(x, fl, fu)
        assert y_left == pytest.approx(lo, abs=1e-6)
        assert y_right == pytest.approx(hi, abs=1e-6)
        assert y_left <= y_right + 1e-12


def test_centroid_bounds_degenerate_interval():
    # Equal lower and upper weights collapse the interval to the plain
    # weighted mean.
    x = np.array([-0.5, 0.0, 0.25, 0.75])
    w = np.array([0.2, 0.9, 0.4, 0.1])
    y_left, y_right = km_centroid(x, w, w)
    expected = float((x * w).sum() / w.sum())
    assert y_left == pytest.approx(expected, abs=1e-12)
    assert y_right == pytest.approx(expected, abs=1e-12)


def test_centroid_bounds_validation():
    x = np.array([0.0, 1.0])
    with pytest.raises(EmptyAggregateError):
        km_centroid(x, np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        km_centroid(x, np.array([0.5, 0.5]), np.array([0.1, 0.5]))
    with pytest.raises(ValueError):
        km_centroid(x, np.array([-0.1, 0.5]), np.array([0.5, 0.5]))


def test_fou_centroid_properties():
    umf = TriMf(-0.05, 0.0, 0.1)
    exact = (-0.05 + 0.0 + 0.1) / 3.0  # centroid of a triangle
    tight = FouMf.from_umf(umf, height_scale=1.0, lag=0.0)
    y_left, y_right = centroid_of_fou(tight, -0.1, 0.1)
    assert y_left == pytest.approx(y_right, abs=1e-12)
    assert y_left == pytest.approx(exact, abs=1e-4)  # grid discretization

    widths = []
    for lag in (0.1, 0.3, 0.6):
        fou = FouMf.from_umf(umf, height_scale=0.9, lag=lag)
        lo, hi = centroid_of_fou(fou, -0.1, 0.1)
        assert lo <= y_left + 1e-9 and hi >= y_right - 1e-9
        widths.append(hi - lo)
    assert widths == sorted(widths)  # more uncertainty, wider interval


# --------------------------------------------------------------- engines


def test_type1_outputs_stay_in_range():
    engine = Type1Engine()
    lo, hi = DELTA_RANGE
    for e in np.linspace(-1.3, 1.3, 21):
        for de in np.linspace(-1.3, 1.3, 21):
            out = engine.infer(e, de)
            for value in out:
                assert lo - 1e-12 <= value <= hi + 1e-12


def test_type1_center_output():
    out = Type1Engine().infer(0.0, 0.0)
    # Only the (ZO, ZO) rule fires at the origin: kp and ki get the ZO
    # set (centroid zero) while kd gets NS, whose centroid sits one
    # partition step below zero (-0.1/3).
    assert out.dkp == pytest.approx(0.0, abs=1e-12)
    assert out.dki == pytest.approx(0.0, abs=1e-12)
    assert out.dkd == pytest.approx(-0.1 / 3.0, abs=1e-4)


def test_type1_saturated_corner_signs():
    out = Type1Engine().infer(-1.0, -1.0)
    # Large negative error with negative trend: raise kp, lower ki, raise kd.
    assert out.dkp > 0.05
    assert out.dki < -0.05
    assert out.dkd > 0.0


def test_type1_returns_plain_floats():
    out = Type1Engine().infer(0.3, -0.7)
    assert isinstance(out, GainDeltas)
    assert all(isinstance(v, float) for v in out)


def test_type2_degenerate_equals_type1():
    t1 = Type1Engine()
    t2 = Type2Engine(height_scale=1.0, lag=0.0)
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(1000):
        e, de = rng.uniform(-1.0, 1.0, 2)
        a = t1.infer(e, de)
        b = t2.infer(e, de)
        worst = max(worst, *(abs(x - y) for x, y in zip(a, b)))
    assert worst < 1e-9


def test_type2_outputs_stay_in_range():
    engine = Type2Engine()
    lo, hi = DELTA_RANGE
    for e in np.linspace(-1.0, 1.0, 11):
        for de in np.linspace(-1.0, 1.0, 11):
            out = engine.infer(e, de)
            for value in out:
                assert lo - 1e-12 <= value <= hi + 1e-12


def test_type2_differs_from_type1_with_uncertainty():
    t1 = Type1Engine()
    t2 = Type2Engine(height_scale=1.0, lag=0.3)
    diffs = [
        abs(t1.infer(e, de).dkp - t2.infer(e, de).dkp)
        for e, de in ((0.4, -0.2), (0.8, 0.1), (-0.6, 0.5))
    ]
    assert max(diffs) > 1e-6  # the footprint genuinely changes the output


def test_resolution_insensitivity():
    width = DELTA_RANGE[1] - DELTA_RANGE[0]
    coarse = Type1Engine(resolution=1001)
    fine = Type1Engine(resolution=10001)
    for e, de in ((0.0, 0.0), (0.35, -0.15), (-0.9, 0.7), (1.0, 1.0)):
        a, b = coarse.infer(e, de), fine.infer(e, de)
        for x, y in zip(a, b):
            assert abs(x - y) < 1e-4 * width


def test_engine_inputs_expect_normalized_scale():
    engine = Type1Engine()
    lo, hi = ERROR_RANGE
    assert engine.error_partition.lo == lo
    assert engine.error_partition.hi == hi
    # Out-of-range inputs clamp rather than fail.
    assert engine.infer(50.0, -50.0) == engine.infer(hi, lo)


def test_control_surface_dump(tmp_path):
    engine = Type1Engine()
    path = tmp_path / "surface.csv"
    write_control_surface(engine, path, resolution=5)
    lines = path.read_text().splitlines()
    assert lines[0] == "e,de,dkp,dki,dkd"
    assert len(lines) == 1 + 25
    e, de, dkp, dki, dkd = (float(v) for v in lines[13].split(","))
    out = engine.infer(e, de)
    assert out.dkp == pytest.approx(dkp, abs=1e-12)
    assert out.dki == pytest.approx(dki, abs=1e-12)
    assert out.dkd == pytest.approx(dkd, abs=1e-12)
