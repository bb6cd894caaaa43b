from decimal import Decimal
from fractions import Fraction

import mpmath
from hypothesis import given
from hypothesis import strategies as st

from gapkit.report import CheckReport, Violation, dec20

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(finite)
def test_dec20_has_twenty_significant_digits(x):
    s = dec20(x)
    if x == 0:
        assert s == "0"
        return
    back = Decimal(s)
    assert abs(Fraction(back) - Fraction(x)) <= abs(Fraction(x)) * Fraction(1, 10**19)
    assert len(s.split("e")[0].lstrip("-").replace(".", "").lstrip("0")) <= 20


def test_dec20_accepts_exact_and_extended_values():
    assert dec20(Fraction(1, 3)) == "0.33333333333333333333"
    assert dec20(10**30 + 7) == "1e+30"
    with mpmath.workdps(40):
        assert dec20(mpmath.sqrt(2)) == "1.4142135623730950488"
    assert dec20(None) is None


def test_claimed_from_routes_failures():
    r = CheckReport("x", 1, 10, claimed_from=5)
    r.add(Violation(4, 1, 0, -1))
    assert r.passed and len(r.informational) == 1
    r.add(Violation(5, 1, 0, -1))
    assert not r.passed


@given(st.lists(st.tuples(st.integers(1, 100), finite), min_size=1, max_size=30), st.integers(1, 29))
def test_merge_equals_single_pass(items, cut):
    whole = CheckReport("x", 1, 100)
    left, right = CheckReport("x", 1, 50), CheckReport("x", 51, 100)
    for i, (n, m) in enumerate(items):
        whole.note_margin(m, n)
        whole.note_max("m", m, n)
        (left if i < cut else right).note_margin(m, n)
        (left if i < cut else right).note_max("m", m, n)
    merged = left.merge(right)
    assert (merged.min_margin, merged.min_margin_n) == (whole.min_margin, whole.min_margin_n)
    assert merged.maxima == whole.maxima


def test_json_round_trip():
    r = CheckReport("x", 1, 10, 2, [Violation(3, 1.5, 1, -0.5, note="a")], [Violation(1, 2, 1, -1)], 0.25, 7, 1, {"k": (0.5, 4)}, {"c": 3})
    assert CheckReport.from_json(r.to_json()).to_json() == r.to_json()
