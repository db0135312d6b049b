"""Smoke test for the `salem` extension module.

Build it first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

from fractions import Fraction

import salem


def main():
    f = salem.SalemFunction("q=2; p=3/10,7/10")
    assert f.q == 2
    assert f.weights == [Fraction(3, 10), Fraction(7, 10)]
    value, depth, exact = f.evaluate(Fraction(1, 2))
    assert (value, depth, exact) == (0.3, 1, True)
    assert f("0.5") == 0.3
    assert f.integral() == Fraction(3, 10)
    assert f.increment([1, 0]) == Fraction(21, 100)

    ident = salem.SalemFunction("q=2; p=1/2,1/2")
    assert abs(ident(Fraction(1, 3)) - 1 / 3) < 1e-12
    assert ident.monotonicity() == "StrictlyIncreasing"

    e = salem.DigitExpansion("q10:[2,5]:zeros")
    assert e.value() == Fraction(1, 4)
    assert str(e.shift(1)) == "q10:[5]:zeros"
    assert e.dual() == salem.DigitExpansion("q10:[2,4]:max")
    assert e.generalized_shift(2).value() == Fraction(1, 5)
    assert salem.expansion_of(Fraction(1, 4), "q10", 5).digits == [2, 5]

    jump = f.jump(salem.DigitExpansion("q2:[1]:zeros"))
    assert jump is None

    perm = salem.SalemFunction("q=3; p=1/6,1/2,1/3; seq=perm(2 1)")
    x = salem.DigitExpansion("q3:[1,2,0,1]:zeros")
    assert abs(perm.residual(x, 1)) < 1e-12

    assert salem.make_schedule([2, 3]) == [2, 2]
    assert salem.sublevel_measure(2, [1] * 5, Fraction(1, 3)) == Fraction(1, 3)
    assert salem.sublevel_measure(3, [2, 2, 2], "1/4") == Fraction(1, 4)
    assert salem.comparison_measure(2, 2, 1) == Fraction(1, 2)
    est, half = salem.monte_carlo(2, 3, Fraction(1, 3), 100000, 7)
    assert abs(est - 1 / 3) <= half + 1e-3

    rows = salem.measure("family = IterShift\nq = 2\nn = 1..3\nx = 1/3\n")
    assert [r[3] for r in rows] == [Fraction(1, 3)] * 3
    assert all(r[4] == "exact" for r in rows)

    checks = salem.verify("lemma1")
    assert checks and all(passed for _, passed, _ in checks)

    try:
        salem.SalemFunction("q=2; p=0.3,0.6")
    except ValueError:
        pass
    else:
        raise AssertionError("bad weights accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
