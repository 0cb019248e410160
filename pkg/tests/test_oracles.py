"""Recompute the frozen oracle constants used across the suite.

Every hand-frozen number in conftest.py is re-derived here from an
independent high-precision source (mpmath root finding / closed forms),
so a drift in either place fails loudly.
"""

import math

import mpmath
import pytest

from conftest import (
    CHI_CAT,
    CHI_CUBIC,
    CUBIC_EXPONENTS,
    CUBIC_MODULI,
    GOLDEN_SOLVE_HALF,
    PHI_INV,
    RHO_CUBIC,
)


def test_cat_exponent_oracle():
    with mpmath.workdps(40):
        val = mpmath.log((3 + mpmath.sqrt(5)) / 2)
        assert abs(float(val) - CHI_CAT) < 1e-15


def test_phi_inverse_oracle():
    with mpmath.workdps(40):
        assert abs(float((mpmath.sqrt(5) - 1) / 2) - PHI_INV) < 1e-16


def test_cubic_root_oracle():
    with mpmath.workdps(50):
        roots = mpmath.polyroots([1, -1, -2, 1], maxsteps=100, extraprec=100)
        moduli = sorted(float(abs(r)) for r in roots)
        for got, ref in zip(moduli, CUBIC_MODULI):
            assert abs(got - ref) < 1e-14
        exps = sorted(float(mpmath.log(abs(r))) for r in roots)
        for got, ref in zip(exps, CUBIC_EXPONENTS):
            assert abs(got - ref) < 1e-14
    assert RHO_CUBIC == pytest.approx(-CUBIC_EXPONENTS[0], abs=1e-15)
    assert CHI_CUBIC == pytest.approx(CUBIC_EXPONENTS[1], abs=1e-15)


def test_golden_divisor_oracle():
    with mpmath.workdps(40):
        val = 1 / mpmath.sqrt(2 * mpmath.pi * (mpmath.sqrt(5) - 1) / 2)
        assert abs(float(val) - GOLDEN_SOLVE_HALF) < 1e-15


def test_cubic_symmetric_functions():
    # the three signed roots rebuild x^3 - x^2 - 2x + 1: confirms the moduli
    # belong to that polynomial and not a nearby one
    with mpmath.workdps(50):
        roots = mpmath.polyroots([1, -1, -2, 1])
        e1 = sum(roots)
        e2 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2]
        e3 = roots[0] * roots[1] * roots[2]
        assert abs(complex(e1).real - 1) < 1e-30
        assert abs(complex(e2).real + 2) < 1e-30
        assert abs(complex(e3).real + 1) < 1e-30
