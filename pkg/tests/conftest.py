import math
from fractions import Fraction

import pytest

from nilmix.catalog import CAT, CUBIC, CUBIC_POLY, block_diag, get_system
from nilmix.exactlin import RationalMatrix

# frozen oracle values (mpmath at 40 digits; see tests/test_oracles.py which
# recomputes and checks them)
CHI_CAT = 0.9624236501192069          # log((3 + sqrt 5) / 2)
PHI_INV = 0.6180339887498949          # (sqrt 5 - 1) / 2
CUBIC_MODULI = (0.4450418679126288, 1.2469796037174670, 1.8019377358048383)
CUBIC_EXPONENTS = (-0.8095869160447127, 0.2207243102830330, 0.5888626057616797)
RHO_CUBIC = 0.8095869160447127
CHI_CUBIC = 0.2207243102830330
GOLDEN_SOLVE_HALF = 0.5074624196925738   # 1 / sqrt(2 pi phi_inv)


@pytest.fixture
def cat():
    return CAT


@pytest.fixture
def cubic():
    return CUBIC


@pytest.fixture
def heis_system():
    return get_system("heisenberg-cat")
