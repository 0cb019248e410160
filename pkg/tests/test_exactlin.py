import math
from fractions import Fraction

import numpy as np
import pytest

from nilmix.exactlin import (
    IntPolynomial,
    PrecisionError,
    RationalMatrix,
    char_poly,
    cyclotomic_polynomial,
    factor_over_q,
    integer_kernel,
    inverse_totient,
    is_cyclotomic,
    lyapunov_data,
    primary_decomposition,
    rational_kernel,
)

from conftest import CHI_CAT, CUBIC_EXPONENTS


def poly(*coeffs):
    return IntPolynomial(coeffs)


# ---------------------------------------------------------------------------
# char_poly
# ---------------------------------------------------------------------------

def test_char_poly_cat(cat):
    assert char_poly(cat) == poly(1, -3, 1)


def test_char_poly_identity3():
    p = char_poly(RationalMatrix.identity(3))
    assert p == poly(-1, 3, -3, 1)   # (x - 1)^3


def test_char_poly_companion(cubic):
    assert char_poly(cubic) == poly(1, -2, -1, 1)


def test_char_poly_rational_entries():
    m = RationalMatrix([[Fraction(1, 2), 1], [0, Fraction(1, 3)]])
    p = char_poly(m)
    assert p.evaluate(Fraction(1, 2)) == 0
    assert p.evaluate(Fraction(1, 3)) == 0


def test_cayley_hamilton_exact(cat, cubic):
    for m in (cat, cubic, RationalMatrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]])):
        ann = char_poly(m).evaluate_matrix(m)
        assert all(x == 0 for row in ann.rows for x in row)


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

def test_factor_irreducible_quadratic():
    # rational-root test + discriminant oracle: x^2 - 3x + 1 has discriminant 5,
    # not a square, and no rational roots, hence irreducible
    p = poly(1, -3, 1)
    disc = 9 - 4
    assert math.isqrt(disc) ** 2 != disc
    assert p.evaluate(Fraction(1)) != 0 and p.evaluate(Fraction(-1)) != 0
    assert factor_over_q(p) == [(p, 1)]


def test_factor_x4_minus_1():
    got = factor_over_q(poly(-1, 0, 0, 0, 1))
    assert got == [(poly(-1, 1), 1), (poly(1, 1), 1), (poly(1, 0, 1), 1)]


def test_factor_product_roundtrip():
    # multiply then refactor
    p = poly(-1, 1) ** 2 * poly(1, -3, 1)
    got = factor_over_q(p)
    assert got == [(poly(-1, 1), 2), (poly(1, -3, 1), 1)]


def test_factor_canonical_order():
    p = poly(1, 0, 1) * poly(-1, 1) * poly(2, 1)  # includes non-monic content
    got = factor_over_q(p)
    degs = [q.degree for q, _ in got]
    assert degs == sorted(degs)
    assert all(q.is_monic() for q, _ in got)


# ---------------------------------------------------------------------------
# cyclotomic detection
# ---------------------------------------------------------------------------

def test_cyclotomic_basics():
    assert is_cyclotomic(poly(1, 1, 1)) == 3
    assert is_cyclotomic(poly(-1, 1)) == 1
    assert is_cyclotomic(poly(1, 1)) == 2
    assert is_cyclotomic(poly(1, -3, 1)) is None


def test_cyclotomic_rejects_reducible():
    with pytest.raises(ValueError):
        is_cyclotomic(poly(-1, 0, 1))   # (x-1)(x+1)


def test_cyclotomic_against_brute_force():
    # brute force: q is cyclotomic of order d iff q divides x^d - 1; test all
    # d up to 10 * deg^2 for every monic irreducible factor of a few samples
    samples = [cyclotomic_polynomial(d) for d in (1, 2, 3, 4, 5, 6, 8, 12, 105 // 15)]
    samples += [poly(1, -3, 1), poly(1, -2, -1, 1).monic()]
    for q in samples:
        claimed = is_cyclotomic(q, assume_irreducible=True)
        brute = None
        for d in range(1, 10 * q.degree ** 2 + 1):
            xd = IntPolynomial([-1] + [0] * (d - 1) + [1])
            if xd % q == IntPolynomial([0]) and cyclotomic_polynomial(d) == q:
                brute = d
                break
        assert claimed == brute


def test_inverse_totient():
    assert inverse_totient(1) == [1, 2]
    assert set(inverse_totient(2)) == {3, 4, 6}
    assert set(inverse_totient(4)) == {5, 8, 10, 12}


# ---------------------------------------------------------------------------
# primary decomposition and kernels
# ---------------------------------------------------------------------------

def test_primary_cat(cat):
    pd = primary_decomposition(cat)
    assert len(pd.blocks) == 1
    blk = pd.blocks[0]
    assert blk.factor == poly(1, -3, 1)
    assert blk.multiplicity == 1 and blk.dim == 2


def test_primary_mixed_block():
    m = RationalMatrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
    pd = primary_decomposition(m)
    factors = {b.factor: b for b in pd.blocks}
    assert poly(-1, 1) in factors and poly(1, -3, 1) in factors
    one = factors[poly(-1, 1)]
    assert [list(map(int, v)) for v in one.basis] == [[0, 0, 1]]


def test_primary_identity_defective():
    pd = primary_decomposition(RationalMatrix.identity(2))
    assert len(pd.blocks) == 1
    assert pd.blocks[0].multiplicity == 2
    assert pd.blocks[0].dim == 2


def test_primary_direct_sum_and_invariance(cat, cubic):
    for m in (cat, cubic, RationalMatrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]])):
        pd = primary_decomposition(m)
        all_rows = [list(v) for b in pd.blocks for v in b.basis]
        # full rank over Q
        rm = RationalMatrix([row + [Fraction(0)] * (m.dim - len(row))
                             if len(row) < m.dim else row for row in all_rows])
        assert rm.determinant() != 0
        # exact invariance: M v stays inside its block
        for b in pd.blocks:
            ann = (b.factor.evaluate_matrix(m)) ** b.multiplicity
            for v in b.basis:
                image = m.apply(v)
                assert all(x == 0 for x in ann.apply(image))


def test_integer_kernel_saturated():
    # kernel of [[1, -2, 0],[0, 0, 0],[0, 0, 3]] over Z: spanned by (2, 1, 0)
    m = RationalMatrix([[1, -2, 0], [0, 0, 0], [0, 0, 3]])
    basis = integer_kernel(m)
    assert len(basis) == 1
    v = basis[0]
    assert [abs(x) for x in v] == [2, 1, 0]


def test_rational_kernel_dimensions(cubic):
    assert rational_kernel(RationalMatrix.identity(3)) == []
    z = RationalMatrix([[0, 0], [0, 0]])
    assert len(rational_kernel(z)) == 2


# ---------------------------------------------------------------------------
# lyapunov data
# ---------------------------------------------------------------------------

def test_lyapunov_cat(cat):
    split = lyapunov_data(cat)
    exps = [b.exponent for b in split.blocks]
    assert exps[0] == pytest.approx(-CHI_CAT, abs=1e-9)
    assert exps[1] == pytest.approx(CHI_CAT, abs=1e-9)
    assert all(b.exponent_err < 1e-20 for b in split.blocks)


def test_lyapunov_mixed():
    split = lyapunov_data(RationalMatrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]]))
    exps = [b.exponent for b in split.blocks]
    assert exps[0] == pytest.approx(-CHI_CAT, abs=1e-9)
    assert exps[1] == 0.0 and split.blocks[1].exponent_err == 0.0
    assert exps[2] == pytest.approx(CHI_CAT, abs=1e-9)


def test_lyapunov_cubic(cubic):
    split = lyapunov_data(cubic)
    exps = [b.exponent for b in split.blocks]
    for got, ref in zip(exps, CUBIC_EXPONENTS):
        assert got == pytest.approx(ref, abs=1e-6)


def test_lyapunov_residuals_and_sum(cat, cubic):
    for m in (cat, cubic, RationalMatrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]]),
              RationalMatrix.identity(3)):
        split = lyapunov_data(m)
        assert all(b.invariance_residual <= 1e-9 for b in split.blocks)
        total = sum(b.exponent * b.multiplicity for b in split.blocks)
        assert abs(total) < 1e-9   # unimodular integer matrices in this panel
        assert sum(b.multiplicity for b in split.blocks) == m.dim


def test_unimodular_constant_coefficient(cat, cubic):
    for m in (cat, cubic):
        p = char_poly(m)
        assert abs(p.coeffs[0]) == 1


def test_lyapunov_conjugate_pair_merged():
    # rotation-by-sqrt2 style block: x^2 - 2x + 4 has conjugate roots 1 +- i sqrt3,
    # modulus 2 exactly for both: must merge into one class, exponent log 2
    m = RationalMatrix([[2, -4], [1, 0]])
    split = lyapunov_data(m)
    assert len(split.blocks) == 1
    assert split.blocks[0].multiplicity == 2
    assert split.blocks[0].exponent == pytest.approx(math.log(2.0), abs=1e-12)


def test_lyapunov_salem_like_modulus_one():
    # x^4 - 3x^3 + 3x^2 - 3x + 1: Salem polynomial, two real roots (lambda,
    # 1/lambda) and a complex pair of modulus exactly one
    m = RationalMatrix.companion(IntPolynomial([1, -3, 3, -3, 1]))
    split = lyapunov_data(m)
    zero_blocks = [b for b in split.blocks if b.exponent == 0.0 and b.exponent_err == 0.0]
    assert len(zero_blocks) == 1
    assert zero_blocks[0].multiplicity == 2
    assert len(split.blocks) == 3


def test_lyapunov_w_splitting(cubic):
    split = lyapunov_data(cubic)
    assert split.w_plus().shape == (2, 3)
    assert split.w_minus().shape == (1, 3)
    assert split.w_zero().shape == (0, 3)
    assert split.block_max().shape == (1, 3)
    assert split.block_min().shape == (1, 3)


def test_lyapunov_rejects_singular():
    with pytest.raises(ValueError):
        lyapunov_data(RationalMatrix([[1, 0], [0, 0]]))


def test_companion_matches_definition():
    p = IntPolynomial([1, -2, -1, 1])
    c = RationalMatrix.companion(p)
    assert char_poly(c) == p


def test_lyapunov_defective_jordan_blocks():
    # companion of q^2: one size-2 Jordan block per root; the class bases are
    # the generalized eigenspaces and stay exactly invariant
    q = poly(1, -3, 1)
    split = lyapunov_data(RationalMatrix.companion(q * q))
    assert [(b.multiplicity) for b in split.blocks] == [2, 2]
    assert all(b.invariance_residual <= 1e-9 for b in split.blocks)
    assert abs(sum(b.exponent * b.multiplicity for b in split.blocks)) < 1e-9


def test_lyapunov_non_unimodular_determinant_sum():
    # (x - 2)^2 (x - 3): exponents log 2 (twice) and log 3 summing to log 12
    split = lyapunov_data(RationalMatrix.companion(poly(-12, 16, -7, 1)))
    exps = [(b.exponent, b.multiplicity) for b in split.blocks]
    assert exps[0][0] == pytest.approx(math.log(2), abs=1e-12) and exps[0][1] == 2
    assert exps[1][0] == pytest.approx(math.log(3), abs=1e-12) and exps[1][1] == 1


def test_modulus_merge_rejects_unprovable_overlap():
    # white-box: two entries from unrelated factors with overlapping
    # certified intervals and no proving identity must raise
    from nilmix.exactlin import PrecisionError, _merge_modulus_classes
    q1 = poly(1, -3, 1)
    q2 = poly(-1, -1, 0, 1)
    primary = primary_decomposition(
        RationalMatrix.companion(q1 * q2))
    entries = [
        {"fi": 0, "ri": 0, "mod": 2.0, "err": 1e-3, "one": False},
        {"fi": 1, "ri": 0, "mod": 2.0005, "err": 1e-3, "one": False},
    ]
    fake_roots = [[(2.0 + 0j, 1e-3)], [(2.0005 + 0j, 1e-3)]]
    partners = [[0], [0]]
    with pytest.raises(PrecisionError):
        _merge_modulus_classes(entries, primary, fake_roots, partners)


def test_block_overlap_escalates_then_raises():
    from nilmix.exactlin import PrecisionError, _check_disjoint, LyapunovBlock
    import numpy as np
    blocks = [
        LyapunovBlock(0.5, 0.2, 1, np.zeros((1, 2)), 0.0, (0,)),
        LyapunovBlock(0.6, 0.2, 1, np.zeros((1, 2)), 0.0, (1,)),
    ]
    with pytest.raises(PrecisionError):
        _check_disjoint(blocks)
