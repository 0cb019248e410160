"""Empirical Diophantine certificates over lattice balls.

A subspace direction set {v_1..v_t} inside Z^dimE is certified over the
ball ||m|| <= R by the exact minimum of

    f(m) = ||m||^dimE * sum_i |m . v_i|,       0 != m in Z^dimE

with a deterministic lexicographic argmin tie-break.  The scan is
symmetry-reduced (m and -m give equal values; the canonical
representative has positive first nonzero coordinate).

Two scan engines produce the identical ball minimum:

* a literal full scan (exact Fractions for rational directions, 80-bit
  extended floats otherwise) for balls up to a size threshold;
* an interval-pruned scan for large balls: after a seed full scan out to
  a small radius, any lattice point that could still attain the running
  minimum must satisfy |m . v| <= C/||m||^dimE for the dominant
  direction, which confines the last coordinate to an interval of width
  < 1 per (d-1)-dimensional lattice point.  Every candidate at or below
  the seed minimum is provably evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exactlin import RationalMatrix, lyapunov_data
from .nilalg import NilpotentAlgebra, is_ergodic

__all__ = [
    "DiophantineCertificate",
    "diophantine_certificate",
    "certify_structural_subspaces",
    "type_i_subspace",
]

_FULL_SCAN_LIMIT = 3_000_000       # lattice points; beyond this the pruned engine runs
_EXACT_SCAN_LIMIT = 40_000         # Fraction arithmetic is slow; cap the exact engine
_FLOAT_DOWN = 1.0 - 1e-13          # directed-rounding margin on reported minima
_LONG = np.longdouble


@dataclass
class DiophantineCertificate:
    directions: list                  # the tested basis vectors (as given)
    dim_ambient: int
    radius: float
    c_emp: float                      # certified-down empirical constant
    c_emp_sq_exact: Optional[Fraction]  # exact (||m||^2)^d * (sum|m.v|)^2 when rational
    argmin: tuple
    passed: bool                      # True iff no exact resonance found (c_emp > 0)
    points_scanned: int

    def __repr__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (f"DiophantineCertificate(C_emp={self.c_emp:.6g} at m={self.argmin}, "
                f"R={self.radius:g}, {verdict})")


def _ball_point_count(dim: int, radius: float) -> float:
    unit = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0, 4: math.pi ** 2 / 2.0}
    v = unit.get(dim, math.pi ** (dim / 2) / math.gamma(dim / 2 + 1))
    return v * radius ** dim


def _canonical_sign(m: Sequence[int]) -> tuple:
    for x in m:
        if x != 0:
            return tuple(m) if x > 0 else tuple(-y for y in m)
    return tuple(m)


def _is_rational_input(vs) -> bool:
    return all(isinstance(x, (int, Fraction)) for v in vs for x in v)


# ---------------------------------------------------------------------------
# Exact full scan (rational directions)
# ---------------------------------------------------------------------------

def _scan_exact(vs: list[list[Fraction]], dim: int, radius: float):
    r2 = Fraction(radius).limit_denominator(10**9) ** 2 if not float(radius).is_integer() \
        else Fraction(int(radius)) ** 2
    best = None  # (fsq, argmin)
    count = 0

    def rec(prefix, norm_sq):
        nonlocal best, count
        if len(prefix) == dim:
            m = tuple(prefix)
            if norm_sq == 0 or _canonical_sign(m) != m:
                return
            count += 1
            s = sum(abs(sum(Fraction(a) * b for a, b in zip(m, v))) for v in vs)
            fsq = (Fraction(norm_sq)) ** dim * s * s
            key = (fsq, m)
            if best is None or key < best:
                best = key
            return
        rest = int(math.isqrt(int(r2 - norm_sq))) if r2 >= norm_sq else -1
        for x in range(-rest, rest + 1):
            rec(prefix + [x], norm_sq + x * x)

    rec([], Fraction(0))
    if best is None:
        raise ValueError("radius too small: no lattice points in the ball")
    fsq, arg = best
    return fsq, arg, count


# ---------------------------------------------------------------------------
# Float full scan (80-bit extended)
# ---------------------------------------------------------------------------

def _ipow_half(nsq: np.ndarray, dim: int) -> np.ndarray:
    """nsq^(dim/2) by repeated multiplication (longdouble ** is slow)."""
    out = np.ones_like(nsq)
    half = nsq
    e = dim // 2
    while e:
        if e & 1:
            out = out * half
        e >>= 1
        if e:
            half = half * half
    if dim % 2:
        out = out * np.sqrt(nsq)
    return out


_BALL_CACHE: dict = {}
_SUB_CACHE: dict = {}


def _cache_put(cache: dict, key, value, limit: int = 4):
    if key not in cache and len(cache) >= limit:
        cache.pop(next(iter(cache)))
    cache[key] = value
    return value


def _lattice_ball(dim: int, radius: float):
    """Symmetry-reduced ball grid with cached longdouble norm powers."""
    key = (dim, float(radius))
    if key in _BALL_CACHE:
        return _BALL_CACHE[key]
    b = int(math.floor(radius))
    axes = [np.arange(-b, b + 1, dtype=np.int64)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    keep = (grid.astype(np.float64) ** 2).sum(axis=1) <= radius * radius + 1e-9
    grid = grid[keep]
    # symmetry reduction: first nonzero coordinate positive
    sign = np.zeros(len(grid), dtype=np.int64)
    for j in range(dim):
        undecided = sign == 0
        sign[undecided] = np.sign(grid[undecided, j])
    grid = grid[sign > 0]
    g = grid.astype(_LONG)
    nsq = (g * g).sum(axis=1)
    npow = _ipow_half(nsq, dim)
    return _cache_put(_BALL_CACHE, key, (grid, g, npow))


def _eval_cached(g: np.ndarray, npow: np.ndarray, vs_arr: np.ndarray):
    s = np.abs(g @ vs_arr.T).sum(axis=1)
    return npow * s


def _eval_objective(grid: np.ndarray, vs_arr: np.ndarray, dim: int):
    g = grid.astype(_LONG)
    s = np.abs(g @ vs_arr.T).sum(axis=1)
    f = _ipow_half((g * g).sum(axis=1), dim) * s
    return f, s


def _lex_best(grid: np.ndarray, f: np.ndarray):
    """Minimum of f with lexicographic tie-break on the lattice point."""
    fmin = f.min()
    near = np.nonzero(f <= fmin * _LONG(1 + 1e-16) + _LONG(1e-300))[0]
    best_i = min(near, key=lambda i: (f[i], tuple(int(x) for x in grid[i])))
    return float(f[best_i]), tuple(int(x) for x in grid[best_i])


def _scan_full_float(vs_arr: np.ndarray, dim: int, radius: float):
    grid, g, npow = _lattice_ball(dim, radius)
    f = _eval_cached(g, npow, vs_arr)
    val, arg = _lex_best(grid, f)
    return val, arg, len(grid)


# ---------------------------------------------------------------------------
# Interval-pruned scan (large balls)
# ---------------------------------------------------------------------------

def _sub_lattice(dim: int, radius: float, seed_radius: float):
    """Cached (dim-1)-ball with precomputed pruning denominators max(|p|, seed)^dim."""
    key = (dim, float(radius), float(seed_radius))
    if key in _SUB_CACHE:
        return _SUB_CACHE[key]
    sdim = dim - 1
    if sdim == 0:
        sub = np.zeros((1, 0), dtype=np.int64)
    else:
        b = int(math.floor(radius))
        axes = [np.arange(-b, b + 1, dtype=np.int64)] * sdim
        sub = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, sdim)
        keep = (sub.astype(np.float64) ** 2).sum(axis=1) <= radius * radius + 1e-9
        sub = sub[keep]
    sub_f = sub.astype(np.float64)
    sub_norm_f64 = (sub_f ** 2).sum(axis=1)
    denom = np.maximum(np.sqrt(sub_norm_f64), float(seed_radius))
    denom_pow = _ipow_half(denom * denom, dim)
    return _cache_put(_SUB_CACHE, key, (sub, sub_f, sub_norm_f64, denom_pow))


def _scan_pruned(vs_arr: np.ndarray, dim: int, radius: float, seed_radius: float):
    val, arg, count = _scan_full_float(vs_arr, dim, min(radius, seed_radius))
    if radius <= seed_radius:
        return val, arg, count
    c_cur = val * (1 + 1e-9) + 1e-300

    # pivot: coordinate axis and direction with the largest |component|
    flat = np.abs(vs_arr)
    vi, ax = np.unravel_index(np.argmax(flat), flat.shape)
    piv = vs_arr[vi]
    piv_ax = piv[ax]

    other_axes = [j for j in range(dim) if j != ax]
    sub, sub_f, sub_norm_f64, denom_pow = _sub_lattice(dim, radius, seed_radius)
    if len(sub) == 0:
        return val, arg, count
    # the interval cover runs in float64 with explicit slack (valid over-cover);
    # the objective itself is evaluated in extended precision on the survivors
    tau = float(c_cur) / denom_pow
    proj = sub_f @ np.asarray(piv[other_axes], dtype=np.float64)
    center = -proj / float(piv_ax)
    width = tau / abs(float(piv_ax)) * (1 + 1e-9) + np.abs(center) * 1e-12 + 1e-290
    if float(width.max()) >= 1.0:
        raise ArithmeticError("pruning width >= 1; enlarge the seed radius")
    base = np.rint(center).astype(np.int64)
    r_sq = radius * radius + 1e-9

    chunks = []
    for off in (-1, 0, 1):
        cand_ax = base + off
        cand_f = cand_ax.astype(np.float64)
        keep = (np.abs(cand_f - center) <= width) & (sub_norm_f64 + cand_f ** 2 <= r_sq)
        if keep.any():
            pts = np.empty((int(keep.sum()), dim), dtype=np.int64)
            pts[:, other_axes] = sub[keep]
            pts[:, ax] = cand_ax[keep]
            chunks.append(pts)
    count_extra = 0
    if chunks:
        pts = np.vstack(chunks)
        pts = pts[pts.any(axis=1)]
        # canonicalize signs, dedupe
        sign = np.zeros(len(pts), dtype=np.int64)
        for j in range(dim):
            undecided = sign == 0
            sign[undecided] = np.sign(pts[undecided, j])
        pts = np.where(sign[:, None] < 0, -pts, pts)
        if len(pts):
            pts = np.unique(pts, axis=0)
            f, _ = _eval_objective(pts, vs_arr, dim)
            v2, a2 = _lex_best(pts, f)
            count_extra = len(pts)
            if (v2, a2) < (val, arg):
                val, arg = v2, a2
    return val, arg, count + count_extra


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def diophantine_certificate(directions: Sequence[Sequence], dim_ambient: int,
                            radius: float) -> DiophantineCertificate:
    """Exhaustive-ball certificate for sum_i |m . v_i| >= C ||m||^{-dimE}."""
    vs = [list(v) for v in directions]
    if not vs or any(len(v) != dim_ambient for v in vs):
        raise ValueError("directions must be nonzero vectors of the ambient dimension")
    if any(all(float(x) == 0.0 for x in v) for v in vs):
        raise ValueError("zero direction vector")
    if radius < 1:
        raise ValueError("radius must be >= 1")

    rational = _is_rational_input(vs)
    n_points = _ball_point_count(dim_ambient, radius)

    if rational and n_points <= _EXACT_SCAN_LIMIT:
        fsq, arg, count = _scan_exact([[Fraction(x) for x in v] for v in vs],
                                      dim_ambient, radius)
        c = math.sqrt(float(fsq))
        return DiophantineCertificate(vs, dim_ambient, float(radius), c, fsq,
                                      arg, fsq > 0, count)

    vs_arr = np.array([[float(x) for x in v] for v in vs], dtype=_LONG)
    if n_points <= _FULL_SCAN_LIMIT:
        val, arg, count = _scan_full_float(vs_arr, dim_ambient, radius)
    else:
        val, arg, count = _scan_pruned(vs_arr, dim_ambient, radius,
                                       seed_radius=_seed_radius(dim_ambient))
    c = float(val) * _FLOAT_DOWN
    resonance = c < 1e-290
    return DiophantineCertificate(vs, dim_ambient, float(radius),
                                  0.0 if resonance else c, None, arg,
                                  not resonance, count)


def _seed_radius(dim: int) -> float:
    target = float(_FULL_SCAN_LIMIT) / 4.0
    r = (target / _ball_point_count(dim, 1.0)) ** (1.0 / dim)
    grid_cap = ((3e7) ** (1.0 / dim) - 1.0) / 2.0   # meshgrid memory bound
    return float(max(8.0, min(r, grid_cap, 512.0)))


def _normalize_rows(rows: np.ndarray) -> list[list[float]]:
    """Scale each direction so its largest-|coordinate| entry equals 1."""
    out = []
    for r in rows:
        j = int(np.argmax(np.abs(r)))
        out.append([float(x) / float(r[j]) for x in r])
    return out


def certify_structural_subspaces(m: RationalMatrix, radius: float,
                            algebra: Optional[NilpotentAlgebra] = None,
                            precision_bits: int = 128) -> dict:
    """Certificates for the structural subspaces of an ergodic integer matrix.

    Covers the top/bottom modulus classes across primary blocks, the
    expanding and contracting spaces (ambient lattice Z^m), and every
    modulus class inside its own primary block, re-coordinatized by a
    saturated integer lattice basis of the block.
    """
    if not m.is_unimodular_integer():
        raise ValueError("matrix must be integer with determinant +-1")
    algebra = algebra or _abelian(m.dim)
    if not is_ergodic(algebra, m):
        raise ValueError("matrix is not ergodic (root-of-unity eigenvalue present)")

    split = lyapunov_data(m, precision_bits)
    report = {}
    ambient = {
        "block_max": split.block_max(),
        "block_min": split.block_min(),
        "w_plus": split.w_plus(),
        "w_minus": split.w_minus(),
    }
    for name, rows in ambient.items():
        if rows.shape[0] == 0:
            raise ArithmeticError(f"subspace {name} is empty for an ergodic matrix")
        report[name] = diophantine_certificate(_normalize_rows(rows), m.dim, radius)

    for i, blk in enumerate(split.primary.blocks):
        lattice = np.array(blk.lattice_basis, dtype=np.float64)  # rows span block over Z
        gram = lattice @ lattice.T
        ginv = np.linalg.inv(gram)
        for b in split.blocks:
            if i not in b.primary_factors:
                continue
            rows = _restrict_rows_to_block(split, b, i)
            coords = rows @ lattice.T @ ginv   # coordinates in the block lattice basis
            resid = np.linalg.norm(coords @ lattice - rows)
            if resid > 1e-9 * max(1.0, np.linalg.norm(rows)):
                raise ArithmeticError(
                    f"class basis escapes its primary block lattice (residual {resid:.2e})")
            key = f"class[{i}]@{b.exponent:+.6f}"
            report[key] = diophantine_certificate(
                _normalize_rows(coords), len(blk.lattice_basis), radius)
    return report


def _restrict_rows_to_block(split, block, i):
    from .exactlin import _restrict_to_primary
    return _restrict_to_primary(split, block, i)


def _abelian(dim: int) -> NilpotentAlgebra:
    from .nilalg import abelian_algebra
    return abelian_algebra(dim)


def type_i_subspace(algebra: NilpotentAlgebra, layer: int,
                    candidate: Sequence[Sequence], ambient: Sequence[Sequence],
                    radius: float) -> DiophantineCertificate:
    """Certificate for a candidate subspace against a layer-graded ambient.

    The candidate lives in the tail algebra below the given layer; its
    layer component must land inside the ambient's layer span.  The lift
    through the layer isomorphism keeps exactly the layer coordinates,
    and the certificate runs in the ambient's integer coordinates.
    """
    sl = algebra.layer_slice(layer)
    amb = [list(v) for v in ambient]
    for v in amb:
        for j, x in enumerate(v):
            if j not in sl and Fraction(x) != 0:
                raise ValueError("ambient subspace must lie in the layer span")
            if not isinstance(x, (int, Fraction)) or Fraction(x).denominator != 1:
                raise ValueError("ambient subspace needs an integer basis")

    exact = all(isinstance(x, (int, Fraction)) for v in candidate for x in v)
    lifted = []
    for v in candidate:
        if len(v) != algebra.dim:
            raise ValueError("candidate vectors must live in the full algebra")
        deep_start = sl.start
        if any(float(x) != 0.0 for j, x in enumerate(v) if j < deep_start):
            raise ValueError("candidate must lie in the tail algebra of the layer")
        lifted.append([v[j] for j in sl])

    # coordinates of the lifted directions in the ambient integer basis
    if exact:
        acols = [[Fraction(v[j]) for j in sl] for v in amb]
        t = len(acols)
        gram = RationalMatrix([[sum(a * b for a, b in zip(acols[i], acols[j]))
                                for j in range(t)] for i in range(t)])
        try:
            ginv = gram.inverse()
        except ZeroDivisionError:
            raise ValueError("ambient basis is degenerate")
        coords = []
        for w in lifted:
            rhs = tuple(sum(a * Fraction(x) for a, x in zip(acols[i], w))
                        for i in range(t))
            x = ginv.apply(rhs)
            back = [sum(x[i] * acols[i][j] for i in range(t)) for j in range(len(w))]
            if any(b != Fraction(val) for b, val in zip(back, w)):
                raise ValueError("candidate layer component is not inside the ambient span")
            coords.append(list(x))
        return diophantine_certificate(coords, t, radius)

    amb_cols = np.array([[float(v[j]) for j in sl] for v in amb], dtype=np.float64)
    gram = amb_cols @ amb_cols.T
    try:
        ginv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        raise ValueError("ambient basis is degenerate")
    coords = []
    for w in lifted:
        w = np.array([float(x) for x in w])
        x = ginv @ (amb_cols @ w)
        if np.linalg.norm(amb_cols.T @ x - w) > 1e-9 * max(1.0, np.linalg.norm(w)):
            raise ValueError("candidate layer component is not inside the ambient span")
        coords.append(list(x))
    return diophantine_certificate(coords, len(amb), radius)
