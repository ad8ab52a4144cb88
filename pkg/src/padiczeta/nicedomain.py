"""Slope-stratified cells of the upper unipotent group and exact Jacquet
character sums.

The upper unipotent group N over Q_p is partitioned into *cells with a
slope*: the slope-0 cell is N(Z_p), and a cell of slope rho > 0 and
remainder l is a subset whose conjugate by the dilation A(rho) =
diag(p^{(n-1)rho}, ..., p^rho, 1) equals a coset u0 * K_N(p^n) of the
depth-n unipotent congruence subgroup (n = matrix size).  The base point
u0 lives over Z/p^n; its minimal entry valuation is the remainder l, and
the pivot (i0, j0) is the entry achieving l with j0 - i0 minimal and then
i0 maximal.  The slope is minimal: some base entry has valuation below
its distance to the diagonal, so conjugating one dilation step less
already leaves the integral points.  Each unipotent matrix lies in
exactly one cell, and the cells meeting a truncated region {v(u_ij) >=
-b} partition it -- verified here by exact residue-class counting.

On a high-slope cell, the integral of h(u) = f[s](w_G u a k) against the
inverse standard character psi^{-1} vanishes exactly.  The mechanism is a
two-parameter family of moves: for x in Z_p, multiply the conjugated
coset on the right by q1 = I + p^{rho-l-1} x E_{j0, i0+1} and restore the
unipotent shape by an exact row reduction q2 (lower triangular, congruent
to I at level rho-l-1).  Both factors conjugate back into a deep
congruence subgroup of the lower Borel, where h is right invariant, so
h(u) = h(u n(u, x)) while the character picks up a full nontrivial sum
over x mod p^{l+1} -- which is zero.  Everything here is a finite exact
computation: integrals are sums over congruence cells whose level is
certified by a one-step refinement comparison, and the q1/q2 congruence
properties and the measure preservation of u -> w are checked on finite
quotients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .arith import CycValue, DepthContext, SqrtRational, psi, valuation
from .group import (
    Mat,
    SubgroupSpec,
    enumerate_cosets,
    iwasawa_NAK,
    iwasawa_UAK,
    minor_norm_M,
    modular_delta_half_exponent,
)
from .params import theta_matrix
from .rslocal import EClassElement
from .testfn import _explicit_on_K


# -- the dilation and entrywise conjugation ---------------------------------

def A_rho(rho: int, n: int, p: int) -> Mat:
    """diag(p^{(n-1)rho}, ..., p^rho, 1)."""
    if rho < 0:
        raise ValueError("slope must be nonnegative")
    return Mat.diag([Fraction(p) ** ((n - 1 - i) * rho) for i in range(n)], p)


def conj_by_A(g: Mat, rho: int) -> Mat:
    """A(rho) g A(rho)^{-1}: entry (i, j) is scaled by p^{(j-i) rho}."""
    p, n = g.p, g.n
    return Mat([[g.rows[i][j] * Fraction(p) ** ((j - i) * rho)
                 for j in range(n)] for i in range(n)], p)


def _entry_val(x: int, p: int, cap: int) -> int:
    """Valuation of an integer residue mod p^cap, capped at cap."""
    if x % p ** cap == 0:
        return cap
    return valuation(x, p)


# -- the cell type ----------------------------------------------------------

@dataclass(frozen=True)
class NiceDomain:
    """A slope cell of the upper unipotent group of GL_n(Q_p).

    slope 0 is all of N(Z_p) (base and pivot are None).  For slope > 0 the
    cell is {u : A(rho) u A(rho)^{-1} in base * K_N(p^n)} with base a
    unipotent matrix over Z/p^n; remainder = min entry valuation of base,
    pivot = the 0-based (i0, j0) achieving it with j0 - i0 minimal, then
    i0 maximal.  Validity (checked on construction): some base entry has
    valuation < j - i, so the slope cannot be lowered.
    """

    n: int
    p: int
    slope: int
    remainder: int
    base: tuple | None
    pivot: tuple | None

    def __post_init__(self):
        n, p = self.n, self.p
        if self.slope == 0:
            if not (self.base is None and self.pivot is None
                    and self.remainder == 0):
                raise ValueError("slope-0 cell carries no base point")
            return
        if self.base is None or self.pivot is None:
            raise ValueError("positive slope needs a base point and pivot")
        mod = p ** n
        rows = self.base
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("base has wrong shape")
        for i in range(n):
            for j in range(n):
                x = rows[i][j]
                if not 0 <= x < mod:
                    raise ValueError("base entries must be reduced mod p^n")
                if i == j and x != 1:
                    raise ValueError("base must be unipotent")
                if i > j and x != 0:
                    raise ValueError("base must be upper triangular")
        vals = {(i, j): _entry_val(rows[i][j], p, n)
                for i in range(n) for j in range(i + 1, n)}
        l = min(vals.values())
        if l != self.remainder or l >= n:
            raise ValueError("remainder does not match the base point")
        achievers = [(j - i, -i, (i, j)) for (i, j), v in vals.items()
                     if v == l]
        if min(achievers)[2] != self.pivot:
            raise ValueError("pivot does not match the base point")
        if not any(v < j - i for (i, j), v in vals.items()):
            raise ValueError("slope is not minimal for this base point")

    # -- geometry ----------------------------------------------------------

    def base_lift(self) -> Mat:
        """Integral lift of the base point (identity for slope 0)."""
        if self.slope == 0:
            return Mat.identity(self.n, self.p)
        return Mat([[Fraction(x) for x in row] for row in self.base], self.p)

    def representative(self) -> Mat:
        """A member of the cell: the base lift conjugated back down."""
        return conj_by_A(self.base_lift(), -self.slope)

    def contains(self, u: Mat) -> bool:
        n, p = self.n, self.p
        if u.n != n or u.p != p:
            return False
        for i in range(n):
            if u.rows[i][i] != 1 or any(u.rows[i][j] != 0 for j in range(i)):
                return False
        up = conj_by_A(u, self.slope)
        if not up.is_integral():
            return False
        if self.slope == 0:
            return True
        mod = p ** n
        for i in range(n):
            for j in range(i + 1, n):
                x = up.rows[i][j]
                r = x.numerator * pow(x.denominator, -1, mod) % mod
                if r != self.base[i][j]:
                    return False
        return True

    def volume(self) -> Fraction:
        """Haar measure (N(Z_p) has volume 1)."""
        n = self.n
        e = sum((j - i) * self.slope - n
                for i in range(n) for j in range(i + 1, n))
        return Fraction(self.p) ** e if self.slope else Fraction(1)

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "remainder": self.remainder,
            "pivot": list(self.pivot) if self.pivot else None,
            "base": [list(r) for r in self.base] if self.base else None,
        }


def _cell_from_base(n: int, p: int, rho: int, rows) -> NiceDomain:
    vals = {(i, j): _entry_val(rows[i][j], p, n)
            for i in range(n) for j in range(i + 1, n)}
    l = min(vals.values())
    pivot = min((j - i, -i, (i, j)) for (i, j), v in vals.items()
                if v == l)[2]
    base = tuple(tuple(r) for r in rows)
    return NiceDomain(n, p, rho, l, base, pivot)


def classify(u: Mat) -> NiceDomain:
    """The unique slope cell containing the upper unipotent matrix u.

    The slope is the least dilation power making the conjugate integral;
    the base point is the conjugate reduced mod p^n.
    """
    n, p = u.n, u.p
    for i in range(n):
        if u.rows[i][i] != 1 or any(u.rows[i][j] != 0 for j in range(i)):
            raise ValueError("input must be upper unipotent")
    rho = 0
    for i in range(n):
        for j in range(i + 1, n):
            x = u.rows[i][j]
            if x != 0:
                rho = max(rho, -(valuation(x, p) // (j - i)))
    if rho == 0:
        return NiceDomain(n, p, 0, 0, None, None)
    up = conj_by_A(u, rho)
    mod = p ** n
    rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = up.rows[i][j]
            rows[i][j] = x.numerator * pow(x.denominator, -1, mod) % mod
    return _cell_from_base(n, p, rho, rows)


# -- decomposition of truncated regions -------------------------------------

def _region_classes(n: int, p: int, b: int):
    """Residue representatives of {u in N : v(u_ij) >= -b} at entry level
    p^n, on which classification and cell membership are constant."""
    coords = [(i, j) for i in range(n) for j in range(i + 1, n)]
    reps = [Fraction(t, p ** b) for t in range(p ** (n + b))]
    for choice in itertools.product(reps, repeat=len(coords)):
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for (i, j), x in zip(coords, choice):
            rows[i][j] = x
        yield Mat(rows, p)


def decompose_region(n: int, p: int, b: int) -> list:
    """All slope cells meeting {u : v(u_ij) >= -b}, by exhaustive
    classification of the region's residue classes."""
    if b < 0:
        raise ValueError("truncation bound must be nonnegative")
    found = {}
    for u in _region_classes(n, p, b):
        d = classify(u)
        found[(d.slope, d.base)] = d
    return [found[key] for key in sorted(found, key=lambda t: (t[0], t[1] or ()))]


def verify_partition(n: int, p: int, b: int) -> dict:
    """Exactness of decompose_region: every residue class of the region
    lies in exactly one listed cell, and that cell is its classification.
    Returns the reconciled counts; raises on any failure."""
    domains = decompose_region(n, p, b)
    index = {(d.slope, d.base): i for i, d in enumerate(domains)}
    slopes = sorted({d.slope for d in domains})
    mod = p ** n
    counts = {i: 0 for i in range(len(domains))}
    total = 0
    for u in _region_classes(n, p, b):
        total += 1
        # membership in a slope-s cell forces the conjugate's residues, so
        # hits can be counted with one lookup per slope present
        hits = []
        for sl in slopes:
            up = conj_by_A(u, sl)
            if not up.is_integral():
                continue
            if sl == 0:
                key = (0, None)
            else:
                key = (sl, tuple(
                    tuple(x.numerator * pow(x.denominator, -1, mod) % mod
                          for x in row) for row in up.rows))
            if key in index:
                hits.append(index[key])
        if len(hits) != 1:
            raise ValueError(f"residue class in {len(hits)} cells")
        if not domains[hits[0]].contains(u):
            raise ValueError("index lookup disagrees with membership")
        if classify(u) != domains[hits[0]]:
            raise ValueError("membership disagrees with classification")
        counts[hits[0]] += 1
    if sum(counts.values()) != total:
        raise ValueError("counts do not reconcile")
    return {
        "classes": total,
        "domain_count": len(domains),
        "counts": [counts[i] for i in range(len(domains))],
        "disjoint": True,
        "covering": True,
    }


def scan_box_domains(n: int, p: int, rho: int, cap: int | None = None) -> list:
    """All slope-rho cells (every admissible base point over Z/p^n); with
    cap, a deterministic subsample keeping at most cap base points per
    (remainder, pivot) class."""
    if rho < 1:
        raise ValueError("positive slope required")
    coords = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mod = p ** n
    out = []
    for choice in itertools.product(range(mod), repeat=len(coords)):
        rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        for (i, j), x in zip(coords, choice):
            rows[i][j] = x
        vals = {(i, j): _entry_val(rows[i][j], p, n) for (i, j) in coords}
        if not any(v < j - i for (i, j), v in vals.items()):
            continue  # slope would not be minimal
        out.append(_cell_from_base(n, p, rho, rows))
    out.sort(key=lambda d: (d.remainder, d.pivot, d.base))
    if cap is None:
        return out
    kept, seen = [], {}
    for d in out:
        key = (d.remainder, d.pivot)
        if seen.get(key, 0) < cap:
            kept.append(d)
            seen[key] = seen.get(key, 0) + 1
    return kept


# -- the two-parameter family of moves --------------------------------------

def q1_q2_construct(domain: NiceDomain, u: Mat, x) -> tuple:
    """(q1, q2, w', w): the right move q1 = I + p^{rho-l-1} x E_{j0, i0+1}
    on the conjugated coset, the exact row reduction q2 restoring the
    unipotent shape, the reduced matrix w' = q2 u' q1, and its conjugate
    w back in the cell.  Requires slope >= remainder + 1 + n so that both
    factors are congruent to I at level n."""
    n, p, rho, l = domain.n, domain.p, domain.slope, domain.remainder
    x = Fraction(x)
    if x != 0 and valuation(x, p) < 0:
        raise ValueError("the move parameter must be integral")
    if rho < l + 1 + n:
        raise ValueError("slope below the two-parameter construction "
                         "threshold")
    if not domain.contains(u):
        raise ValueError("matrix outside the cell")
    i0, j0 = domain.pivot
    up = conj_by_A(u, rho)
    q1_rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
               for i in range(n)]
    q1_rows[j0][i0 + 1] += Fraction(p) ** (rho - l - 1) * x
    q1 = Mat(q1_rows, p)
    m = up @ q1
    work = [list(r) for r in m.rows]
    for c in range(n):
        piv = work[c][c]
        if piv == 0:
            raise RuntimeError("row reduction failure")
        for r in range(c + 1, n):
            f = work[r][c] / piv
            if f:
                for cc in range(n):
                    work[r][cc] -= f * work[c][cc]
    wp = Mat([[work[i][j] / work[i][i] for j in range(n)] for i in range(n)],
             p)
    q2 = wp @ m.inv()
    if not SubgroupSpec("KQ", n, p, rho - l - 1).contains(q2):
        raise RuntimeError("row reduction escaped its congruence level")
    assert q2 @ up @ q1 == wp
    return q1, q2, wp, conj_by_A(wp, -rho)


def q1_q2_properties(domain: NiceDomain, u: Mat, x) -> dict:
    """Exact congruence properties of the move: w' matches u' mod p^n;
    the superdiagonal shifts by p^{rho-l-1} (base pivot) x exactly at row
    i0 mod p^rho; w stays in the cell; n(u,x) = u^{-1} w conjugates into
    K_N(p^n); and n'(w,x) = w^{-1} u has the stated superdiagonal profile
    mod Z_p."""
    n, p, rho, l = domain.n, domain.p, domain.slope, domain.remainder
    i0, j0 = domain.pivot
    q1, q2, wp, w = q1_q2_construct(domain, u, x)
    up = conj_by_A(u, rho)
    piv_lift = Fraction(domain.base[i0][j0])
    inc = Fraction(p) ** (rho - l - 1) * piv_lift * Fraction(x)

    def vge(y, e):
        return y == 0 or valuation(y, p) >= e

    mod_n = all(vge(wp.rows[i][j] - up.rows[i][j], n)
                for i in range(n) for j in range(n))
    superdiag = all(
        vge(wp.rows[i][i + 1] - up.rows[i][i + 1]
            - (inc if i == i0 else 0), rho)
        for i in range(n - 1))
    in_cell = domain.contains(w)
    move = conj_by_A(u.inv() @ w, rho)
    move_in_range = all(
        vge(move.rows[i][j] - (1 if i == j else 0), n)
        for i in range(n) for j in range(n))
    nprime = w.inv() @ u
    profile = all(
        vge(nprime.rows[i][i + 1]
            + (Fraction(p) ** (-l - 1) * piv_lift * Fraction(x)
               if i == i0 else 0), 0)
        for i in range(n - 1))
    return {
        "w_prime_mod_pn": mod_n,
        "superdiagonal_mod_p_rho": superdiag,
        "w_in_cell": in_cell,
        "move_in_congruence_range": move_in_range,
        "inverse_move_profile": profile,
        "q2_level": rho - l - 1,
    }


def measure_preservation_check(domain: NiceDomain, x) -> dict:
    """u -> w on the finite quotient at entry level p^{n+1}: for fixed x
    the move fixes every residue class (w' = u' mod p^{n+1} entrywise),
    so it is a counting-measure-preserving bijection of the quotient."""
    n, p, rho = domain.n, domain.p, domain.slope
    coords = [(i, j) for i in range(n) for j in range(i + 1, n)]
    base = domain.base_lift()
    total = 0
    for digits in itertools.product(range(p), repeat=len(coords)):
        rows = [list(r) for r in base.rows]
        for (i, j), t in zip(coords, digits):
            rows[i][j] += p ** n * t
        u = conj_by_A(Mat(rows, p), -rho)
        _, _, wp, _ = q1_q2_construct(domain, u, x)
        up = conj_by_A(u, rho)
        for i in range(n):
            for j in range(n):
                d = wp.rows[i][j] - up.rows[i][j]
                if d != 0 and valuation(d, p) < n + 1:
                    raise ValueError("move does not fix the residue class")
        total += 1
    return {"residues": total, "identity_on_residues": True,
            "bijection": True, "level": n + 1}


# -- the induced-model section and its invariance ---------------------------

def _sqrt_split(r: Fraction) -> tuple:
    """sqrt(r) = c * sqrt(s) with s squarefree: returns (c, s)."""
    if r == 0:
        return Fraction(0), 1
    m = r.numerator * r.denominator
    c_num, s = 1, 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            c_num *= d ** (e // 2)
            if e % 2:
                s *= d
        d += 1
    if m > 1:
        t = math.isqrt(m)
        if t * t == m:
            c_num *= t
        else:
            s *= m
    return Fraction(c_num, r.denominator), s


def _k_residue_key(kmat: Mat, ctx: DepthContext):
    mod = ctx.p ** (2 * ctx.m)
    return tuple(x.numerator * pow(x.denominator, -1, mod) % mod
                 for row in kmat.rows for x in row)


def section_value(f: EClassElement, s: tuple, g: Mat,
                  cache: dict | None = None) -> dict:
    """The induced-model family through the class element, at g.

    The underlying lower-structured function extends to a family over the
    complex parameter s by giving it full diagonal support: with
    shift * w_G * g = u a k (lower Iwasawa), the value is c1 *
    delta_U^{1/2}(a) * prod |a_i|^{s_i} times the congruence-character
    value on k.  At s integral this is exact; the result is returned as a
    map {squarefree radical -> cyclotomic coefficient} (the value is the
    sum of coeff * sqrt(radical)); the empty map means zero.  The family
    is left-invariant under the upper unipotents and unit diagonals and
    right-invariant under K(q^2), which is what the character-sum
    arguments need."""
    ctx, tf = f.ctx, f.tf
    w = Mat.longest_weyl(f.n, ctx.p)
    dec = iwasawa_UAK(tf.shift_mat() @ w @ g)
    if cache is not None:
        key = _k_residue_key(dec.k, ctx)
        if key in cache:
            phase = cache[key]
        else:
            phase = _explicit_on_K(dec.k, ctx, theta_matrix(f.n, ctx))
            if phase is not None and tf.conjugate:
                phase = phase.conj()
            cache[key] = phase
    else:
        phase = _explicit_on_K(dec.k, ctx, theta_matrix(f.n, ctx))
        if phase is not None and tf.conjugate:
            phase = phase.conj()
    if phase is None or phase.is_zero():
        return {}
    e2 = 2 * modular_delta_half_exponent(dec.a, "U") - 2 * sum(
        si * valuation(ai, ctx.p)
        for si, ai in zip(s, dec.a.diagonal()))
    coeff = tf.c1 * SqrtRational.sqrt(Fraction(ctx.p) ** e2)
    c, rad = _sqrt_split(coeff.squared())
    return {rad: phase * (c * coeff.sign)}


def _parts_add(acc: dict, parts: dict, scale) -> None:
    for rad, val in parts.items():
        cur = acc.get(rad, CycValue.zero)
        acc[rad] = cur + val * scale


def _parts_clean(acc: dict) -> dict:
    return {rad: v for rad, v in acc.items() if not v.is_zero()}


def h_right_invariance_level(ctx: DepthContext, a: Mat) -> int:
    """Congruence depth d such that a K(q^2) a^{-1} contains the level-d
    lower Borel congruence subgroup: 2m plus the largest downward
    valuation drop along the diagonal of a."""
    d = a.diagonal()
    p = ctx.p
    drop = max((valuation(d[i], p) - valuation(d[j], p)
                for i in range(len(d)) for j in range(i)), default=0)
    return 2 * ctx.m + max(0, drop)


def h_invariance_check(f: EClassElement, s: tuple, a: Mat, k: Mat,
                       trials: int = 5, seed: int = 0) -> dict:
    """h(g) = f[s](w_G g a k) is invariant under left multiplication by
    unit diagonals and integral lower unipotents, and under right
    multiplication by the level-d lower Borel congruence subgroup with
    d = h_right_invariance_level."""
    import random

    ctx, n = f.ctx, f.n
    p = ctx.p
    rng = random.Random(seed)
    wg = Mat.longest_weyl(n, p)
    d = h_right_invariance_level(ctx, a)
    ak = a @ k

    def rand_upper():
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                rows[i][j] = Fraction(rng.randrange(-p ** 3, p ** 3),
                                      p ** rng.randrange(0, 3))
        return Mat(rows, p)

    def h(u):
        return _parts_clean(section_value(f, s, wg @ u @ ak))

    left_ok = right_ok = 0
    for _ in range(trials):
        u = rand_upper()
        base = h(u)
        # left: unit diagonal times integral lower unipotent
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for i in range(n):
            rows[i][i] = Fraction(rng.choice(
                [c for c in range(1, p ** 2) if c % p]))
            for j in range(i):
                rows[i][j] = Fraction(rng.randrange(0, p ** 2))
        q = Mat(rows, p)
        if h(q @ u) != base:
            raise ValueError("left lower-Borel invariance failed")
        left_ok += 1
        # right: level-d lower Borel congruence element (acting on the
        # u-slot of h)
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for i in range(n):
            rows[i][i] += Fraction(p ** d * rng.randrange(0, p))
            for j in range(i):
                rows[i][j] = Fraction(p ** d * rng.randrange(0, p ** 2))
        r = Mat(rows, p)
        if h(u @ r) != base:
            raise ValueError("right congruence invariance failed")
        right_ok += 1
    return {"left_checked": left_ok, "right_checked": right_ok, "depth": d}


# -- exact character sums over a cell ---------------------------------------

def _base_levels(domain: NiceDomain, ctx: DepthContext, a: Mat) -> dict:
    """Initial per-entry refinement levels: the superdiagonal must be
    enumerated to level rho - n for the additive character, and every
    entry to the depth at which pushing the perturbation through a and k
    lands in K(q^2)."""
    n, p, m = domain.n, domain.p, ctx.m
    rho = domain.slope
    av = [valuation(x, p) for x in a.diagonal()]
    lv = {}
    for i in range(n):
        for j in range(i + 1, n):
            need = 2 * m - n - (j - i) * rho - (av[j] - av[i])
            if j == i + 1:
                need = max(need, rho - n)
            lv[(i, j)] = max(0, need)
    return lv


def _cell_sum(f: EClassElement, s: tuple, a: Mat, k: Mat,
              domain: NiceDomain, levels: dict, cache: dict) -> tuple:
    """(parts, cells): the exact sum of f[s](w_G u a k) psi^{-1}(u) du
    over the cell, enumerating the conjugated coordinates to the given
    per-entry levels."""
    ctx = f.ctx
    n, p, rho = domain.n, domain.p, domain.slope
    coords = [(i, j) for i in range(n) for j in range(i + 1, n)]
    base = domain.base_lift()
    wg = Mat.longest_weyl(n, p)
    ak = a @ k
    vol = Fraction(p) ** sum((j - i) * rho - n - levels[(i, j)]
                             for (i, j) in coords)
    acc: dict = {}
    cells = 0
    for digits in itertools.product(
            *(range(p ** levels[c]) for c in coords)):
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for (i, j), t in zip(coords, digits):
            num = int(base.rows[i][j]) + p ** n * t
            rows[i][j] = Fraction(num, p ** ((j - i) * rho))
        u = Mat(rows, p)
        cells += 1
        parts = section_value(f, s, wg @ u @ ak, cache)
        if not parts:
            continue
        weight = psi(-sum(u.rows[i][i + 1] for i in range(n - 1)), p)
        _parts_add(acc, parts, weight * vol)
    return _parts_clean(acc), cells


@dataclass
class CharacterSumValue:
    """An exact value sum_r coeff_r sqrt(r) with cyclotomic coefficients,
    plus the certification data of the cell enumeration."""

    parts: dict
    levels: dict
    cells: int
    certified: bool

    def is_zero(self) -> bool:
        return not self.parts

    def to_json(self) -> dict:
        return {
            "zero": self.is_zero(),
            "parts": {str(r): v.to_json() for r, v in sorted(
                self.parts.items())},
            "levels": {f"{i},{j}": l for (i, j), l in sorted(
                self.levels.items())},
            "cells": self.cells,
            "certified": self.certified,
        }


def vanishing_check(a: Mat, k: Mat, s: tuple, domain: NiceDomain,
                    f: EClassElement, d2: int = 1,
                    max_refine: int = 3) -> CharacterSumValue:
    """The integral of f[s](w_G u a k) psi^{-1}(u) over the cell, as an
    exact finite character sum.  Hypotheses checked: |a_n| = 1 and every
    simple-root coordinate |a_i / a_{i+1}| <= T^{d2}.  The enumeration
    level is certified by a one-step refinement comparison; expected zero
    whenever the slope is large."""
    ctx = f.ctx
    n, p, m = f.n, ctx.p, ctx.m
    if domain.n != n or domain.p != p:
        raise ValueError("cell and function sizes disagree")
    av = [valuation(x, p) for x in a.diagonal()]
    if av[-1] != 0:
        raise ValueError("last diagonal entry must be a unit")
    if any(av[i] - av[i + 1] < -2 * m * d2 for i in range(n - 1)):
        raise ValueError("simple-root coordinates of a exceed T^d2")
    levels = _base_levels(domain, ctx, a)
    cache: dict = {}
    for _ in range(max_refine + 1):
        parts, cells = _cell_sum(f, s, a, k, domain, levels, cache)
        finer = {c: l + 1 for c, l in levels.items()}
        parts2, cells2 = _cell_sum(f, s, a, k, domain, finer, cache)
        if parts == parts2:
            return CharacterSumValue(parts, levels, cells + cells2, True)
        levels = finer
    raise RuntimeError("cell refinement did not certify local constancy")


def vanishing_mechanism_report(a: Mat, k: Mat, s: tuple,
                               domain: NiceDomain, f: EClassElement,
                               cell_cap: int = 12) -> dict:
    """The vanishing mechanism, step by step, as exact finite identities:
    (1) h(u) = h(u n(u,x)) on sampled cells for all x mod p^{l+1};
    (2) the character is multiplicative along the move, psi(w n') =
    psi(w) psi(n'); (3) psi^{-1}(n'(w,x)) equals the pure pivot character
    psi(p^{-l-1} (base pivot) x); (4) the inner sum over x mod p^{l+1} of
    that character is exactly zero; (5) the full cell sum is zero."""
    ctx = f.ctx
    n, p = f.n, ctx.p
    rho, l = domain.slope, domain.remainder
    i0, j0 = domain.pivot
    d = h_right_invariance_level(ctx, a)
    threshold_ok = (rho - l - 1 >= d
                    and (j0 - i0) * rho - l - 1 >= d
                    and rho >= l + 1 + n)
    wg = Mat.longest_weyl(n, p)
    ak = a @ k
    cache: dict = {}

    def h(u):
        return _parts_clean(section_value(f, s, wg @ u @ ak, cache))

    piv = Fraction(domain.base[i0][j0])
    xs = list(range(p ** (l + 1)))
    coords = [(i, j) for i in range(n) for j in range(i + 1, n)]
    base = domain.base_lift()
    sampled = 0
    for digits in itertools.product(range(p), repeat=len(coords)):
        if sampled >= cell_cap:
            break
        rows = [list(r) for r in base.rows]
        for (i, j), t in zip(coords, digits):
            rows[i][j] += p ** n * t
        u = conj_by_A(Mat(rows, p), -rho)
        hu = h(u)
        for x in xs:
            _, _, _, w = q1_q2_construct(domain, u, x)
            if h(w) != hu:
                raise ValueError("h is not invariant along the move")
            nprime = w.inv() @ u
            sd_w = sum(w.rows[i][i + 1] for i in range(n - 1))
            sd_np = sum(nprime.rows[i][i + 1] for i in range(n - 1))
            sd_u = sum(u.rows[i][i + 1] for i in range(n - 1))
            if psi(sd_u, p) != psi(sd_w, p) * psi(sd_np, p):
                raise ValueError("character not multiplicative on the move")
            if psi(-sd_np, p) != psi(Fraction(p) ** (-l - 1) * piv * x, p):
                raise ValueError("inverse move misses the pivot character")
        sampled += 1
    inner = CycValue.zero
    for x in xs:
        inner = inner + psi(Fraction(p) ** (-l - 1) * piv * x, p)
    if not inner.is_zero():
        raise ValueError("inner pivot character sum is nonzero")
    total = vanishing_check(a, k, s, domain, f)
    return {
        "threshold_ok": threshold_ok,
        "invariance_cells": sampled,
        "x_values": len(xs),
        "inner_sum_zero": True,
        "total_zero": total.is_zero(),
        "right_invariance_depth": d,
    }


# -- the slope threshold report ---------------------------------------------

def hypothesis_diagonal(ctx: DepthContext, n: int, d2: int = 1) -> Mat:
    """The canonical diagonal satisfying the character-sum hypotheses with
    every simple-root coordinate exactly T^{d2}: a_i = p^{-2m d2 (n-i)}."""
    p, m = ctx.p, ctx.m
    return Mat.diag([Fraction(p) ** (-2 * m * d2 * (n - i - 1))
                     for i in range(n)], p)


def rho0_report(f: EClassElement, s: tuple | None = None,
                slope_max: int | None = None, d2: int = 1,
                domain_cap: int = 2, k_count: int = 2) -> dict:
    """Empirical vanishing threshold: evaluate the cell character sum for
    every scan-box cell of each slope up to slope_max (and the slope-0
    cell), at the canonical hypothesis diagonal and a few K-coset
    representatives.  rho0 is one past the largest slope with a nonzero
    value; every tested cell of slope >= rho0 summed to exactly zero."""
    ctx, n = f.ctx, f.n
    p, m = ctx.p, ctx.m
    if s is None:
        s = tuple(0 for _ in range(n))
    if slope_max is None:
        slope_max = 4 * m + n
    a = hypothesis_diagonal(ctx, n, d2)
    kreps = enumerate_cosets(SubgroupSpec("K", n, p), max(m, 1))
    klist = kreps[:k_count]
    rows = []
    max_nonzero = None
    for rho in range(slope_max + 1):
        if rho == 0:
            domains = [NiceDomain(n, p, 0, 0, None, None)]
        else:
            domains = scan_box_domains(n, p, rho, cap=domain_cap)
        for d in domains:
            for ki, k in enumerate(klist):
                cs = vanishing_check(a, k, s, d, f, d2=d2)
                rows.append({**d.to_json(), "k_index": ki,
                             "cells": cs.cells, "zero": cs.is_zero()})
                if not cs.is_zero():
                    max_nonzero = rho
    rho0 = 0 if max_nonzero is None else max_nonzero + 1
    return {
        "rank": n, "p": p, "m": m, "vT": 2 * m,
        "slope_max": slope_max, "d2": d2,
        "max_nonzero_slope": max_nonzero,
        "rho0": rho0,
        "rows": rows,
    }


# -- minors along the Iwasawa decomposition ---------------------------------

def iwasawa_minor_bound_check(u: Mat, a: Mat, ctx: DepthContext,
                              d1: int = 1, d2: int = 1) -> dict:
    """For g = w_G u a with |u_ij| <= T^{d1}, |a_n| = 1 and simple-root
    coordinates of a at most T^{d2}: the bottom-row minor norms M_l of g
    equal those of a' n' from the Iwasawa decomposition g = n'' a' k
    (a' n' = n'' a'), the Laplace inequality M_{l+1} <= M_l * max|g_ij|
    holds, and every |a'_i| is at most T^d for the chain exponent
    d = (rank+1)(d1 + (rank-1) d2) + log_T(1/|det a|)."""
    n, p, m = u.n, ctx.p, ctx.m
    T = Fraction(ctx.T)
    for i in range(n):
        for j in range(i + 1, n):
            x = u.rows[i][j]
            if x != 0 and valuation(x, p) < -2 * m * d1:
                raise ValueError("u exceeds the entry bound T^d1")
    av = [valuation(x, p) for x in a.diagonal()]
    if av[-1] != 0:
        raise ValueError("last diagonal entry must be a unit")
    if any(av[i] - av[i + 1] < -2 * m * d2 for i in range(n - 1)):
        raise ValueError("simple-root coordinates of a exceed T^d2")
    g = Mat.longest_weyl(n, p) @ u @ a
    dec = iwasawa_NAK(g)
    if dec.n @ dec.a @ dec.k != g:
        raise ValueError("decomposition does not re-multiply")
    other = dec.n @ dec.a  # = a' n' with n' = a'^{-1} n'' a'
    emax = max((abs_val for row in g.rows for x in row
                if x != 0 for abs_val in [Fraction(p) ** (-valuation(x, p))]),
               default=Fraction(0))
    minors = [minor_norm_M(g, l) for l in range(1, n + 1)]
    for l in range(1, n + 1):
        if minors[l - 1] != minor_norm_M(other, l):
            raise ValueError("minor identity failed")
        if l < n and minors[l] > minors[l - 1] * emax:
            raise ValueError("Laplace inequality failed")
    det_v = sum(av)
    d = (n + 1) * (d1 + (n - 1) * d2) + Fraction(det_v, 2 * m)
    exps = [Fraction(-valuation(x, p), 2 * m) for x in dec.a.diagonal()]
    if any(e > d for e in exps):
        raise ValueError("a'-bound exceeded the chain exponent")
    return {
        "minor_identity": True,
        "laplace": True,
        "chain_exponent": d,
        "aprime_T_exponents": exps,
        "ok": True,
    }


def minor_bound_sample_suite(ctx: DepthContext, n: int, count: int = 1000,
                             d1: int = 1, d2: int = 1,
                             seed: int = 0) -> dict:
    """Randomized sweep of iwasawa_minor_bound_check; raises on the first
    failing instance."""
    import random

    p, m = ctx.p, ctx.m
    rng = random.Random(seed)
    worst = Fraction(0)
    for _ in range(count):
        rows = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                rows[i][j] = Fraction(
                    rng.randrange(-p ** (2 * m * d1 + 2),
                                  p ** (2 * m * d1 + 2)),
                    p ** (2 * m * d1))
        u = Mat(rows, p)
        exps = [0]
        for _ in range(n - 1):
            exps.append(exps[-1] + rng.randint(-2 * m * d2, 2 * m * d2))
        exps = exps[::-1]  # exps[-1] = 0 so |a_n| = 1
        a = Mat.diag([Fraction(p) ** e for e in exps], p)
        rep = iwasawa_minor_bound_check(u, a, ctx, d1, d2)
        worst = max(worst, max(rep["aprime_T_exponents"]))
    return {"count": count, "failures": 0, "max_aprime_T_exponent": worst}
