"""GL_N over the p-adic rationals with exact arithmetic.

Matrices carry Fraction entries and a prime context.  The module provides the
three decompositions every integration in the library is built on:

* Iwasawa  g = n a k  (or u a k with the opposite unipotent), computed by
  integral column elimination with minimal-valuation pivoting, so the k-factor
  is genuinely in K = GL_N(Z_p) and the a-part is normalized to pure p-powers
  (units are folded into k);
* the Bruhat open cell  g = u a n  (LDU), which exists iff every leading
  principal minor is nonzero, with a_i = Delta_i / Delta_{i-1};
* the Iwahori factorization of a principal congruence element into
  lower-unipotent x diagonal x upper-unipotent congruence pieces.

Haar measure follows the usual local normalizations: K, K_A, N(o), U(o) all
have volume 1, so the volume of a compact open subgroup is the reciprocal of
an index, and every integral over a compact open set in this library is a
finite sum of coset representatives weighted by such volumes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import norm, rat_from_text, rat_to_text, valuation


class Mat:
    """An invertible-or-not square matrix over Q with a prime context."""

    __slots__ = ("p", "n", "rows")

    def __init__(self, rows, p: int):
        self.rows = tuple(tuple(Fraction(x) for x in row) for row in rows)
        self.n = len(self.rows)
        if any(len(r) != self.n for r in self.rows):
            raise ValueError("matrix must be square")
        self.p = p

    # -- constructors -----------------------------------------------------

    @staticmethod
    def identity(n: int, p: int) -> "Mat":
        return Mat([[1 if i == j else 0 for j in range(n)] for i in range(n)], p)

    @staticmethod
    def diag(entries, p: int) -> "Mat":
        entries = list(entries)
        n = len(entries)
        return Mat([[entries[i] if i == j else 0 for j in range(n)]
                    for i in range(n)], p)

    @staticmethod
    def from_text(text: str, p: int) -> "Mat":
        rows = [[rat_from_text(e) for e in row.split(",")]
                for row in text.split(";")]
        return Mat(rows, p)

    def to_text(self) -> str:
        return ";".join(",".join(rat_to_text(x) for x in row)
                        for row in self.rows)

    @staticmethod
    def longest_weyl(n: int, p: int) -> "Mat":
        """w_G: the antidiagonal permutation matrix."""
        return Mat([[1 if i + j == n - 1 else 0 for j in range(n)]
                    for i in range(n)], p)

    @staticmethod
    def elementary(n: int, p: int, i: int, j: int, c) -> "Mat":
        """I + c E_{ij} (0-based indices, i != j)."""
        rows = [[Fraction(1) if a == b else Fraction(0) for b in range(n)]
                for a in range(n)]
        rows[i][j] = Fraction(c)
        return Mat(rows, p)

    # -- basics -----------------------------------------------------------

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.n != other.n or self.p != other.p:
            raise ValueError("size/context mismatch")
        n = self.n
        a, b = self.rows, other.rows
        return Mat([[sum(a[i][k] * b[k][j] for k in range(n))
                     for j in range(n)] for i in range(n)], self.p)

    def __eq__(self, other):
        return (isinstance(other, Mat) and self.p == other.p
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.p, self.rows))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def transpose(self) -> "Mat":
        return Mat(list(zip(*self.rows)), self.p)

    def scale(self, c) -> "Mat":
        c = Fraction(c)
        return Mat([[c * x for x in row] for row in self.rows], self.p)

    def det(self) -> Fraction:
        work = [list(row) for row in self.rows]
        n = self.n
        d = Fraction(1)
        for i in range(n):
            piv = next((r for r in range(i, n) if work[r][i] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != i:
                work[i], work[piv] = work[piv], work[i]
                d = -d
            d *= work[i][i]
            for r in range(i + 1, n):
                f = work[r][i] / work[i][i]
                if f:
                    for c in range(i, n):
                        work[r][c] -= f * work[i][c]
        return d

    def inv(self) -> "Mat":
        n = self.n
        work = [list(row) + [Fraction(1) if i == j else Fraction(0)
                             for j in range(n)]
                for i, row in enumerate(self.rows)]
        for i in range(n):
            piv = next((r for r in range(i, n) if work[r][i] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            work[i], work[piv] = work[piv], work[i]
            inv_piv = 1 / work[i][i]
            work[i] = [x * inv_piv for x in work[i]]
            for r in range(n):
                if r != i and work[r][i]:
                    f = work[r][i]
                    work[r] = [x - f * y for x, y in zip(work[r], work[i])]
        return Mat([row[n:] for row in work], self.p)

    def ad(self, g: "Mat") -> "Mat":
        """Conjugation: self acts, returning self @ g @ self^{-1}."""
        return self @ g @ self.inv()

    # -- valuation-based membership ---------------------------------------

    def is_integral(self) -> bool:
        return all(x.denominator == 1 or valuation(x, self.p) >= 0
                   for row in self.rows for x in row if x != 0)

    def in_K(self) -> bool:
        return self.is_integral() and norm(self.det(), self.p) == 1

    def in_congruence(self, e: int) -> bool:
        """Membership in K(p^e): congruent to 1 modulo p^e entrywise."""
        if e == 0:
            return self.in_K()
        pe = Fraction(self.p) ** e
        for i in range(self.n):
            for j in range(self.n):
                d = self.rows[i][j] - (1 if i == j else 0)
                if d != 0 and valuation(d, self.p) < e:
                    return False
        return True

    def is_upper_unipotent(self, e: int = None) -> bool:
        """Upper unipotent; with e, additionally in K_N(p^e)."""
        for i in range(self.n):
            for j in range(self.n):
                x = self.rows[i][j]
                if i == j:
                    if x != 1:
                        return False
                elif i > j:
                    if x != 0:
                        return False
                elif e is not None and x != 0 and valuation(x, self.p) < e:
                    return False
        return True

    def is_lower_unipotent(self, e: int = None) -> bool:
        return self.transpose().is_upper_unipotent(e)

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j] == 0
                   for i in range(self.n) for j in range(self.n) if i != j)

    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self.rows[i][i] for i in range(self.n))

    def __repr__(self):
        return f"Mat[{self.to_text()}; p={self.p}]"


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IwasawaUAK:
    u: Mat  # lower unipotent
    a: Mat  # diagonal, pure p-powers
    k: Mat  # in K


@dataclass(frozen=True)
class IwasawaNAK:
    n: Mat  # upper unipotent
    a: Mat
    k: Mat


@dataclass(frozen=True)
class BruhatLDU:
    u: Mat  # lower unipotent
    a: Mat  # diagonal
    n: Mat  # upper unipotent


def iwasawa_UAK(g: Mat) -> IwasawaUAK:
    """g = u a k with u lower unipotent, a diagonal pure p-powers, k in K.

    Integral column elimination: in each working row pick the entry of
    minimal valuation as pivot (ties to the leftmost), so all clearing
    multipliers are p-integral and the accumulated column operations stay
    inside K.
    """
    n, p = g.n, g.p
    if g.det() == 0:
        raise ZeroDivisionError("singular matrix")
    work = [list(row) for row in g.rows]
    k1 = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
          for i in range(n)]

    def colswap(m, a, b):
        for row in m:
            row[a], row[b] = row[b], row[a]

    def colsub(m, dst, src, f):
        for row in m:
            row[dst] -= f * row[src]

    for i in range(n):
        cand = [(valuation(work[i][j], p), j)
                for j in range(i, n) if work[i][j] != 0]
        _, jstar = min(cand)
        if jstar != i:
            colswap(work, i, jstar)
            colswap(k1, i, jstar)
        for j in range(i + 1, n):
            if work[i][j] != 0:
                f = work[i][j] / work[i][i]  # p-integral by pivot choice
                colsub(work, j, i, f)
                colsub(k1, j, i, f)
    # work is now lower triangular and equals g @ k1
    tdiag = [work[i][i] for i in range(n)]
    a_entries = [Fraction(p) ** valuation(t, p) for t in tdiag]
    u = Mat([[work[i][j] / tdiag[j] if j <= i else Fraction(0)
              for j in range(n)] for i in range(n)], p)
    units = Mat.diag([t / ae for t, ae in zip(tdiag, a_entries)], p)
    k = units @ Mat(k1, p).inv()
    return IwasawaUAK(u, Mat.diag(a_entries, p), k)


def iwasawa_NAK(g: Mat) -> IwasawaNAK:
    """g = n a k via the UAK algorithm applied to the Weyl-flipped matrix."""
    w = Mat.longest_weyl(g.n, g.p)
    dec = iwasawa_UAK(w @ g @ w)
    return IwasawaNAK(w @ dec.u @ w, w @ dec.a @ w, w @ dec.k @ w)


def bruhat_open_cell(g: Mat) -> BruhatLDU | None:
    """g = u a n (lower-unipotent, diagonal, upper-unipotent).  Exists iff
    every leading principal minor is nonzero; a_i = Delta_i/Delta_{i-1}."""
    n, p = g.n, g.p
    work = [list(row) for row in g.rows]
    lower = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
             for i in range(n)]
    for i in range(n):
        if work[i][i] == 0:
            return None
        for r in range(i + 1, n):
            f = work[r][i] / work[i][i]
            lower[r][i] = f
            if f:
                for c in range(i, n):
                    work[r][c] -= f * work[i][c]
    a = [work[i][i] for i in range(n)]
    upper = [[work[i][j] / a[i] if j >= i else Fraction(0) for j in range(n)]
             for i in range(n)]
    return BruhatLDU(Mat(lower, p), Mat.diag(a, p), Mat(upper, p))


def iwahori_factor(k: Mat, e: int) -> tuple[Mat, Mat, Mat]:
    """Factor k in K(p^e), e >= 1, as u a n with u in K_U(p^e),
    a in K_A(p^e), n in K_N(p^e)."""
    if not k.in_congruence(e):
        raise ValueError(f"input not in K(p^{e})")
    dec = bruhat_open_cell(k)
    assert dec is not None, "congruence element has unit leading minors"
    u, a, nn = dec.u, dec.a, dec.n
    if not (u.is_lower_unipotent(e) and nn.is_upper_unipotent(e)
            and all(valuation(x - 1, k.p) >= e for x in a.diagonal() if x != 1)):
        raise AssertionError("Iwahori components escaped their levels")
    return u, a, nn


# ---------------------------------------------------------------------------
# minors and modular characters
# ---------------------------------------------------------------------------

def minor_norm_M(g: Mat, l: int) -> Fraction:
    """max |det| over all l x l minors of the bottom l rows of g."""
    n = g.n
    if not 1 <= l <= n:
        raise ValueError("l out of range")
    rows = [g.rows[i] for i in range(n - l, n)]
    best = Fraction(0)
    for cols in itertools.combinations(range(n), l):
        sub = Mat([[rows[i][c] for c in cols] for i in range(l)], g.p)
        best = max(best, norm(sub.det(), g.p))
    return best


def modular_delta(a: Mat, side: str = "N") -> Fraction:
    """delta_N(a) = prod_{i<j} |a_i/a_j|; delta_U is its inverse."""
    d = a.diagonal()
    out = Fraction(1)
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            out *= norm(d[i] / d[j], a.p)
    if side == "N":
        return out
    if side == "U":
        return 1 / out
    raise ValueError("side must be 'N' or 'U'")


def modular_delta_half_exponent(a: Mat, side: str = "N") -> Fraction:
    """log_p of delta^(1/2)(a), an exact (half-)integer p-exponent."""
    d = a.diagonal()
    s = 0
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            s += valuation(d[j] / d[i], a.p)
    s = Fraction(s, 2)
    return s if side == "N" else -s


# ---------------------------------------------------------------------------
# Haar volumes and coset enumeration
# ---------------------------------------------------------------------------

def gl_order(n: int, p: int, e: int) -> int:
    """|GL_n(Z/p^e)| for e >= 1."""
    if e < 1:
        raise ValueError("e must be >= 1")
    base = 1
    for k in range(n):
        base *= p ** n - p ** k
    return p ** ((e - 1) * n * n) * base


@dataclass(frozen=True)
class SubgroupSpec:
    """A symbolic compact open subgroup of GL_N(Q_p).

    tag in {"K", "Kq", "KN", "KU", "KA", "KQ"}; e is the congruence level as
    a p-exponent (so the level-q^j subgroup at depth m has e = j*m).  "K" has
    e = 0; for the unipotent/diagonal families e = 0 means the full integral
    points.
    """

    tag: str
    N: int
    p: int
    e: int = 0

    def __post_init__(self):
        if self.tag not in {"K", "Kq", "KN", "KU", "KA", "KQ"}:
            raise ValueError(f"unknown subgroup tag {self.tag}")
        if self.tag == "Kq" and self.e < 1:
            raise ValueError("principal congruence subgroup needs e >= 1")

    def contains(self, g: Mat) -> bool:
        if g.n != self.N or g.p != self.p:
            return False
        if self.tag == "K":
            return g.in_K()
        if self.tag == "Kq":
            return g.in_congruence(self.e)
        if self.tag == "KN":
            return g.is_upper_unipotent(self.e if self.e else 0)
        if self.tag == "KU":
            return g.is_lower_unipotent(self.e if self.e else 0)
        if self.tag == "KA":
            return (g.is_diagonal()
                    and all(x != 0 and valuation(x, self.p) == 0
                            and (self.e == 0 or x == 1
                                 or valuation(x - 1, self.p) >= self.e)
                            for x in g.diagonal()))
        if self.tag == "KQ":
            # lower-triangular integral, unit diagonal, with congruence level
            n = g.n
            if not g.is_integral():
                return False
            for i in range(n):
                for j in range(n):
                    x = g.rows[i][j]
                    if i < j and x != 0:
                        return False
                    if i == j:
                        if valuation(x, self.p) != 0:
                            return False
                        if self.e and x != 1 and valuation(x - 1, self.p) < self.e:
                            return False
                    if i > j and self.e and x != 0 and valuation(x, self.p) < self.e:
                        return False
            return True
        raise AssertionError


def haar_volume(spec: SubgroupSpec) -> Fraction:
    """Exact volume of spec inside its normalized ambient group."""
    N, p, e = spec.N, spec.p, spec.e
    dim_nilp = N * (N - 1) // 2
    if spec.tag == "K":
        return Fraction(1)
    if spec.tag == "Kq":
        return Fraction(1, gl_order(N, p, e))
    if spec.tag in ("KN", "KU"):
        return Fraction(1, p ** (e * dim_nilp))
    if spec.tag == "KA":
        if e == 0:
            return Fraction(1)
        return Fraction(1, ((p - 1) * p ** (e - 1)) ** N)
    if spec.tag == "KQ":
        return (haar_volume(SubgroupSpec("KA", N, p, e))
                * haar_volume(SubgroupSpec("KU", N, p, e)))
    raise AssertionError


def open_cell_density(N: int, p: int) -> Fraction:
    """c0 in dg = c0 * delta_N(a) du da dn: the Haar proportion of K lying on
    the open cell, i.e. |U(F_p)| |A(F_p)| |N(F_p)| / |GL_N(F_p)|."""
    cell = (p - 1) ** N * p ** (N * (N - 1))
    return Fraction(cell, gl_order(N, p, 1))


def _digit_range(p: int, e: int, L: int):
    """Values c*p^e for c mod p^(L-e) (representatives of p^e Z / p^L Z)."""
    return [Fraction(c * p ** e) for c in range(p ** (L - e))]


def enumerate_cosets(spec: SubgroupSpec, L: int) -> list[Mat]:
    """Representatives of spec modulo its own level-L congruence kernel.

    L is a p-exponent with L >= spec.e.  Enumeration order is deterministic
    (lexicographic in entry residues).  For "Kq" the representatives are
    1 + x with x running over p^e M_N mod p^L, which is a genuine transversal
    because k' k^{-1} in K(p^L) iff k' = k + p^L * (integral) for k in K.
    """
    N, p, e = spec.N, spec.p, spec.e
    if L < max(e, 1):
        raise ValueError("L below subgroup level")
    if spec.tag == "Kq":
        coords = [(i, j) for i in range(N) for j in range(N)]
        reps = []
        for vals in itertools.product(_digit_range(p, e, L), repeat=len(coords)):
            rows = [[Fraction(1) if i == j else Fraction(0) for j in range(N)]
                    for i in range(N)]
            for (i, j), v in zip(coords, vals):
                rows[i][j] += v
            reps.append(Mat(rows, p))
        return reps
    if spec.tag in ("KN", "KU"):
        coords = ([(i, j) for i in range(N) for j in range(N) if i < j]
                  if spec.tag == "KN" else
                  [(i, j) for i in range(N) for j in range(N) if i > j])
        reps = []
        for vals in itertools.product(_digit_range(p, e, L), repeat=len(coords)):
            rows = [[Fraction(1) if i == j else Fraction(0) for j in range(N)]
                    for i in range(N)]
            for (i, j), v in zip(coords, vals):
                rows[i][j] = v
            reps.append(Mat(rows, p))
        return reps
    if spec.tag == "KA":
        if e == 0:
            units = [Fraction(c) for c in range(1, p ** L) if c % p != 0]
        else:
            units = [1 + v for v in _digit_range(p, e, L)]
        return [Mat.diag(list(vals), p)
                for vals in itertools.product(units, repeat=N)]
    if spec.tag == "KQ":
        a_reps = enumerate_cosets(SubgroupSpec("KA", N, p, e), L)
        u_reps = enumerate_cosets(SubgroupSpec("KU", N, p, e), L)
        return [a @ u for a in a_reps for u in u_reps]
    if spec.tag == "K":
        reps = []
        pl = p ** L
        for vals in itertools.product(range(pl), repeat=N * N):
            rows = [[Fraction(vals[i * N + j]) for j in range(N)]
                    for i in range(N)]
            g = Mat(rows, p)
            if g.det() % p != 0:
                reps.append(g)
        return reps
    raise AssertionError
