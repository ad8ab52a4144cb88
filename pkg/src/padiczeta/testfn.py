"""The localized test function on GL_N(Q_p), two ways.

The function f is defined by convolving the open-cell kernel J against the
projector onto the chi_theta-isotypic part of K(q), and admits a closed
formula: f(g) vanishes unless the Iwasawa a-part of g is trivial and the
K-part is lower-triangular mod q, in which case f(g) = chi_theta(k') for
the congruence-subgroup remainder k'.  Both routes are implemented and
compared pointwise on exhaustive grids.

Convolution levels.  The sum over K(q)/K(q^L) is exact as soon as J(g .)
is right K(q^L)-invariant.  For integral g this happens already at L = 2m
(leading minors and superdiagonal ratios only move by q^2-multiples), and
the whole term can be evaluated in Z/q^2 integer arithmetic, which is the
fast path.  For non-integral g no level is guaranteed a priori, so we
certify stabilization empirically per point.

The H-side function is the conjugated translate f_H(g) = c1 conj(f0)(t g)
with t the antidominant square-root-of-T diagonal, normalized so that the
L^2-norm over U_H\\H is one; c1 is kept exact as a square root of a
rational and never folded into the cyclotomic phases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import (
    CycValue,
    DepthContext,
    MellinMonomial,
    SqrtRational,
    frac_part,
    psi_T,
    valuation,
)
from .group import Mat, SubgroupSpec, bruhat_open_cell, enumerate_cosets, iwasawa_UAK
from .params import chi_tau_eval, theta_matrix
from .residue import ZMat, int_det


def J_open_cell(g: Mat, ctx: DepthContext) -> CycValue:
    """Open-cell kernel: zero off the big cell or when the cell's diagonal
    is not a unit vector, else the additive character of the superdiagonal
    of the upper-triangular factor."""
    dec = bruhat_open_cell(g)
    if dec is None:
        return CycValue.zero
    for d in dec.a.diagonal():
        if valuation(d, ctx.p) != 0:
            return CycValue.zero
    s = sum(dec.n.rows[i][i + 1] for i in range(g.n - 1))
    return psi_T(s, ctx)


def _leading_minor(entries, size: int) -> int:
    return int_det([[entries[i][j] for j in range(size)] for i in range(size)])


def _J_exponent_mod(z: ZMat, ctx: DepthContext):
    """Exponent r with J(lift(z)) = exp(2 pi i r), or None when J vanishes,
    for an integral argument known modulo q^2.

    The superdiagonal entries of the upper factor are ratios of minors:
    n_{i,i+1} = det(rows 1..i, cols 1..i-1,i+1) / Delta_i, and all the
    Delta_i must be units for the cell's diagonal to be one.
    """
    n, mod, p = z.n, z.modulus, z.p
    total = 0
    for i in range(1, n):
        delta = _leading_minor(z.entries, i) % mod
        if delta % p == 0:
            return None
        sub = [[z.entries[r][c] for c in list(range(i - 1)) + [i]]
               for r in range(i)]
        total += int_det(sub) * pow(delta, -1, mod)
    if _leading_minor(z.entries, n) % p == 0:
        return None
    return frac_part(Fraction(total % mod, ctx.T), ctx.p)


def _phase(r: Fraction) -> CycValue:
    return CycValue.root_of_unity(r.denominator, r.numerator % r.denominator)


def _convolution_integral(g: Mat, ctx: DepthContext, tau=None) -> CycValue:
    """Exact convolution at level 2m via residue arithmetic (g integral).

    tau selects the projecting character; None means the subdiagonal
    nilpotent, whose character only reads the superdiagonal.
    """
    p, m, n = ctx.p, ctx.m, g.n
    q = ctx.q
    z = ZMat.from_mat(g, 2 * m)
    total = CycValue.zero
    for off in itertools.product(range(q), repeat=n * n):
        rows = [[(1 if i == j else 0) + q * off[i * n + j] for j in range(n)]
                for i in range(n)]
        r = ZMat.make(rows, p, 2 * m)
        jexp = _J_exponent_mod(z @ r, ctx)
        if jexp is None:
            continue
        if tau is None:
            tr = sum(off[i * n + i + 1] for i in range(n - 1))
        else:
            tr = sum(off[i * n + j] * tau.mat.entries[j][i]
                     for i in range(n) for j in range(n))
        chi_exp = frac_part(Fraction(q * tr, ctx.T), p)
        total = total + _phase(jexp - chi_exp)
    return total * Fraction(1, q ** (n * n))


def f_convolution(g: Mat, ctx: DepthContext, L: int | None = None,
                  cap: int = 4) -> CycValue:
    """f(g) by definitional convolution against the chi_theta projector.

    With L given, returns the normalized sum over K(q)/K(q^L).  With
    L=None, integral arguments use the exact residue path at level 2m;
    other arguments are certified by stabilization: levels 2m+1, 2m+2, ...
    until two consecutive answers agree (RuntimeError past 2m+cap).
    """
    if L is None:
        if g.is_integral():
            return _convolution_integral(g, ctx)
        prev = None
        for lev in range(2 * ctx.m + 1, 2 * ctx.m + cap + 1):
            cur = f_convolution(g, ctx, L=lev)
            if prev is not None and cur == prev:
                return cur
            prev = cur
        raise RuntimeError("convolution level cap exceeded")
    if L < 2 * ctx.m:
        raise ValueError("level must be at least 2m")
    n = g.n
    theta = theta_matrix(n, ctx)
    total = CycValue.zero
    for r in enumerate_cosets(SubgroupSpec("Kq", n, ctx.p, ctx.m), L):
        term = J_open_cell(g @ r, ctx)
        if term.is_zero():
            continue
        total = total + term * chi_tau_eval(theta, r).conj()
    return total * Fraction(1, ctx.p ** ((L - ctx.m) * n * n))


def f_explicit(g: Mat, ctx: DepthContext) -> CycValue:
    """Closed formula: with g = u a k (a pure p-powers, units folded into
    k), f(g) = 0 unless a = 1 and k is lower-triangular mod q; then the
    value is chi_theta of k stripped of its exact lower part.  The strip
    is well defined because the character ignores lower-triangular
    perturbations."""
    n = g.n
    dec = iwasawa_UAK(g)
    if dec.a != Mat.identity(n, ctx.p):
        return CycValue.zero
    val = _explicit_on_K(dec.k, ctx, theta_matrix(n, ctx))
    return CycValue.zero if val is None else val


def lower_borel_order(N: int, p: int, e: int) -> int:
    """Order of the invertible lower-triangular matrices over Z/p^e."""
    return ((p - 1) * p ** (e - 1)) ** N * p ** (e * N * (N - 1) // 2)


def l2_norm_sq(ctx: DepthContext, N: int) -> Fraction:
    """Exact squared L^2-norm of f over U\\G: the density of the support
    of f|_K, which is the preimage of the lower-triangular invertibles."""
    from .group import gl_order

    return Fraction(lower_borel_order(N, ctx.p, ctx.m),
                    gl_order(N, ctx.p, ctx.m))


def l2_norm_report(ctx: DepthContext, N: int):
    """(value, p-exponent, constant): value factors as the depth-free
    open-cell density times p to the exponent -m dim(N)."""
    from .group import open_cell_density

    val = l2_norm_sq(ctx, N)
    expo = -ctx.m * (N * (N - 1) // 2)
    const = val / Fraction(ctx.p) ** expo
    assert const == open_cell_density(N, ctx.p)
    return val, expo, const


@dataclass(frozen=True)
class TestFunction:
    """f with an optional antidominant translation and normalization.

    shift holds the diagonal translation exponents in units of the square
    root of Ttilde (so entry i of the translation is p^{-m shift_i}); c1
    is the exact normalization, and conjugate toggles complex conjugation
    of the underlying phase.
    """

    ctx: DepthContext
    N: int
    shift: tuple
    c1: SqrtRational
    conjugate: bool = False

    def shift_mat(self) -> Mat:
        p, m = self.ctx.p, self.ctx.m
        return Mat.diag([Fraction(p) ** (-m * s) for s in self.shift],
                        p)

    def phase(self, g: Mat) -> CycValue:
        """The cyclotomic part of the value; the full value is c1 * phase."""
        v = f_explicit(self.shift_mat() @ g, self.ctx)
        return v.conj() if self.conjugate else v

    def value_parts(self, g: Mat):
        return self.c1, self.phase(g)


def base_test_function(ctx: DepthContext, N: int) -> TestFunction:
    return TestFunction(ctx, N, tuple(0 for _ in range(N)),
                        SqrtRational.of_rational(Fraction(1)))


def translate_for_H(ctx: DepthContext, n: int) -> TestFunction:
    """The H-side function: conjugate f0 translated by the antidominant
    half-power diagonal, normalized to unit L^2-norm over U_H\\H.

    The translation multiplies the norm by the U-modular character of the
    translation element, a pure power of T, so c1 is an explicit square
    root of a rational.
    """
    shift = tuple(2 * i - n - 1 for i in range(1, n + 1))
    delta_u = Fraction(ctx.T) ** (n * (n * n - 1) // 6)
    c1 = SqrtRational.sqrt(1 / (delta_u * l2_norm_sq(ctx, n)))
    return TestFunction(ctx, n, shift, c1, conjugate=True)


def mellin_component(tf: TestFunction, g: Mat):
    """The symbolic-in-s component of tf at g, as a monomial in the
    half-powers of T, or None when it vanishes.

    Only one diagonal coset contributes (the support pins the a-part), so
    the a-integral collapses: the monomial records the inverse character
    (delta_U^{1/2} |.|^s)^{-1} at that coset and the cyclotomic phase of
    the function there.  The normalization c1 is *not* folded in; read it
    off tf.c1.
    """
    ctx = tf.ctx
    p, m, n = ctx.p, ctx.m, tf.N
    dec = iwasawa_UAK(tf.shift_mat() @ g)
    kval = _explicit_on_K(dec.k, ctx, theta_matrix(n, ctx))
    if kval is None:
        return None
    phase = kval.conj() if tf.conjugate else kval
    vals = [-valuation(d, p) for d in dec.a.diagonal()]
    if any(v % m for v in vals):
        raise ValueError("a-part exponent off the half-power lattice")
    expo = tuple(v // m for v in vals)
    w = -sum(vals[i] - vals[j] for i in range(n) for j in range(i + 1, n))
    if w % (2 * m):
        raise ValueError("modular character off the half-power lattice")
    return MellinMonomial(phase, expo, w // (2 * m))


def _explicit_on_K(k: Mat, ctx: DepthContext, theta) -> CycValue | None:
    n, p, m = k.n, ctx.p, ctx.m
    for i in range(n):
        for j in range(i + 1, n):
            x = k.rows[i][j]
            if x != 0 and valuation(x, p) < m:
                return None
    low = Mat([[k.rows[i][j] if i >= j else Fraction(0) for j in range(n)]
               for i in range(n)], p)
    return chi_tau_eval(theta, low.inv() @ k)


def dual_value_parts(tf: TestFunction, g: Mat):
    """The dual function at g: tf at w_G times inverse-transpose of g."""
    w = Mat.longest_weyl(tf.N, tf.ctx.p)
    return tf.value_parts(w @ g.inv().transpose())
