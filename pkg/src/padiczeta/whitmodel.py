"""The localized Whittaker vector restricted to the mirabolic block.

On H = GL_n (the upper-left block of G = GL_{n+1}) the vector is supported
on the single double coset N_H a_T K_H(q), where a_T is the descending
chain of Ttilde-powers diag(Ttilde^n, ..., Ttilde) (the last, trivial
coordinate of the G-side element is dropped).  On the support,

    W(a_T n y) = psi_Ttilde(n) chi_theta(y) W(a_T),

and W(a_T) is fixed positive by requiring unit L^2-norm over N_H\\H, i.e.
W(a_T) = vol(X)^{-1/2} for X the image of the support in N_H\\H.

Membership in the support is decided constructively: a_T^{-1} h lies in
N(F) K(q) iff bottom-up row elimination by an upper-unipotent matrix lands
in the congruence subgroup, and the eliminating matrix is exactly the
witness n (up to inversion).

The module also verifies the concentration statement behind the support
lemma: integrally, conjugation keeping the parameter subcyclic forces the
conjugator into the unipotent-times-congruence part; non-integrally, an
explicit contradicting unipotent u with psi_Ttilde(u) != chi_tau(h^{-1}uh)
is searched for and reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import CycValue, DepthContext, SqrtRational, psi_T, valuation
from .group import Mat, SubgroupSpec, haar_volume
from .params import TauParam, chi_tau_eval, is_subcyclic_wrt, theta_matrix
from .residue import ZMat, enumerate_GL


def a_T_element(ctx: DepthContext, n: int) -> Mat:
    """diag(Ttilde^n, ..., Ttilde) in GL_n."""
    return Mat.diag([ctx.Ttilde ** (n - i) for i in range(n)], ctx.p)


def vol_support_quotient(ctx: DepthContext, n: int) -> Fraction:
    """Volume of the image of N_H a_T K_H(q) in N_H\\H.

    Equals vol(K_H(q)) divided by the volume of the unipotent fiber
    a_T K_N(q) a_T^{-1}, whose shape stretches entry (i,j) by Ttilde^{j-i}.
    """
    from .group import gl_order

    vol_kq = Fraction(1, gl_order(n, ctx.p, ctx.m))
    dim_n = n * (n - 1) // 2
    fiber = Fraction(ctx.T) ** (n * (n * n - 1) // 6) \
        * Fraction(ctx.p) ** (-ctx.m * dim_n)
    return vol_kq / fiber


@dataclass(frozen=True)
class WhittakerOnH:
    """The restriction data: context, rank of H, and the peak value."""

    ctx: DepthContext
    n: int

    @property
    def a_T(self) -> Mat:
        return a_T_element(self.ctx, self.n)

    @property
    def peak(self) -> SqrtRational:
        """W(a_T) = vol(X)^{-1/2}, positive."""
        return SqrtRational.sqrt(1 / vol_support_quotient(self.ctx, self.n))

    def support_witness(self, h: Mat):
        """Decompose a_T^{-1} h = n y with n upper-unipotent and y in K(q),
        or return None.

        Bottom-up elimination: the last row cannot be fixed, so it must
        already be congruent to the last standard row; each higher row is
        corrected by the rows below it (the correcting coefficients are
        unique up to q-integral shifts that do not affect the decision).
        """
        ctx, n = self.ctx, self.n
        p, m = ctx.p, ctx.m
        g = [list(r) for r in (self.a_T.inv() @ h).rows]
        vmat = [[Fraction(1 if i == j else 0) for j in range(n)]
                for i in range(n)]

        def congr(x, target):
            d = x - target
            return d == 0 or valuation(d, p) >= m

        for i in range(n - 1, -1, -1):
            if i < n - 1:
                size = n - 1 - i
                sub = Mat([[g[i + 1 + c][i + 1 + r] for c in range(size)]
                           for r in range(size)], p)
                rhs = [-g[i][i + 1 + c] for c in range(size)]
                if sub.det() == 0:
                    return None
                inv = sub.inv()
                w = [sum(inv.rows[r][c] * rhs[c] for c in range(size))
                     for r in range(size)]
                for r in range(size):
                    for c in range(n):
                        g[i][c] += w[r] * g[i + 1 + r][c]
                        vmat[i][c] = vmat[i][c] + w[r] * vmat[i + 1 + r][c]
            for c in range(i + 1):
                if not congr(g[i][c], 1 if c == i else 0):
                    return None
            for c in range(i + 1, n):
                if g[i][c] != 0 and valuation(g[i][c], p) < m:
                    return None
        v = Mat(vmat, p)
        y = Mat(g, p)
        nwit = v.inv()
        assert nwit.is_upper_unipotent()
        return nwit, y

    def value_parts(self, h: Mat):
        """(coefficient, phase) with W(h) = coefficient * phase; the
        coefficient is the peak value or zero."""
        wit = self.support_witness(h)
        if wit is None:
            return SqrtRational.of_rational(Fraction(0)), CycValue.zero
        nwit, y = wit
        s = sum(nwit.rows[i][i + 1] for i in range(self.n - 1))
        phase = psi_T(s, self.ctx) * chi_tau_eval(
            theta_matrix(self.n, self.ctx), y)
        return self.peak, phase

    def phase(self, h: Mat) -> CycValue:
        return self.value_parts(h)[1]


# -- concentration ----------------------------------------------------------

def _embed_in_G(z: ZMat, N: int) -> ZMat:
    n = z.n
    rows = [[z.entries[i][j] if i < n and j < n else (1 if i == j else 0)
             for j in range(N)] for i in range(N)]
    return ZMat.make(rows, z.p, z.e)


def concentration_integral(tau: TauParam):
    """Exhaustive check over H(o/q): keeping tau subcyclic under
    conjugation forces the conjugator to be upper-unipotent mod q.
    Returns (checked, violations)."""
    N = tau.n
    n = N - 1
    ctx = tau.ctx
    ident = ZMat.identity(N, ctx.p, ctx.m)
    checked, violations = 0, []
    for h in enumerate_GL(n, ctx.p, ctx.m):
        checked += 1
        hg = _embed_in_G(h, N)
        conj = TauParam(ctx, hg @ tau.mat @ hg.inv())
        if is_subcyclic_wrt(conj, ident):
            uni = all(h.entries[i][j] == (1 if i == j else 0)
                      for i in range(n) for j in range(i + 1))
            if not uni:
                violations.append(h.entries)
    return checked, violations


def _unit_reps(ctx: DepthContext):
    mod = ctx.p ** (2 * ctx.m)
    return [u for u in range(1, mod) if u % ctx.p != 0]


def find_contradicting_unipotent(tau: TauParam, h: Mat):
    """A u = 1 + t pi^r E_{ij} in N(F) with h^{-1} u h in K(q) but
    psi_Ttilde(u) != chi_tau(h^{-1} u h); such a u forces W(h) = 0.

    Returns the witness (i, j, r, t) and both character values, or None.
    """
    ctx = tau.ctx
    N = tau.n
    p, m = ctx.p, ctx.m
    hinv = h.inv()
    lo = min((valuation(x, p) for row in h.rows for x in row if x != 0),
             default=0)
    for i in range(N):
        for j in range(i + 1, N):
            for r in range(lo - 1, 2 * m + 1 - lo):
                for t in _unit_reps(ctx):
                    u = Mat.elementary(N, p, i, j,
                                       Fraction(t) * Fraction(p) ** r)
                    conj = hinv @ u @ h
                    if not conj.in_congruence(m):
                        continue
                    lhs = psi_T(u.rows[i][j] if j == i + 1 else Fraction(0),
                                ctx)
                    rhs = chi_tau_eval(tau, conj)
                    if lhs != rhs:
                        return {"i": i, "j": j, "r": r, "t": t,
                                "psi": lhs, "chi": rhs}
    return None


def concentration_check(tau: TauParam, box: int = 2):
    """Full report for the support concentration of chi_tau-equivariant
    Whittaker functions restricted to H.

    Part one is the exhaustive integral statement; part two produces, for
    every nontrivial valuation profile in [-box, box]^n and every residue
    class of K_H mod p, a contradicting unipotent.  tau should be stable
    and subcyclic for part two to succeed.
    """
    ctx = tau.ctx
    N = tau.n
    n = N - 1
    checked, violations = concentration_integral(tau)
    report = {
        "integral_checked": checked,
        "integral_violations": violations,
        "nonintegral_failures": [],
        "nonintegral_checked": 0,
    }
    profiles = [prof for prof in
                itertools.product(range(-box, box + 1), repeat=n)
                if any(prof)]
    kreps = [_embed_in_G(k, N).lift() for k in enumerate_GL(n, ctx.p, 1)]
    for prof in profiles:
        a = Mat.diag([Fraction(ctx.p) ** e for e in prof] + [Fraction(1)],
                     ctx.p)
        for k in kreps:
            report["nonintegral_checked"] += 1
            h = a @ k
            if find_contradicting_unipotent(tau, h) is None:
                report["nonintegral_failures"].append(
                    {"profile": prof, "k": k.to_text()})
    return report
