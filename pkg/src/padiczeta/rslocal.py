"""Local Rankin--Selberg layer: the unipotent transform W(f,c,g), the
integrals Q and Q_P, and their support laws.

Class elements.  The working class consists of functions on N\\G (N the
upper unipotent) that are left K_A-invariant, right K(q^2)-invariant,
supported on N K_A a0 K for the fixed descending profile |a0_i| =
T^{(2i-1-n)/2}, and of recorded L^2-norm.  Our concentrated function has
left *lower*-unipotent structure, so its class representative is the left
translate by the longest Weyl element; the duality map g -> w_G g^{-T} is
checked to preserve the class.

The transform is W(f,c,g) = delta_N^{1/2}(c) * integral over u in N of
f(c^{-1} w_G u g) psi^{-1}(u) du, evaluated as an exact finite sum.  The
unipotent domain is cut into congruence-pattern cells on which the
integrand is provably constant: entry (k,l) is fixed modulo p^{L_kl} with

    L_kl >= 2m + v(a_k) - v(a_l)   (right K(q^2)-invariance after pulling
                                    the cell generator through a),
    L_{i,i+1} >= 0                 (constancy of psi),
    L_kj >= L_ij + B for i < k     (box entries of depth p^{-B} mix columns),

floored at -B so the pattern is a group.  Only the box depth B is
empirical: every reported value carries a stabilization certificate
(unchanged under B -> B+1).

The integral Q(phi,f,c) = integral over N\\G of phi(e_n g)|W(f,c,g)|^2 dg,
with phi the characteristic function of primitive integral rows, factors
through Iwasawa coordinates.  Two structural collapses keep it exact and
small: the support of f pins every leading-minor valuation of the Iwasawa
argument, so for diagonal c the outer a-sum has at most one term; and the
transform values are right chi-equivariant under K(q), so |W|^2 is right
K(q)-invariant and the K-integral is a sum over the mod-q transversal.
The parabolic variant W_P, Q_P replaces w_G by the block Weyl element of
the lower Levi factor and integrates only over its unipotent block; there
the outer sum is windowed with an empty-shell widening certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import CycValue, DepthContext, SqrtRational, psi, valuation
from .group import (
    Mat,
    SubgroupSpec,
    enumerate_cosets,
    haar_volume,
    iwasawa_UAK,
    modular_delta,
    modular_delta_half_exponent,
)
from .params import theta_matrix
from .testfn import TestFunction, _explicit_on_K, translate_for_H


# -- the class of concentrated functions ------------------------------------

@dataclass(frozen=True)
class EClassElement:
    """A concentrated element of the N\\G class, with recorded norm.

    The underlying data is the lower-structured test function; values are
    taken after left translation by the longest Weyl element, and `dual`
    composes with the duality map g -> w_G g^{-T}.
    """

    tf: TestFunction
    norm_sq: Fraction
    dual: bool = False

    @property
    def ctx(self) -> DepthContext:
        return self.tf.ctx

    @property
    def n(self) -> int:
        return self.tf.N

    def value_parts(self, g: Mat):
        w = Mat.longest_weyl(self.n, self.ctx.p)
        if self.dual:
            g = w @ g.inv().transpose()
        return self.tf.value_parts(w @ g)

    def phase(self, g: Mat) -> CycValue:
        return self.value_parts(g)[1]

    def support_profile(self) -> tuple:
        """Valuations v(a_i) of the unique diagonal coset meeting the
        support: |a_i| = T^{(2i-1-n)/2}."""
        n, m = self.n, self.ctx.m
        return tuple(m * (n + 1 - 2 * i) for i in range(1, n + 1))


def _profile_mat(elem: EClassElement) -> Mat:
    ctx = elem.ctx
    return Mat.diag([Fraction(ctx.p) ** v for v in elem.support_profile()],
                    ctx.p)


def certify_E_class(elem: EClassElement) -> dict:
    """Machine-check the defining conditions on finite grids.

    (i) left K_A-invariance and right K(q^2)-invariance on unit-diagonal
    and one-level-deep congruence representatives; (ii) support: on a
    diagonal valuation box times K-residues, the value vanishes off the
    recorded profile, and the profile coset is actually hit; (iii) the
    recorded squared norm is positive.  Raises ValueError on failure and
    returns the checked counts.
    """
    ctx, n = elem.ctx, elem.n
    p, m = ctx.p, ctx.m
    a0 = _profile_mat(elem)
    kreps = enumerate_cosets(SubgroupSpec("K", n, p), max(m, 1))
    base_pts = [a0] + [a0 @ k for k in kreps[:5]]
    checked = {"left_KA": 0, "right_Kq2": 0, "support": 0}
    units = [Fraction(c) for c in range(1, p ** m) if c % p != 0]
    for g in base_pts:
        ref = elem.phase(g)
        for vals in itertools.product(units, repeat=n):
            d = Mat.diag(list(vals), p)
            if elem.phase(d @ g) != ref:
                raise ValueError("not left K_A-invariant")
            checked["left_KA"] += 1
        for r in enumerate_cosets(SubgroupSpec("Kq", n, p, 2 * m),
                                  2 * m + 1)[:2 * p ** n]:
            if elem.phase(g @ r) != ref:
                raise ValueError("not right K(q^2)-invariant")
            checked["right_Kq2"] += 1
    prof = elem.support_profile()
    lo, hi = min(prof) - m, max(prof) + m
    for vals in itertools.product(range(lo, hi + 1), repeat=n):
        if vals == prof:
            continue
        a = Mat.diag([Fraction(p) ** v for v in vals], p)
        for k in kreps[:4]:
            checked["support"] += 1
            if not elem.phase(a @ k).is_zero():
                raise ValueError(f"support leaks to profile {vals}")
    if not any(not elem.phase(a0 @ k).is_zero() for k in kreps):
        raise ValueError("profile coset not in the support")
    if elem.norm_sq <= 0:
        raise ValueError("norm must be positive")
    return checked


def standard_E_element(ctx: DepthContext, n: int,
                       dual: bool = False) -> EClassElement:
    """The unit-norm concentrated element (or its dual), certified."""
    elem = EClassElement(translate_for_H(ctx, n), Fraction(1), dual)
    certify_E_class(elem)
    return elem


# -- unipotent cells --------------------------------------------------------

@dataclass(frozen=True)
class RSIntegralConfig:
    """Truncation policy for the noncompact directions: start with
    unipotent entries of depth p^{-box_start} and certify stabilization by
    growing the box until two consecutive values agree; outer diagonal
    windows (parabolic case only) widen until two consecutive shells are
    empty."""

    box_start: int = 2
    box_cap: int = 6
    shell_cap: int = 8


def _cell_levels(ctx: DepthContext, a: Mat, B: int, coords):
    """Per-entry cell levels making the transform integrand constant."""
    m = ctx.m
    v = [valuation(x, ctx.p) for x in a.diagonal()]
    L = {}
    for (k, l) in coords:
        base = 2 * m + v[k] - v[l]
        if l == k + 1:
            base = max(base, 0)
        L[(k, l)] = max(base, -B)
    changed = True
    while changed:
        changed = False
        for (i, j) in coords:
            for (k, j2) in coords:
                if j2 == j and k > i and (i, k) in L \
                        and L[(k, j)] < L[(i, j)] + B:
                    L[(k, j)] = L[(i, j)] + B
                    changed = True
    return L


def _u_cells(ctx: DepthContext, n: int, a: Mat, B: int, coords=None):
    """(representative, volume) pairs covering the unipotent box of entry
    depth p^{-B} by cells of the computed congruence pattern."""
    p = ctx.p
    if coords is None:
        coords = [(k, l) for k in range(n) for l in range(k + 1, n)]
    L = _cell_levels(ctx, a, B, coords)
    per_coord = [[Fraction(t, p ** B) for t in range(p ** (B + L[c]))]
                 for c in coords]
    vol = Fraction(p) ** (-sum(L.values()))
    cells = []
    for vals in itertools.product(*per_coord):
        rows = [[Fraction(1 if i == j else 0) for j in range(n)]
                for i in range(n)]
        for (k, l), x in zip(coords, vals):
            rows[k][l] = x
        cells.append((Mat(rows, p), vol))
    return cells


def _block_weyl(n: int, nprime: int, p: int) -> Mat:
    """Longest Weyl element of the lower (n - nprime)-block Levi factor."""
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(nprime):
        rows[i][i] = Fraction(1)
    for i in range(nprime, n):
        rows[i][nprime + n - 1 - i] = Fraction(1)
    return Mat(rows, p)


def _head(f: EClassElement, c: Mat, wM: Mat) -> Mat:
    """shift * w_G * c^{-1} * w_M: the constant left factor so that the
    transform integrand is the explicit value at head * u * a * k."""
    ctx = f.ctx
    w = Mat.longest_weyl(f.n, ctx.p)
    return f.tf.shift_mat() @ w @ c.inv() @ wM


def _w_cell_data(f: EClassElement, c: Mat, a: Mat, B: int,
                 nprime: int = 0):
    """Surviving transform cells at box depth B: pairs (weight, kmat) with
    weight = psi^{-1}(u) * vol and the K-part of the pinned Iwasawa
    factorization; the value at k in K is sum of weight * phase(kmat k).
    Only for forward elements (the dual takes the slow path)."""
    ctx, n = f.ctx, f.n
    assert not f.dual
    coords = [(k, l) for k in range(nprime, n) for l in range(k + 1, n)]
    head = _head(f, c, _block_weyl(n, nprime, ctx.p))
    grouped = {}
    for u, vol in _u_cells(ctx, n, a, B, coords):
        dec = iwasawa_UAK(head @ u @ a)
        if dec.a != Mat.identity(n, ctx.p):
            continue
        s = sum(u.rows[i][i + 1] for i in range(n - 1))
        w = psi(-s, ctx.p) * vol
        # the evaluated phase only sees the K-part mod q^2, so cells may
        # be merged along that reduction
        key = _kq2_key(dec.k, ctx)
        kmat, acc = grouped.get(key, (dec.k, CycValue.zero))
        grouped[key] = (kmat, acc + w)
    return [(w, kmat) for kmat, w in grouped.values() if not w.is_zero()]


def _kq2_key(kmat: Mat, ctx: DepthContext):
    mod = ctx.p ** (2 * ctx.m)
    out = []
    for row in kmat.rows:
        for x in row:
            out.append(x.numerator * pow(x.denominator, -1, mod) % mod)
    return tuple(out)


def _coeff(f: EClassElement, c: Mat) -> SqrtRational:
    e2 = 2 * modular_delta_half_exponent(c, "N")
    return SqrtRational.sqrt(Fraction(f.ctx.p) ** e2) * f.tf.c1


@dataclass(frozen=True)
class WValue:
    """coeff * phase, with coeff a positive square root of a rational (the
    modular normalization delta_N^{1/2}(c) times c1) and phase an exact
    cyclotomic sum carrying the cell volumes."""

    coeff: SqrtRational
    phase: CycValue

    def is_zero(self) -> bool:
        return self.phase.is_zero()

    def abs_sq(self) -> CycValue:
        return self.phase.abs_sq() * self.coeff.squared()


def _assemble(f: EClassElement, c: Mat, cells, k: Mat) -> WValue:
    ctx = f.ctx
    theta = theta_matrix(f.n, ctx)
    total = CycValue.zero
    for weight, kmat in cells:
        val = _explicit_on_K(kmat @ k, ctx, theta)
        if val is None:
            continue
        if f.tf.conjugate:
            val = val.conj()
        total = total + weight * val
    return WValue(_coeff(f, c), total)


def _w_direct(f: EClassElement, c: Mat, a: Mat, k: Mat, B: int,
              nprime: int = 0) -> WValue:
    """Slow path valid for dual elements: evaluate f cell by cell."""
    ctx, n = f.ctx, f.n
    coords = [(i, l) for i in range(nprime, n) for l in range(i + 1, n)]
    wM = _block_weyl(n, nprime, ctx.p)
    total = CycValue.zero
    for u, vol in _u_cells(ctx, n, a, B, coords):
        s = sum(u.rows[i][i + 1] for i in range(n - 1))
        val = f.phase(c.inv() @ wM @ u @ a @ k)
        if val.is_zero():
            continue
        total = total + psi(-s, ctx.p) * vol * val
    return WValue(_coeff(f, c), total)


def W_fcg(f: EClassElement, c: Mat, a: Mat, k: Mat,
          nprime: int = 0,
          cfg: RSIntegralConfig | None = None) -> WValue:
    """The transform at g = a k (a diagonal, k in K), with a stabilization
    certificate over the unipotent box; nprime > 0 gives the parabolic
    variant W_P for the Levi blocks (nprime, n - nprime)."""
    cfg = cfg or RSIntegralConfig()
    prev = None
    for B in range(cfg.box_start, cfg.box_cap + 1):
        if f.dual:
            cur = _w_direct(f, c, a, k, B, nprime)
        else:
            cur = _assemble(f, c, _w_cell_data(f, c, a, B, nprime), k)
        if prev is not None and cur.phase == prev.phase:
            return cur
        prev = cur
    raise RuntimeError("transform box cap exceeded without stabilization")


# -- support laws -----------------------------------------------------------

def w_support_violated(ctx: DepthContext, a: Mat) -> bool:
    """True when some simple-root ratio a_i/a_{i+1} falls outside q^{-2},
    in which case the transform vanishes identically in k."""
    d = a.diagonal()
    return any(valuation(d[i] / d[i + 1], ctx.p) < -2 * ctx.m
               for i in range(len(d) - 1))


def pinned_outer_diagonal(f: EClassElement, c: Mat):
    """The unique diagonal a with W(f,c,ak) possibly nonzero, for diagonal
    c and the full Weyl element.  The support of f demands head * u * a in
    (lower unipotent) * K; bottom-up row elimination only touches columns
    to the right of each leading entry, so row i forces its leading entry
    head_ii * a_i to be a unit: v(a_i) = -v(head_ii) exactly.
    Returns (a, valuations)."""
    ctx, n = f.ctx, f.n
    head = _head(f, c, Mat.longest_weyl(n, ctx.p))
    e = [-valuation(head.rows[i][i], ctx.p) for i in range(n)]
    return Mat.diag([Fraction(ctx.p) ** x for x in e], ctx.p), tuple(e)


def _pinned_partial(f: EClassElement, c: Mat, nprime: int) -> dict:
    """Partially pinned outer valuations for the parabolic transform.

    head = D * P with D diagonal and P a permutation; in the bottom-up
    elimination of D P u a, the leading entry of row i sits in column
    sigma(i) and is untouchable whenever all lower rows lead strictly to
    the right, i.e. sigma(i) is a suffix-minimum.  Those columns j carry
    v(a_j) = -v(D_i) exactly.
    """
    ctx, n = f.ctx, f.n
    head = _head(f, c, _block_weyl(n, nprime, ctx.p))
    sigma, dvals = [], []
    for i in range(n):
        j = next(j for j in range(n) if head.rows[i][j] != 0)
        sigma.append(j)
        dvals.append(valuation(head.rows[i][j], ctx.p))
    pinned = {}
    suffix_min = n
    for i in range(n - 1, -1, -1):
        if sigma[i] < suffix_min:
            pinned[sigma[i]] = -dvals[i]
            suffix_min = sigma[i]
    return pinned


def D_P_exponent(n: int, nprime: int) -> int:
    """T^{1/2}-unit exponent of D_P = prod_{n' < i <= n} T^{i-(n+1)/2}."""
    return sum(2 * i - (n + 1) for i in range(nprime + 1, n + 1))


def D_P_value(ctx: DepthContext, n: int, nprime: int) -> Fraction:
    return Fraction(ctx.q) ** D_P_exponent(n, nprime)


def qp_bound_rhs(ctx: DepthContext, n: int, nprime: int) -> Fraction:
    """T^{n''(n''-1)/2} for the lower Levi block size n'' = n - nprime."""
    npp = n - nprime
    return Fraction(ctx.T) ** (npp * (npp - 1) // 2)


def abs_det(ctx: DepthContext, c: Mat) -> Fraction:
    """|det c| as an exact rational p-power (c diagonal)."""
    v = sum(valuation(x, ctx.p) for x in c.diagonal())
    return Fraction(ctx.p) ** (-v)


# -- the local integrals ----------------------------------------------------

def _k_transversal(ctx: DepthContext, n: int):
    """K/K(q): |W|^2 is right K(q)-invariant because the transform values
    are right chi-equivariant under K(q)."""
    return enumerate_cosets(SubgroupSpec("K", n, ctx.p), ctx.m)


def _to_int_mod(kmat: Mat, mod: int):
    return [[x.numerator * pow(x.denominator, -1, mod) % mod for x in row]
            for row in kmat.rows]


def _explicit_exponent_mod(z, ctx: DepthContext):
    """Numerator of the explicit phase exponent (a T-th root of unity) for
    an integral K-element known mod q^2, or None off the support: upper
    entries must vanish mod q, and the phase reads the superdiagonal of
    low(z)^{-1} z."""
    n = len(z)
    mod, pm = ctx.T, ctx.q
    for i in range(n):
        for j in range(i + 1, n):
            if z[i][j] % pm:
                return None
    # forward-substitute r = low(z)^{-1} z, needing only its superdiagonal
    total = 0
    for j in range(1, n):
        col = [0] * n
        for i in range(j):
            s = z[i][j] - sum(z[i][t] * col[t] for t in range(i))
            col[i] = s * pow(z[i][i], -1, mod) % mod
        total = (total + col[j - 1]) % mod
    return total


def _k_square_sum(f: EClassElement, cells, kreps) -> CycValue:
    ctx = f.ctx
    mod = ctx.T
    sign = -1 if f.tf.conjugate else 1
    zcells = [(weight, _to_int_mod(kmat, mod)) for weight, kmat in cells]
    inner = CycValue.zero
    n = f.n
    for k in kreps:
        zk = _to_int_mod(k, mod)
        val = CycValue.zero
        for weight, zkm in zcells:
            prod = [[sum(zkm[i][t] * zk[t][j] for t in range(n)) % mod
                     for j in range(n)] for i in range(n)]
            e = _explicit_exponent_mod(prod, ctx)
            if e is None:
                continue
            val = val + weight * CycValue.root_of_unity(mod,
                                                        (sign * e) % mod)
        inner = inner + val.abs_sq()
    return inner


def _any_nonzero_over_K(f: EClassElement, cells, kreps) -> bool:
    """Whether the transform is nonzero at some point of the K-transversal,
    via the integer mod-q^2 evaluation path."""
    ctx, n = f.ctx, f.n
    mod = ctx.T
    sign = -1 if f.tf.conjugate else 1
    zcells = [(weight, _to_int_mod(kmat, mod)) for weight, kmat in cells]
    for k in kreps:
        zk = _to_int_mod(k, mod)
        val = CycValue.zero
        for weight, zkm in zcells:
            prod = [[sum(zkm[i][t] * zk[t][j] for t in range(n)) % mod
                     for j in range(n)] for i in range(n)]
            e = _explicit_exponent_mod(prod, ctx)
            if e is None:
                continue
            val = val + weight * CycValue.root_of_unity(mod,
                                                        (sign * e) % mod)
        if not val.is_zero():
            return True
    return False


def _outer_diagonals(f: EClassElement, c: Mat, nprime: int,
                     cfg: RSIntegralConfig, B: int):
    """Diagonal a's feeding the Iwasawa outer sum, with |a_n| = 1.

    For nprime = 0 the support pins a uniquely.  For nprime > 0 the block
    valuations are windowed, with the simple-root support law inside the
    block and an empty-shell widening certificate for the rest.
    """
    ctx, n = f.ctx, f.n
    m = ctx.m
    if nprime == 0:
        a, e = pinned_outer_diagonal(f, c)
        return [a] if e[-1] == 0 else []
    det_v = sum(valuation(x, ctx.p) for x in c.diagonal())
    pinned = _pinned_partial(f, c, nprime)

    def tuples(R):
        # e_n = 0, the total is pinned by det-matching, leading columns at
        # suffix-minima of the head permutation are pinned exactly, and
        # the remaining coordinates are windowed
        out = []
        for vals in itertools.product(range(-R, R + 1), repeat=n - 2):
            e = list(vals) + [det_v - sum(vals), 0]
            if any(e[i] != v for i, v in pinned.items() if i < n):
                continue
            if any(e[i] - e[i + 1] < -2 * m for i in range(nprime, n - 1)):
                continue
            out.append(tuple(e))
        return out

    base = 2 * m * (n - 1) + abs(det_v)
    seen, live, empty_streak = set(), [], 0
    for R in range(base, base + cfg.shell_cap + 1):
        shell = [e for e in tuples(R) if e not in seen]
        seen.update(shell)
        hits = 0
        for e in shell:
            a = Mat.diag([Fraction(ctx.p) ** x for x in e], ctx.p)
            if _w_cell_data(f, c, a, B, nprime):
                live.append(a)
                hits += 1
        empty_streak = empty_streak + 1 if hits == 0 else 0
        if empty_streak >= 2:
            return live
    raise RuntimeError("outer shell cap exceeded without certificate")


def _q_single_box(f: EClassElement, c: Mat, nprime: int,
                  cfg: RSIntegralConfig, B: int) -> CycValue:
    ctx, n = f.ctx, f.n
    kreps = _k_transversal(ctx, n)
    vol_kq = haar_volume(SubgroupSpec("Kq", n, ctx.p, ctx.m))
    total = CycValue.zero
    for a in _outer_diagonals(f, c, nprime, cfg, B):
        cells = _w_cell_data(f, c, a, B, nprime)
        if not cells:
            continue
        inner = _k_square_sum(f, cells, kreps)
        total = total + inner * (vol_kq / modular_delta(a, "N"))
    e2 = 2 * modular_delta_half_exponent(c, "N")
    return total * (Fraction(ctx.p) ** e2 * f.tf.c1.squared())


def Q_P(f: EClassElement, c: Mat, nprime: int = 0,
        cfg: RSIntegralConfig | None = None) -> Fraction:
    """The (partial) local Rankin--Selberg integral against the primitive-
    row indicator, for the standard parabolic with Levi blocks
    (nprime, n - nprime); nprime = 0 is the full integral Q(phi, f, c).

    Exact nonnegative rational output with a stabilization certificate on
    the unipotent box.  c must be diagonal with first nprime entries 1.
    """
    cfg = cfg or RSIntegralConfig()
    assert not f.dual, "integrals are computed for the forward element"
    assert all(c.rows[i][i] == 1 for i in range(nprime))
    prev = None
    for B in range(cfg.box_start, cfg.box_cap + 1):
        cur = _q_single_box(f, c, nprime, cfg, B)
        if prev is not None and cur == prev:
            r = cur.as_rational()
            assert r is not None and r >= 0, "integral must be rational"
            return r
        prev = cur
    raise RuntimeError("integral box cap exceeded without stabilization")


def Q_phi_f_c(f: EClassElement, c: Mat,
              cfg: RSIntegralConfig | None = None) -> Fraction:
    return Q_P(f, c, 0, cfg)


# -- scans and tables -------------------------------------------------------

def support_scan_table(f: EClassElement, window, d_rs: Fraction = Fraction(1),
                       cfg: RSIntegralConfig | None = None) -> dict:
    """Grid scan of Q over diagonal c = diag(p^{-e_1}, ..., p^{-e_n}),
    e_i in `window`: tabulates |det c|, the value, and the bound ratio
    Q * D * |det c| / ||f||^2 (here D = T^0 = 1, the modulus of det on the
    support of f); checks nonvanishing implies D |det c| <= T^{n(n-1)/2}.
    """
    ctx, n = f.ctx, f.n
    rhs = Fraction(ctx.T) ** (n * (n - 1) // 2)
    rows, violations, ratios = [], [], []
    for es in itertools.product(window, repeat=n):
        c = Mat.diag([Fraction(ctx.p) ** (-e) for e in es], ctx.p)
        val = Q_P(f, c, 0, cfg)
        det_c = abs_det(ctx, c)
        ratio = val * d_rs * det_c / f.norm_sq
        rows.append({"c_exponents": es, "det_abs": det_c, "value": val,
                     "ratio": ratio})
        if val != 0:
            ratios.append(ratio)
            if d_rs * det_c > rhs:
                violations.append(rows[-1])
    return {"rows": rows, "violations": violations, "bound_rhs": rhs,
            "nonzero": len(ratios),
            "ratio_max": max(ratios) if ratios else None}


def QP_nonvanishing_check(f: EClassElement, nprime: int, det_window,
                          cfg: RSIntegralConfig | None = None) -> dict:
    """Scan Q_P over the lower Levi torus: c with first nprime entries 1
    and the rest p^{-j m}, j from `det_window` in T^{1/2}-units; checks
    zero outside D_P |det c| <= T^{n''(n''-1)/2} and counts the nonzero
    points inside."""
    ctx, n = f.ctx, f.n
    npp = n - nprime
    dp = D_P_value(ctx, n, nprime)
    rhs = qp_bound_rhs(ctx, n, nprime)
    rows, violations, nonzero_inside = [], [], 0
    seen = set()
    for js in itertools.product(det_window, repeat=npp):
        key = tuple(sorted(js))
        if key in seen:
            continue
        seen.add(key)
        c = Mat.diag([Fraction(1)] * nprime
                     + [Fraction(ctx.p) ** (-j * ctx.m) for j in js],
                     ctx.p)
        val = Q_P(f, c, nprime, cfg)
        det_c = abs_det(ctx, c)
        inside = dp * det_c <= rhs
        rows.append({"block_exponents": js, "det_abs": det_c,
                     "bound_lhs": dp * det_c, "value": val})
        if val != 0 and not inside:
            violations.append(rows[-1])
        if val != 0 and inside:
            nonzero_inside += 1
    return {"rows": rows, "violations": violations,
            "nonzero_inside": nonzero_inside, "bound_rhs": rhs,
            "D_P": dp}


def denominator_scan(f: EClassElement, window: int | None = None,
                     d2: int = 1) -> dict:
    """Empirical denominator control.  Over diagonal c = diag(p^{-e_i})
    with sizes e_i scanned up to `window` (entries below p^{-m} are not
    probed beyond rank 2: tiny |c_i| cannot attain the maximum), keep
    those whose pinned outer diagonal is admissible (|a_n| = 1 and
    simple-root coordinates within T^{d2}) and test the transform on a
    K-residue sample; report the largest entry size max_i v_p(1/c_i)
    (in T-units) seen nonzero.  Points whose unipotent cell budget would
    exceed the cap are recorded as skipped, not silently dropped.
    """
    ctx, n = f.ctx, f.n
    m = ctx.m
    p = ctx.p
    window = window if window is not None else 6 * m
    kreps = _k_transversal(ctx, n)
    lo = -window if n <= 2 else -m
    B = RSIntegralConfig().box_start + 1
    coords = [(k, l) for k in range(n) for l in range(k + 1, n)]
    best = None
    table, skipped = [], []
    for es in itertools.product(range(lo, window + 1), repeat=n):
        c = Mat.diag([Fraction(p) ** (-e) for e in es], p)
        a, ev = pinned_outer_diagonal(f, c)
        if ev[-1] != 0:
            continue
        if any(ev[i + 1] - ev[i] > 2 * m * d2 for i in range(n - 1)):
            continue  # a inadmissible: simple-root size beyond T^{d2}
        L = _cell_levels(ctx, a, B, coords)
        if p ** sum(max(B + lv, 0) for lv in L.values()) > 20000:
            skipped.append(es)
            continue
        cells = _w_cell_data(f, c, a, B)
        hit = bool(cells) and _any_nonzero_over_K(f, cells, kreps)
        size = max(es)
        table.append({"c_exponents": es, "nonzero": hit})
        if hit and (best is None or size > best):
            best = size
    d_emp = Fraction(best, 2 * m) if best is not None else None
    return {"table": table, "max_e": best, "empirical_d": d_emp,
            "d2": d2, "skipped": skipped}
