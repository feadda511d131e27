"""Left-invariant sub-Riemannian structures given by structure constants.

A structure is a Lie algebra with a chosen splitting into a horizontal
subspace (the first ``n`` basis elements, carrying the metric ``gram_h``)
and a vertical complement (the remaining ``nu`` elements, carrying
``gram_v``).  Everything downstream works in an adapted orthonormal frame,
where both Gram matrices are the identity; :func:`adapted_orthonormal_frame`
produces that frame.  All tensors then have constant components and the
whole calculus is finite-dimensional multilinear algebra.

Index convention, used everywhere in this package: basis indices
``0 .. n-1`` are horizontal, ``n .. n+nu-1`` are vertical, and
``c[i][j][k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadParam,
    DimensionMismatch,
    NotPositiveDefinite,
    UnknownExample,
    ValidationError,
)

RANK_TOL = 1e-10          # pivot tolerance for growth-flag rank decisions
JACOBI_TOL = 1e-10        # scaled by (1 + max|c|)^2
GRAM_EIG_TOL = 1e-12      # relative to trace
REALIZATION_TOL = 1e-9


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MatrixRealization:
    """Matrices realizing the basis: commutators reproduce the brackets."""

    dim: int
    field: str                    # "real" | "complex"
    generators: np.ndarray        # (n+nu, dim, dim)

    def __post_init__(self):
        dtype = complex if self.field == "complex" else float
        object.__setattr__(self, "generators", _frozen(self.generators, dtype))

    @property
    def compact(self) -> bool:
        """True when every generator is anti-Hermitian, so exponentials are unitary."""
        g = self.generators
        return bool(np.abs(g + np.conj(np.transpose(g, (0, 2, 1)))).max() < 1e-12)


@dataclass(frozen=True)
class Su2Presentation:
    """Expansion of the basis over standard su(2) generators, for the
    representation-theoretic spectrum oracle.

    ``coeffs[i]`` holds the coefficients of basis vector ``e_i`` over the
    cyclic basis (A, B, C) of each factor, concatenated: 3 columns per factor.
    """

    factors: int                  # 1 for su(2), 2 for su(2) x su(2)
    coeffs: np.ndarray            # (n+nu, 3*factors)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))


@dataclass(frozen=True)
class LieSRStructure:
    name: str
    n: int
    nu: int
    c: np.ndarray                 # (d, d, d) structure constants
    gram_h: np.ndarray            # (n, n)
    gram_v: np.ndarray            # (nu, nu)
    realization: MatrixRealization | None = None
    su2: Su2Presentation | None = None
    basis_change: np.ndarray | None = None   # columns: current basis in original coordinates

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen(self.c))
        object.__setattr__(self, "gram_h", _frozen(self.gram_h))
        object.__setattr__(self, "gram_v", _frozen(self.gram_v))
        if self.basis_change is not None:
            object.__setattr__(self, "basis_change", _frozen(self.basis_change))
        d = self.n + self.nu
        if self.c.shape != (d, d, d):
            raise DimensionMismatch(
                f"structure constants have shape {self.c.shape}, expected {(d, d, d)}")
        if self.gram_h.shape != (self.n, self.n):
            raise DimensionMismatch(
                f"gram_h has shape {self.gram_h.shape}, expected {(self.n, self.n)}")
        if self.gram_v.shape != (self.nu, self.nu):
            raise DimensionMismatch(
                f"gram_v has shape {self.gram_v.shape}, expected {(self.nu, self.nu)}")
        if self.realization is not None and self.realization.generators.shape[0] != d:
            raise DimensionMismatch("matrix realization must provide one generator per basis element")

    @property
    def dim(self) -> int:
        return self.n + self.nu

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """[x, y] for coefficient vectors in the current basis."""
        return np.einsum('i,j,ijk->k', x, y, self.c)

    def is_orthonormal(self, tol: float = 1e-12) -> bool:
        return (np.abs(self.gram_h - np.eye(self.n)).max(initial=0.0) < tol
                and np.abs(self.gram_v - np.eye(self.nu)).max(initial=0.0) < tol)


@dataclass(frozen=True)
class GrowthFlag:
    dims: tuple[int, ...]         # dim h^1 <= dim h^2 <= ... until stabilization
    step: int | None              # smallest r with h^r = g, None if never
    bracket_generating: bool


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    growth: GrowthFlag
    metric_preserving: bool       # horizontal metric invariant under vertical flows
    vertical_integrable: bool

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def require(self):
        for c in self.checks:
            if not c.passed:
                raise ValidationError(f"check '{c.name}' failed: {c.detail}")


def _column_rank(cols: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Pivot columns of `cols` by Gaussian column reduction.

    Tolerance is absolute, scaled by the largest column norm, matching the
    assumption that constants are O(1) after orthonormalization.
    """
    work = np.array(cols, dtype=float)
    if work.size == 0:
        return work[:, :0]
    scale = max(np.linalg.norm(work, axis=0).max(), 1.0)
    basis = []
    for j in range(work.shape[1]):
        v = work[:, j].copy()
        for b in basis:
            v -= np.dot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol * scale:
            basis.append(v / nrm)
    if not basis:
        return work[:, :0]
    return np.stack(basis, axis=1)


def growth_flag(s: LieSRStructure) -> GrowthFlag:
    """Flag of subspaces h^{k+1} = h^k + [h, h^k], at the linear-algebra level."""
    d = s.dim
    h1 = np.eye(d)[:, :s.n]
    current = _column_rank(h1)
    dims = [current.shape[1]]
    while True:
        new_cols = [current]
        for i in range(s.n):
            ei = np.zeros(d)
            ei[i] = 1.0
            for v in current.T:
                new_cols.append(s.bracket(ei, v)[:, None])
        nxt = _column_rank(np.concatenate(new_cols, axis=1))
        if nxt.shape[1] == current.shape[1]:
            break
        current = nxt
        dims.append(current.shape[1])
    bg = dims[-1] == d
    step = len(dims) if bg else None
    return GrowthFlag(dims=tuple(dims), step=step, bracket_generating=bg)


def validate_structure(s: LieSRStructure) -> ValidationReport:
    """Run every structural check and compute the growth flag."""
    checks = []
    c = s.c
    cmax = np.abs(c).max() if c.size else 0.0

    anti = np.abs(c + np.transpose(c, (1, 0, 2))).max() if c.size else 0.0
    checks.append(CheckResult("antisymmetry", anti < 1e-12 * (1 + cmax),
                              f"max |c_ijk + c_jik| = {anti:.3e}"))

    jac = np.einsum('ijm,mkl->ijkl', c, c)
    jac = jac + np.transpose(jac, (1, 2, 0, 3)) + np.transpose(jac, (2, 0, 1, 3))
    jmax = np.abs(jac).max() if jac.size else 0.0
    jtol = JACOBI_TOL * (1 + cmax) ** 2
    checks.append(CheckResult("jacobi", jmax < jtol, f"max residual {jmax:.3e} (tol {jtol:.1e})"))

    for gname, g in (("gram_h", s.gram_h), ("gram_v", s.gram_v)):
        sym = np.abs(g - g.T).max() if g.size else 0.0
        ev_min = float('nan')
        if g.size:
            ev_min = np.linalg.eigvalsh(0.5 * (g + g.T)).min()
            pd = ev_min > GRAM_EIG_TOL * max(np.trace(g), 1e-300)
        else:
            pd = True
        checks.append(CheckResult(f"{gname}_spd", sym < 1e-12 and pd,
                                  f"symmetry defect {sym:.1e}, min eigenvalue {ev_min:.3e}"))

    if s.realization is not None:
        gens = s.realization.generators
        comm = np.einsum('iab,jbc->ijac', gens, gens)
        comm = comm - np.transpose(comm, (1, 0, 2, 3))
        target = np.einsum('ijk,kab->ijab', c, gens)
        err = np.abs(comm - target).max()
        checks.append(CheckResult("realization", err < REALIZATION_TOL,
                                  f"max commutator defect {err:.3e}"))

    flag = growth_flag(s)

    # (L_V pr_H* h)(e_i, e_j) = -(c[v][i][j] + c[v][j][i]) on horizontal pairs,
    # valid in an orthonormal frame; for general Grams transform first.
    mp = integrable = False
    try:
        son = s if s.is_orthonormal() else adapted_orthonormal_frame(s)
    except NotPositiveDefinite:
        pass
    else:
        chh = son.c[s.n:, :s.n, :s.n]
        mp = bool(np.abs(chh + np.transpose(chh, (0, 2, 1))).max() < 1e-10) if s.nu else True
        integrable = bool(np.abs(son.c[s.n:, s.n:, :s.n]).max() < 1e-12) if s.nu else True

    return ValidationReport(checks=tuple(checks), growth=flag,
                            metric_preserving=mp, vertical_integrable=integrable)


def _inv_sqrt(g: np.ndarray, what: str) -> np.ndarray:
    if g.size == 0:
        return g.reshape(0, 0)
    w, u = np.linalg.eigh(0.5 * (g + g.T))
    if w.min() <= GRAM_EIG_TOL * max(np.trace(g), 1e-300):
        raise NotPositiveDefinite(f"{what} is not positive definite (min eigenvalue {w.min():.3e})")
    return (u * (1.0 / np.sqrt(w))) @ u.T


def adapted_orthonormal_frame(s: LieSRStructure) -> LieSRStructure:
    """Change basis so both Gram matrices become the identity.

    Uses the symmetric inverse square root per block, which makes the
    operation idempotent and keeps already-orthonormal structures fixed.
    The accumulated change of basis (columns = new basis in the original
    coordinates) is recorded on the result.
    """
    if s.is_orthonormal():
        if s.basis_change is None:
            return replace(s, basis_change=np.eye(s.dim))
        return s
    p_h = _inv_sqrt(s.gram_h, "gram_h")
    p_v = _inv_sqrt(s.gram_v, "gram_v")
    d = s.dim
    p = np.zeros((d, d))
    p[:s.n, :s.n] = p_h
    p[s.n:, s.n:] = p_v
    p_inv = np.linalg.inv(p)
    # new basis f_a = sum_i p[i][a] e_i, and e_k = sum_c p_inv[c][k] f_c
    c_new = np.einsum('ia,jb,ijk,ck->abc', p, p, s.c, p_inv, optimize=True)
    realization = s.realization
    if realization is not None:
        gens = np.einsum('ia,ibc->abc', p, realization.generators)
        realization = MatrixRealization(realization.dim, realization.field, gens)
    su2 = s.su2
    if su2 is not None:
        su2 = Su2Presentation(su2.factors, p.T @ su2.coeffs)
    chain = p if s.basis_change is None else s.basis_change @ p
    return LieSRStructure(name=s.name, n=s.n, nu=s.nu, c=c_new,
                          gram_h=np.eye(s.n), gram_v=np.eye(s.nu),
                          realization=realization, su2=su2, basis_change=chain)


def rescale_vertical_metric(s: LieSRStructure, factor: float) -> LieSRStructure:
    """Replace gram_v by factor * gram_v (same basis, same constants)."""
    if factor <= 0:
        raise BadParam("vertical rescaling factor must be positive")
    return replace(s, gram_v=factor * np.asarray(s.gram_v))


# ---------------------------------------------------------------------------
# example catalog
# ---------------------------------------------------------------------------

# cyclic epsilon tensor on three indices
_EPS = np.zeros((3, 3, 3))
for _a, _b, _c, _s in ((0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1),
                       (1, 0, 2, -1), (2, 1, 0, -1), (0, 2, 1, -1)):
    _EPS[_a, _b, _c] = _s

# su(2) spin-1/2 generators with [A,B] = C cyclic: A = -(i/2) sigma_1, ...
_SIGMA = np.array([[[0, 1], [1, 0]],
                   [[0, -1j], [1j, 0]],
                   [[1, 0], [0, -1]]], dtype=complex)
_SU2_GEN = -0.5j * _SIGMA


def _skew_set(c, i, j, k, val):
    c[i, j, k] += val
    c[j, i, k] -= val


def _heisenberg() -> LieSRStructure:
    c = np.zeros((3, 3, 3))
    _skew_set(c, 0, 1, 2, 1.0)
    e = np.zeros((3, 3, 3))
    e[0, 0, 1] = 1.0   # x-slot
    e[1, 1, 2] = 1.0   # y-slot
    e[2, 0, 2] = 1.0   # z-slot
    return LieSRStructure("heisenberg", 2, 1, c, np.eye(2), np.eye(1),
                          realization=MatrixRealization(3, "real", e))


def _free_step2(n: int) -> LieSRStructure:
    if n < 2:
        raise BadParam("free-step2 requires n >= 2")
    nu = n * (n - 1) // 2
    d = n + nu
    c = np.zeros((d, d, d))
    s = 0
    for i in range(n):
        for j in range(i + 1, n):
            _skew_set(c, i, j, n + s, 1.0)
            s += 1
    # vertical metric: wedge products orthonormal, then divided by (n-1) so the
    # curvature bound constant is exactly one
    return LieSRStructure(f"free-step2({n})", n, nu, c, np.eye(n), np.eye(nu) / (n - 1))


def _su2_hopf(rho: float) -> LieSRStructure:
    # orthonormal basis X_a of su(2) for <.,.> = -(1/(4 rho)) Killing:
    # [X_a, X_b] = sqrt(2 rho) eps_abc X_c.  Horizontal: X_1, X_2; vertical: X_3.
    k = np.sqrt(2.0 * rho)
    c = k * _EPS
    gens = k * _SU2_GEN
    su2 = Su2Presentation(1, k * np.eye(3))
    # vertical metric normalized so the curvature bound constant is one:
    # with ||X_3|| = 1 it would be sqrt(2 rho), so scale the Gram by 1/(2 rho)
    return LieSRStructure("su2-hopf", 2, 1, c, np.eye(2), np.eye(1) / (2.0 * rho),
                          realization=MatrixRealization(2, "complex", gens), su2=su2)


def _su2_double(rho: float, which: int) -> LieSRStructure:
    """Doubled su(2) with diagonal-type horizontal space span{(X, 2X)}.

    which=1: vertical = second-factor copy {(0, X)}, Gram = <.,.>/(16 rho);
    which=2: vertical = first-factor copy {(X, 0)}, Gram = <.,.>/(4 rho).
    Basis uses <.,.>-orthonormal X_a, so gram_h is the identity.
    """
    k = np.sqrt(2.0 * rho)
    d = 6
    c = np.zeros((d, d, d))
    for a in range(3):
        for b in range(3):
            for cc in range(3):
                e = _EPS[a, b, cc]
                if e == 0.0:
                    continue
                if which == 1:
                    # [e_a,e_b] = k eps (X,4X) = k eps e_c + 2k eps (0,X_c)
                    c[a, b, cc] += k * e
                    c[a, b, 3 + cc] += 2 * k * e
                    # [e_a, (0,X_b)] = (0, 2k eps X_c)
                    c[a, 3 + b, 3 + cc] += 2 * k * e
                    c[3 + b, a, 3 + cc] -= 2 * k * e
                    # [(0,X_a), (0,X_b)] = (0, k eps X_c)
                    c[3 + a, 3 + b, 3 + cc] += k * e
                else:
                    # [e_a,e_b] = k eps (X,4X) = 2k eps e_c - k eps (X_c,0)
                    c[a, b, cc] += 2 * k * e
                    c[a, b, 3 + cc] -= k * e
                    # [e_a, (X_b,0)] = (k eps X_c, 0)
                    c[a, 3 + b, 3 + cc] += k * e
                    c[3 + b, a, 3 + cc] -= k * e
                    c[3 + a, 3 + b, 3 + cc] += k * e
    gram_v = np.eye(3) / (16.0 * rho if which == 1 else 4.0 * rho)
    gens = np.zeros((6, 4, 4), dtype=complex)
    co = np.zeros((6, 6))
    for a in range(3):
        left = k * _SU2_GEN[a]
        gens[a][:2, :2] = left
        gens[a][2:, 2:] = 2 * left
        co[a, a] = k
        co[a, 3 + a] = 2 * k
        if which == 1:
            gens[3 + a][2:, 2:] = left
            co[3 + a, 3 + a] = k
        else:
            gens[3 + a][:2, :2] = left
            co[3 + a, a] = k
    return LieSRStructure(f"su2-double-v{which}", 3, 3, c, np.eye(3), gram_v,
                          realization=MatrixRealization(4, "complex", gens),
                          su2=Su2Presentation(2, co))


def _sl2c() -> LieSRStructure:
    """Complexified su(2) as a real algebra; horizontal iA, iB, iC, C and
    vertical sqrt(2)A, sqrt(2)B form an orthonormal basis.

    The vertical complement is not integrable, but its co-curvature satisfies
    the vanishing trace condition required for the curvature-dimension
    machinery.
    """
    d = 6
    c = np.zeros((d, d, d))
    s2 = np.sqrt(2.0)
    _skew_set(c, 0, 1, 3, -1.0)      # [iA,iB] = -C
    _skew_set(c, 0, 2, 5, 1 / s2)    # [iA,iC] = B
    _skew_set(c, 1, 2, 4, -1 / s2)   # [iB,iC] = -A
    _skew_set(c, 0, 3, 1, -1.0)      # [iA,C] = -iB
    _skew_set(c, 1, 3, 0, 1.0)       # [iB,C] = iA
    _skew_set(c, 0, 5, 2, s2)        # [iA,sqrt2 B] = sqrt2 iC
    _skew_set(c, 1, 4, 2, -s2)       # [iB,sqrt2 A] = -sqrt2 iC
    _skew_set(c, 2, 4, 1, s2)        # [iC,sqrt2 A] = sqrt2 iB
    _skew_set(c, 2, 5, 0, -s2)       # [iC,sqrt2 B] = -sqrt2 iA
    _skew_set(c, 3, 4, 5, 1.0)       # [C,sqrt2 A] = sqrt2 B
    _skew_set(c, 3, 5, 4, -1.0)      # [C,sqrt2 B] = -sqrt2 A
    _skew_set(c, 4, 5, 3, 2.0)       # [sqrt2 A,sqrt2 B] = 2C
    A, B, C = _SU2_GEN
    gens = np.stack([1j * A, 1j * B, 1j * C, C, s2 * A, s2 * B])
    return LieSRStructure("sl2c", 4, 2, c, np.eye(4), np.eye(2),
                          realization=MatrixRealization(2, "complex", gens))


EXAMPLE_NAMES = ("heisenberg", "free-step2", "su2-double-v1", "su2-double-v2",
                 "su2-hopf", "sl2c")


def build_example(name: str, params: dict | None = None) -> LieSRStructure:
    """Construct a catalog structure, vertical metric already normalized.

    Parameters: ``free-step2`` takes ``n >= 2``; the su(2)-based examples
    take ``rho > 0`` (default 1).
    """
    params = dict(params or {})

    def rho_param():
        rho = float(params.pop("rho", 1.0))
        if rho <= 0:
            raise BadParam("rho must be positive")
        return rho

    if name == "heisenberg":
        s = _heisenberg()
    elif name == "free-step2":
        n = params.pop("n", None)
        if n is None:
            raise BadParam("free-step2 requires parameter n")
        n = int(n)
        if n < 2:
            raise BadParam("free-step2 requires n >= 2")
        s = _free_step2(n)
    elif name == "su2-hopf":
        s = _su2_hopf(rho_param())
    elif name == "su2-double-v1":
        s = _su2_double(rho_param(), 1)
    elif name == "su2-double-v2":
        s = _su2_double(rho_param(), 2)
    elif name == "sl2c":
        s = _sl2c()
    else:
        raise UnknownExample(f"unknown example '{name}' (choose from {EXAMPLE_NAMES})")
    if params:
        raise BadParam(f"unused parameters for {name}: {sorted(params)}")
    return s
