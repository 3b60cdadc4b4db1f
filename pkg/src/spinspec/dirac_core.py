"""Per-Fourier-mode Dirac eigenproblems with local and APS boundary conditions.

Separation of variables on dr^2 + f^2 dtheta^2 reduces the Dirac operator at
wave number k (half-integer for the antiperiodic spin structure, integer for
the periodic one) to the radial system

    (D v)_1 = i [ v2' + (f'/2f + k/f) v2 ]
    (D v)_2 = i [ v1' + (f'/2f - k/f) v1 ]

acting on two-component radial spinors, Hermitian for the inner product
int conj(v).w f dr.  The discretization is a staggered mimetic scheme:
component 1 lives on cell centers r_j = r_min + (j-1/2)h, component 2 on
the dual vertices x_i = r_min + i h (so boundary values of component 2 are
literal unknowns and the cap pole never carries a node).  Derivatives are
2-point differences across a cell, couplings are symmetrized per staggered
link, which makes the weighted matrix Hermitian identically, not up to
truncation error; boundary conditions enter as local constraints that are
eliminated with a mass-orthonormal basis, preserving exact Hermiticity.
Single-grid centered differencing is avoided deliberately: it carries a
spurious oscillatory branch whose eigenvalues pollute the low spectrum.

Modes with k < 0 are solved through the unitary component swap
(v1, v2) -> (v2, v1), which maps mode k to mode -k and swaps the two local
boundary conditions while fixing each APS condition.  At a cap this keeps
the vertex component the faster-vanishing one at the pole, where the
regular closure (vertex value 0) is then exact for every mode.

APS conventions: the admissible boundary values for aps- have no component
on eigenvectors of e0 . D_boundary with eigenvalue >= 0 (kernel included in
the constrained set); aps+ is the mirror image and is exposed as an
experimental condition.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import eigvals_banded, null_space, solve_banded

from .geometry import ConfigError, WarpedSurface, boundary_data
from .identities import SpinorField
from .spin_algebra import CliffordFrame, make_frame

Array = np.ndarray

BC_VARIANTS = ("local+", "local-", "aps-", "aps+")

_HERM_TOL = 1e-12
_MAX_BANDWIDTH = 8


class NumericalError(RuntimeError):
    """Eigensolver or optimizer failure (never silent truncation)."""


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """One of the four elliptic boundary conditions."""

    variant: str

    def __post_init__(self):
        if self.variant not in BC_VARIANTS:
            raise ConfigError(f"unknown boundary condition {self.variant!r}; "
                              f"expected one of {BC_VARIANTS}")

    @property
    def is_local(self) -> bool:
        return self.variant.startswith("local")

    @property
    def is_aps(self) -> bool:
        return self.variant.startswith("aps")

    @property
    def experimental(self) -> bool:
        # the elliptic estimate is only proved for local+/- and aps-
        return self.variant == "aps+"

    def swapped(self) -> "BoundaryConditionSpec":
        """Image under the component swap used for k -> -k."""
        table = {"local+": "local-", "local-": "local+",
                 "aps-": "aps-", "aps+": "aps+"}
        return BoundaryConditionSpec(table[self.variant])


@dataclass(frozen=True)
class FourierMode:
    k: float

    def validate(self, surface: WarpedSurface) -> None:
        two_k = 2 * self.k
        if abs(two_k - round(two_k)) > 1e-12:
            raise ConfigError(f"mode {self.k} is not half-integral")
        odd = int(round(two_k)) % 2 != 0
        if surface.spin_structure == "antiperiodic" and not odd:
            raise ConfigError(f"mode {self.k} incompatible with the "
                              "antiperiodic spin structure")
        if surface.spin_structure == "periodic" and odd:
            raise ConfigError(f"mode {self.k} incompatible with the "
                              "periodic spin structure")


def modes_for(surface: WarpedSurface, k_max: float) -> list[float]:
    """All admissible wave numbers with |k| <= k_max."""
    if surface.spin_structure == "antiperiodic":
        pos = np.arange(0.5, k_max + 1e-9, 1.0)
        if len(pos) == 0:
            raise ConfigError("k_max below the lowest antiperiodic mode 1/2")
        return sorted(np.concatenate([-pos, pos]).tolist())
    n = int(np.floor(k_max + 1e-9))
    return sorted(np.arange(-n, n + 1).astype(float).tolist())


def boundary_dirac_matrix(surface: WarpedSurface, boundary_id: str, k: float,
                          frame: CliffordFrame | None = None
                          ) -> tuple[Array, Array]:
    """2x2 matrices of D^boundary and e0 . D^boundary at one mode.

    On the circle of radius f_b the intrinsic boundary Dirac operator of the
    mode is (ik/f_b) e^2 . ; Clifford action of the outward normal gives the
    self-adjoint e0 . D^boundary, whose eigenvalues are +-k/f_b.
    """
    FourierMode(k).validate(surface)
    fr = frame or make_frame()
    bd = boundary_data(surface, boundary_id)
    d_bnd = (1j * k / bd.radius) * fr.g2
    e0 = fr.covector((bd.outward_sign, 0.0))
    return d_bnd, e0 @ d_bnd


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _closures(surface: WarpedSurface, k: float,
              bc: BoundaryConditionSpec | None) -> dict:
    """Per-end closure type for the native solve (k >= 0 only).

    'pole'  : cap; the vertex component vanishes there exactly
    'qdir'  : vertex component fixed to zero (also the no-BC realization)
    'local' : chirality constraint q_b = gamma * (extrapolated p), gamma = +-i
    'pdir'  : extrapolated center component vanishes, vertex value free
    'both'  : qdir and pdir together (APS at a mode where e0.D_bnd = 0)
    """
    out = {}
    if surface.cap:
        out["inner"] = ("pole", None)
    elif bc is None:
        out["inner"] = ("qdir", None)
    elif bc.variant == "local+":
        out["inner"] = ("local", 1j)
    elif bc.variant == "local-":
        out["inner"] = ("local", -1j)
    elif bc.variant == "aps-":
        out["inner"] = ("both", None) if k == 0 else ("qdir", None)
    else:  # aps+
        out["inner"] = ("both", None) if k == 0 else ("pdir", None)

    if bc is None:
        out["outer"] = ("qdir", None)
    elif bc.variant == "local+":
        out["outer"] = ("local", -1j)
    elif bc.variant == "local-":
        out["outer"] = ("local", 1j)
    elif bc.variant == "aps-":
        out["outer"] = ("both", None) if k == 0 else ("pdir", None)
    else:
        out["outer"] = ("both", None) if k == 0 else ("qdir", None)
    return out


@dataclass
class ModeOperator:
    """Discrete radial Dirac operator of one mode, before or after a BC.

    `matrix` is the reduced operator, exactly Hermitian after the boundary
    condition is applied; eigenvectors are reported back on the staggered
    grids through `solve`.
    """

    surface: WarpedSurface
    k: float
    n_grid: int
    bc: BoundaryConditionSpec | None
    frame: CliffordFrame = dc_field(default_factory=make_frame)

    def __post_init__(self):
        if self.n_grid < 16:
            raise ConfigError("N too small: need at least 16 radial cells")
        FourierMode(self.k).validate(self.surface)
        if self.k < 0:
            raise ConfigError("ModeOperator assembles native modes k >= 0; "
                              "negative modes are solved by component swap")
        self._build()

    # -- grid data -----------------------------------------------------

    @property
    def h(self) -> float:
        return self.surface.length / self.n_grid

    @property
    def r_centers(self) -> Array:
        return self.surface.r_min + (np.arange(self.n_grid) + 0.5) * self.h

    @property
    def r_vertices(self) -> Array:
        return self.surface.r_min + np.arange(self.n_grid + 1) * self.h

    # -- assembly --------------------------------------------------------

    def _build(self) -> None:
        surf, k, N, h = self.surface, self.k, self.n_grid, self.h
        rc, xv = self.r_centers, self.r_vertices
        fc, fpc = surf.f(rc), surf.fp(rc)
        fv = surf.f(xv)
        sigma = fpc / (2 * fc) + k / fc          # at centers
        fsig = fpc / 2 + k                       # f * sigma at centers

        clo = _closures(surf, k, self.bc)
        q_active = {i: True for i in range(1, N)}
        q_active[0] = clo["inner"][0] in ("local", "pdir")
        q_active[N] = clo["outer"][0] in ("local", "pdir")

        dofs: list[tuple[str, int]] = []
        if q_active[0]:
            dofs.append(("q", 0))
        for j in range(N):
            dofs.append(("p", j))
            if 0 < j + 1 < N:
                dofs.append(("q", j + 1))
        if q_active[N]:
            dofs.append(("q", N))
        index = {d: a for a, d in enumerate(dofs)}
        n = len(dofs)

        D = np.zeros((n, n), dtype=complex)
        m = np.empty(n)

        for j in range(N):
            a = index[("p", j)]
            m[a] = h * fc[j]
            for iv, sgn in ((j, -1.0), (j + 1, +1.0)):
                if q_active.get(iv, False):
                    D[a, index[("q", iv)]] = 1j * (sgn / h + sigma[j] / 2)
        for i in range(1, N):
            a = index[("q", i)]
            m[a] = h * fv[i]
            D[a, index[("p", i - 1)]] = 1j * (-fc[i - 1] / h - fsig[i - 1] / 2) / fv[i]
            D[a, index[("p", i)]] = 1j * (fc[i] / h - fsig[i] / 2) / fv[i]

        # Boundary closures: the vertex row is the equation i(p' + tau p_B) at
        # the boundary; second-order derivative weights (2,-3,1)/h force the
        # companion trace extrapolation E = 2 p_1 - 1.5 p_2 + 0.5 p_3 (offsets
        # h/2, 3h/2, 5h/2) -- the unique combination that keeps the reduced
        # operator exactly Hermitian with the half-cell mass G h / 2.
        ex = (2.0, -1.5, 0.5)
        constraints: list[dict] = []
        if q_active[N]:
            a = index[("q", N)]
            tau_r = float(surf.fp(surf.r_max) / (2 * surf.f(surf.r_max))
                          - k / surf.f(surf.r_max))
            m[a] = 0.5 * h * fc[N - 1] * (1 + h * sigma[N - 1] / 2)
            for j, (dw, ew) in enumerate(zip((2.0, -3.0, 1.0), ex)):
                D[a, index[("p", N - 1 - j)]] = 1j * (dw / h + tau_r * ew)
        kind, gamma = clo["outer"]
        if kind == "local":
            constraints.append({("q", N): 1.0,
                                ("p", N - 1): -gamma * ex[0],
                                ("p", N - 2): -gamma * ex[1],
                                ("p", N - 3): -gamma * ex[2]})
        elif kind in ("pdir", "both"):
            constraints.append({("p", N - 1): ex[0], ("p", N - 2): ex[1],
                                ("p", N - 3): ex[2]})

        if q_active[0]:
            a = index[("q", 0)]
            tau_l = float(surf.fp(surf.r_min) / (2 * surf.f(surf.r_min))
                          - k / surf.f(surf.r_min))
            m[a] = 0.5 * h * fc[0] * (1 - h * sigma[0] / 2)
            for j, (dw, ew) in enumerate(zip((-2.0, 3.0, -1.0), ex)):
                D[a, index[("p", j)]] = 1j * (dw / h + tau_l * ew)
        kind, gamma = clo["inner"]
        if kind == "local":
            constraints.append({("q", 0): 1.0, ("p", 0): -gamma * ex[0],
                                ("p", 1): -gamma * ex[1],
                                ("p", 2): -gamma * ex[2]})
        elif kind in ("pdir", "both"):
            constraints.append({("p", 0): ex[0], ("p", 1): ex[1],
                                ("p", 2): ex[2]})

        if np.any(m <= 0):
            raise NumericalError("nonpositive quadrature weight in assembly")

        self._dofs, self._index, self._D, self._m = dofs, index, D, m
        self._constraints = constraints
        self._closure = clo
        self._q_active = q_active
        self._reduce()

    def _reduce(self) -> None:
        """Mass-orthonormal elimination of the boundary constraints."""
        D, m, index = self._D, self._m, self._index
        n = len(m)
        msq = np.sqrt(m)
        H = D * (msq[:, None] / msq[None, :])

        in_support = np.zeros(n, dtype=bool)
        blocks = []
        for c in self._constraints:
            sup = np.array([index[d] for d in c], dtype=int)
            coef = np.array([c[d] for d in c], dtype=complex) / msq[sup]
            z = null_space(coef[None, :])
            kinds = {self._dofs[a][0] for a in sup}
            blocks.append((sup, z, "mixed" if len(kinds) > 1 else kinds.pop()))
            in_support[sup] = True

        keep = np.flatnonzero(~in_support)
        cols: list[tuple[float, str, object]] = [(float(a), "unit", a) for a in keep]
        for bi, (sup, z, _) in enumerate(blocks):
            base = float(np.min(sup))
            for ci in range(z.shape[1]):
                cols.append((base + 0.1 * (ci + 1), "block", (bi, ci)))
        cols.sort(key=lambda t: t[0])
        n_red = len(cols)
        col_kind = [self._dofs[payload][0] if kind == "unit"
                    else blocks[payload[0]][2]
                    for _, kind, payload in cols]

        A = np.empty((n_red, n_red), dtype=complex)
        unit_pos = [a for a, (_, kind, _) in enumerate(cols) if kind == "unit"]
        unit_idx = np.array([cols[a][2] for a in unit_pos], dtype=int)
        A[np.ix_(unit_pos, unit_pos)] = H[np.ix_(unit_idx, unit_idx)]
        for a, (_, kind, payload) in enumerate(cols):
            if kind != "block":
                continue
            bi, ci = payload
            sup, z, _ = blocks[bi]
            zc = z[:, ci]
            A[unit_pos, a] = H[np.ix_(unit_idx, sup)] @ zc
            A[a, unit_pos] = np.conj(zc) @ H[np.ix_(sup, unit_idx)]
            for b, (_, kind2, payload2) in enumerate(cols):
                if kind2 != "block":
                    continue
                bj, cj = payload2
                sup2, z2, _ = blocks[bj]
                A[a, b] = np.conj(zc) @ H[np.ix_(sup, sup2)] @ z2[:, cj]

        herm = float(np.max(np.abs(A - A.conj().T)))
        scale = float(np.max(np.abs(A))) or 1.0
        if herm > _HERM_TOL * max(1.0, scale):
            raise NumericalError(
                f"reduced operator lost Hermiticity: {herm:.3e} (scale {scale:.3e})")
        A = 0.5 * (A + A.conj().T)  # strip roundoff asymmetry only

        nz = np.argwhere(np.abs(A) > 1e-14 * max(1.0, scale))
        bw = int(np.max(np.abs(nz[:, 0] - nz[:, 1]))) if len(nz) else 0
        if bw > _MAX_BANDWIDTH:
            raise NumericalError(f"unexpected bandwidth {bw} after reduction")

        self._cols, self._blocks, self._A, self._bw = cols, blocks, A, bw
        self._col_kind = col_kind

    # -- public surface --------------------------------------------------

    @property
    def matrix(self) -> Array:
        """Reduced operator matrix (Hermitian; standard eigenproblem)."""
        return self._A

    @property
    def weights(self) -> Array:
        """Quadrature weights of the staggered degrees of freedom."""
        return self._m.copy()

    def hermiticity_residual(self) -> float:
        a = self._A
        return float(np.max(np.abs(a - a.conj().T)))

    def apply_interior(self, p: Array, q_full: Array) -> tuple[Array, Array]:
        """Apply the scheme rows to given staggered samples (oracle checks).

        Returns ((D v)_1 at the N centers, (D v)_2 at the N-1 interior
        vertices); boundary-vertex rows are closure-specific and excluded.
        """
        surf, k, N, h = self.surface, self.k, self.n_grid, self.h
        rc, xv = self.r_centers, self.r_vertices
        fc, fpc, fv = surf.f(rc), surf.fp(rc), surf.f(xv)
        sigma = fpc / (2 * fc) + k / fc
        fsig = fpc / 2 + k
        p = np.asarray(p, complex)
        q = np.asarray(q_full, complex)
        rp = 1j * ((q[1:] - q[:-1]) / h + sigma * (q[1:] + q[:-1]) / 2)
        i = np.arange(1, N)
        rq = 1j * ((fc[i] * p[i] - fc[i - 1] * p[i - 1]) / h
                   - (fsig[i - 1] * p[i - 1] + fsig[i] * p[i]) / 2) / fv[i]
        return rp, rq

    @property
    def structural_zeros(self) -> tuple[int, str] | None:
        """Exact zero eigenvalues forced by the staggered block dimensions.

        APS-type closures keep the two spinor components in separate blocks,
        so the reduced operator anticommutes with the component grading and
        carries |n_p - n_q| exact zeros.  A surplus on the vertex side is a
        boundary-window artifact of the over-determined closure ("spurious",
        removed from reported spectra after verification); a surplus on the
        center side is a discrete harmonic spinor ("harmonic", kept - these
        are genuine for the experimental aps+ condition).
        """
        kinds = self._col_kind
        if "mixed" in kinds:
            return None
        n_p = sum(1 for kk in kinds if kk == "p")
        n_q = len(kinds) - n_p
        if n_p == n_q:
            return None
        return (abs(n_p - n_q), "spurious" if n_q > n_p else "harmonic")

    def _band_full(self) -> Array:
        """(2 bw + 1, n) banded storage for scipy.linalg.solve_banded."""
        A, bw = self._A, self._bw
        n = A.shape[0]
        ab = np.zeros((2 * bw + 1, n), dtype=complex)
        for off in range(-bw, bw + 1):
            diag = np.diagonal(A, off)
            j0 = max(0, off)
            ab[bw - off, j0: j0 + len(diag)] = diag
        return ab

    def _inverse_iteration(self, lam: float, ortho: list[Array],
                           rng: np.random.Generator) -> Array:
        """One eigenvector of the reduced operator by shifted inverse iteration."""
        A, bw = self._A, self._bw
        n = A.shape[0]
        scale = max(float(np.max(np.abs(A))), 1.0)
        ab0 = self._band_full()
        shift = lam + 1e-12 * scale
        resid = np.inf
        for attempt in range(6):
            ab = ab0.copy()
            ab[bw, :] -= shift
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            try:
                for _ in range(3):
                    x = solve_banded((bw, bw), ab, x)
                    for v in ortho:
                        x = x - v * np.vdot(v, x)
                    x = x / np.linalg.norm(x)
            except np.linalg.LinAlgError:
                shift = lam + (1e-10 * 10 ** attempt) * scale
                continue
            resid = float(np.linalg.norm(A @ x - lam * x))
            if resid <= 1e-7 * scale:
                return x
            shift = lam + (1e-10 * 10 ** attempt) * scale
        raise NumericalError(
            f"inverse iteration failed at lambda={lam!r} (residual {resid:.2e})")

    def eigensystem(self, n_vectors: int | None = None
                    ) -> tuple[Array, Array | None, Array | None]:
        """All eigenvalues (structural zeros deflated when spurious) and,
        optionally, eigenvectors for the n smallest |lambda|.

        Returns (values ascending, selected values, selected vectors in
        reduced coordinates, one per column).
        """
        A, bw = self._A, self._bw
        n = A.shape[0]
        band = np.zeros((bw + 1, n), dtype=complex)
        for i in range(bw + 1):
            band[i, : n - i] = np.diagonal(A, -i)
        try:
            vals = eigvals_banded(band, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise NumericalError(f"banded eigensolver failed: {exc}") from exc

        struct = self.structural_zeros
        if struct is not None and struct[1] == "spurious":
            m = struct[0]
            order = np.argsort(np.abs(vals), kind="stable")
            zeros = vals[order[:m]]
            tol0 = 1e-8 * max(1.0, float(np.max(np.abs(vals))))
            if np.any(np.abs(zeros) > tol0):
                raise NumericalError(
                    "expected exact structural kernel, found "
                    f"{zeros!r}; refusing to deflate")
            vals = np.delete(vals, order[:m])

        if n_vectors is None:
            return vals, None, None
        n_sel = min(n_vectors, len(vals))
        if n_sel == 0:
            return vals, np.empty(0), np.empty((A.shape[0], 0), dtype=complex)
        order = np.argsort(np.abs(vals), kind="stable")
        wanted = np.sort(vals[order[:n_sel]])
        rng = np.random.default_rng(12345)
        vecs = []
        for i, lam in enumerate(wanted):
            cluster = [vecs[j] for j in range(i)
                       if abs(wanted[j] - lam) < 1e-7 * max(1.0, abs(lam))]
            vecs.append(self._inverse_iteration(float(lam), cluster, rng))
        return vals, wanted, np.column_stack(vecs)

    def expand(self, y: Array) -> tuple[Array, Array]:
        """Reduced eigenvector -> staggered samples (p at centers, q at all
        vertices, eliminated vertex values filled with their exact zeros)."""
        n = len(self._m)
        xhat = np.zeros(n, dtype=complex)
        for a, (_, kind, payload) in enumerate(self._cols):
            if kind == "unit":
                xhat[payload] += y[a]
            else:
                bi, ci = payload
                sup, z, _ = self._blocks[bi]
                xhat[sup] += z[:, ci] * y[a]
        x = xhat / np.sqrt(self._m)
        N = self.n_grid
        p = np.array([x[self._index[("p", j)]] for j in range(N)])
        q = np.zeros(N + 1, dtype=complex)
        for i in range(N + 1):
            d = ("q", i)
            if d in self._index:
                q[i] = x[self._index[d]]
        return p, q


def assemble_mode_dirac(surface: WarpedSurface, k: float, N: int) -> ModeOperator:
    """Radial reduction of D at one mode, no boundary condition applied yet.

    The returned operator uses the minimal (vertex-component Dirichlet)
    realization, which is Hermitian by construction; apply a
    BoundaryConditionSpec to obtain the physical spectra.
    """
    return ModeOperator(surface, k, N, bc=None)


def apply_boundary_condition(op: ModeOperator,
                             bc: BoundaryConditionSpec) -> ModeOperator:
    if op.bc is not None:
        raise ConfigError("operator already carries a boundary condition")
    return ModeOperator(op.surface, op.k, op.n_grid, bc=bc, frame=op.frame)


# ---------------------------------------------------------------------------
# eigen solves, spectra
# ---------------------------------------------------------------------------

@dataclass
class Eigenpair:
    lam: float
    k: float
    field: SpinorField | None = None


@dataclass
class ModeSolution:
    k: float
    lams: Array                       # all eigenvalues, ascending
    pairs: list                       # Eigenpairs with fields, by |lam|


def _phase_norm_scale(field_values: Array) -> complex:
    """Scalar making the first significant component real positive and the
    physical L^2(M) norm one (reduced vectors arrive with weighted norm 1)."""
    flat = field_values.ravel()
    big = np.abs(flat) > 1e-12 * float(np.max(np.abs(flat)))
    first = int(np.argmax(big))
    ph = flat[first] / abs(flat[first])
    return np.conj(ph) / np.sqrt(2 * np.pi)


def _collocate(op: ModeOperator, p: Array, q: Array, swap: bool) -> SpinorField:
    vals = np.empty((op.n_grid, 2), dtype=complex)
    vals[:, 0] = p
    vals[:, 1] = 0.5 * (q[:-1] + q[1:])
    if op.surface.cap:
        # vertex component vanishes like r^(k+1/2) at the pole; the midpoint
        # average is first-order there, the power rule restores second order
        vals[0, 1] = q[1] * 0.5 ** (op.k + 0.5)
    traces = {}
    for which in op.surface.boundaries:
        if which == "outer":
            tr = np.array([2.0 * p[-1] - 1.5 * p[-2] + 0.5 * p[-3], q[-1]])
        else:
            tr = np.array([2.0 * p[0] - 1.5 * p[1] + 0.5 * p[2], q[0]])
        traces[which] = tr[::-1].copy() if swap else tr
    if swap:
        vals = vals[:, ::-1]
    k = -op.k if swap else op.k
    scale = _phase_norm_scale(vals)
    vals = vals * scale
    traces = {w: t * scale for w, t in traces.items()}
    return SpinorField(op.surface, k, op.r_centers, vals, traces, frame=op.frame)


def solve_mode(surface: WarpedSurface, k: float, bc: BoundaryConditionSpec,
               N: int, n_fields: int = 4) -> ModeSolution:
    """Eigen-solve one mode; negative modes via the exact component swap."""
    swap = k < 0
    k_solve = -k if swap else k
    bc_solve = bc.swapped() if swap else bc
    op = ModeOperator(surface, k_solve, N, bc=bc_solve)
    vals, wv, vec = op.eigensystem(n_vectors=n_fields)
    pairs = []
    for col in range(vec.shape[1]):
        p, q = op.expand(vec[:, col])
        field = _collocate(op, p, q, swap)
        field.lam = float(wv[col])
        pairs.append(Eigenpair(float(wv[col]), k, field))
    pairs.sort(key=lambda e: (abs(e.lam), e.lam))
    return ModeSolution(k, vals, pairs)


@dataclass
class Spectrum:
    """Aggregated spectrum over modes |k| <= k_max with deterministic order."""

    surface: WarpedSurface
    bc: BoundaryConditionSpec
    n_grid: int
    k_max: float
    levels: Array                 # (n, 2) columns (lambda, k), sorted
    eigenpairs: tuple             # low-lying Eigenpairs with fields
    kmax_attained: bool

    @property
    def lambda_min(self) -> float:
        return float(self.levels[0, 0])

    @property
    def lambda_min_sq(self) -> float:
        return float(self.levels[0, 0] ** 2)

    @property
    def k_min(self) -> float:
        return float(self.levels[0, 1])

    @property
    def fundamental(self) -> Eigenpair:
        return self.eigenpairs[0]

    def eigenvalues(self, k: float | None = None) -> Array:
        if k is None:
            return self.levels[:, 0].copy()
        sel = self.levels[np.abs(self.levels[:, 1] - k) < 1e-9]
        return np.sort(sel[:, 0])


def _n_threads() -> int:
    env = os.environ.get("SPINSPEC_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def aggregate(surface: WarpedSurface, bc: BoundaryConditionSpec,
              k_max: float = 12.5, N: int = 256,
              n_fields_per_mode: int = 4) -> Spectrum:
    """Solve all modes |k| <= k_max and merge into one Spectrum.

    Mode solves are independent, run on a thread pool (capped by
    SPINSPEC_THREADS) and merged in fixed mode order, so results are
    deterministic.
    """
    modes = modes_for(surface, k_max)
    threads = _n_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sols = list(pool.map(
                lambda kk: solve_mode(surface, kk, bc, N, n_fields_per_mode),
                modes))
    else:
        sols = [solve_mode(surface, kk, bc, N, n_fields_per_mode) for kk in modes]

    rows = []
    pairs = []
    for sol in sols:
        rows.append(np.column_stack([sol.lams, np.full(len(sol.lams), sol.k)]))
        pairs.extend(sol.pairs)
    levels = np.vstack(rows)
    order = np.lexsort((np.sign(levels[:, 0]), levels[:, 1], np.abs(levels[:, 0])))
    levels = levels[order]
    pairs.sort(key=lambda e: (abs(e.lam), e.k, np.sign(e.lam)))
    attained = bool(abs(abs(levels[0, 1]) - max(abs(m) for m in modes)) < 1e-9)
    return Spectrum(surface, bc, N, k_max, levels, tuple(pairs), attained)


def solve_spectrum(op: ModeOperator, n_fields: int = 4) -> list[Eigenpair]:
    """Eigenpairs of a single reduced mode operator (real spectrum asserted)."""
    if op.bc is None:
        raise ConfigError("apply a boundary condition before solving")
    vals, wv, vec = op.eigensystem(n_vectors=n_fields)
    if np.max(np.abs(np.imag(vals))) > 1e-10:
        raise NumericalError("complex eigenvalue from a Hermitian reduction")
    out = []
    for col in range(vec.shape[1]):
        p, q = op.expand(vec[:, col])
        field = _collocate(op, p, q, swap=False)
        field.lam = float(wv[col])
        out.append(Eigenpair(float(wv[col]), op.k, field))
    out.sort(key=lambda e: (abs(e.lam), e.lam))
    return out


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

def convergence_study(surface: WarpedSurface, bc: BoundaryConditionSpec,
                      Ns: list[int], k_max: float = 2.5,
                      drift_tol: float = 1e-3) -> list[dict]:
    """|lambda_min| versus N with Richardson order estimates.

    The magnitude is tracked because the fundamental level often comes as a
    +-pair whose reported sign is an ordering tie.  Needs at least three
    ascending grid sizes for an order estimate; the 'converged' flag records
    drift below drift_tol between the last two.
    """
    if len(Ns) < 3:
        raise ConfigError("convergence study needs at least 3 grid sizes")
    if sorted(Ns) != list(Ns):
        raise ConfigError("grid sizes must be ascending")
    lams = [abs(aggregate(surface, bc, k_max, N, n_fields_per_mode=1).lambda_min)
            for N in Ns]
    rows = []
    for i, (N, lam) in enumerate(zip(Ns, lams)):
        order = None
        if i >= 2:
            d1 = abs(lams[i - 1] - lams[i - 2])
            d2 = abs(lams[i] - lams[i - 1])
            if d2 > 0 and d1 > 0:
                order = float(np.log(d1 / d2)
                              / np.log(Ns[i] / Ns[i - 1]))
        converged = i == len(Ns) - 1 and abs(lams[i] - lams[i - 1]) < drift_tol
        rows.append({"N": N, "lambda_min": lam, "order": order,
                     "converged": bool(converged)})
    return rows
