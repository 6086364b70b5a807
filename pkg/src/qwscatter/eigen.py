"""Generalized eigenfunctions of ``U``: Fourier-side and combinatorial constructions.

``u_pm = F^(pm)(theta)* phi`` is built from the free plane wave plus a resolvent
correction. The combinatorial eigenfunction ``Psi_inf`` is the long-time limit
of a walker fed by a half-line plane wave, computed through the compression
``U_D`` of ``U`` to the box D. Both satisfy ``(U - e^{i theta}) u = 0`` on Z^2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .green import Side, apply_R, boundary_source
from .lattice import (
    OFFSETS, Chirality, CoinField, FieldEvaluator, GridField, Window,
    V_adjoint_of_evaluator, apply_walk, walk_evaluator,
)
from .linalg import lu_factor

__all__ = [
    "BoundaryVector", "f0_star", "f0", "fpm_star", "fpm", "UDMatrix", "build_UD",
    "SpectralBound", "InconclusiveBound", "spectral_radius_bound",
    "CombinatorialEigenfunction", "combinatorial_eigenfunction", "finite_time_errors",
    "SingularLocalSystem", "ucp_matrices", "ucp_reconstruct", "eigen_residual",
    "incident_wave", "observed_ratio", "incident_site", "matching_constant",
]

SQRT2PI = math.sqrt(2 * math.pi)


@dataclass
class BoundaryVector:
    """An element of ``h(theta)``: four transverse sequences on ``-m..m``.

    ``data[p, t + m]`` is ``phi_p(t)``; the transverse coordinate is ``x2`` for
    Left/Right and ``x1`` for Down/Up. Entries outside ``-m..m`` are zero.
    """

    theta: float
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != 4 or self.data.shape[1] % 2 != 1:
            raise ValueError("boundary vector data must have shape (4, 2m+1)")

    @property
    def m(self) -> int:
        return (self.data.shape[1] - 1) // 2

    @classmethod
    def zeros(cls, theta: float, m: int) -> "BoundaryVector":
        return cls(theta, np.zeros((4, 2 * m + 1), dtype=complex))

    @classmethod
    def unit(cls, theta: float, chirality, t: int, m: int, value: complex = 1.0) -> "BoundaryVector":
        phi = cls.zeros(theta, m)
        phi.data[Chirality.parse(chirality), t + m] = value
        return phi

    def resize(self, m: int) -> "BoundaryVector":
        out = BoundaryVector.zeros(self.theta, m)
        k = min(m, self.m)
        out.data[:, m - k:m + k + 1] = self.data[:, self.m - k:self.m + k + 1]
        return out

    def values(self, p: int, t) -> np.ndarray:
        t = np.asarray(t)
        ok = np.abs(t) <= self.m
        out = np.zeros(t.shape, dtype=complex)
        out[ok] = self.data[p, t[ok] + self.m]
        return out

    def inner(self, other: "BoundaryVector") -> complex:
        m = max(self.m, other.m)
        return complex(np.sum(self.resize(m).data * np.conj(other.resize(m).data)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __sub__(self, other):
        m = max(self.m, other.m)
        return BoundaryVector(self.theta, self.resize(m).data - other.resize(m).data)

    def __add__(self, other):
        m = max(self.m, other.m)
        return BoundaryVector(self.theta, self.resize(m).data + other.resize(m).data)

    def __mul__(self, s):
        return BoundaryVector(self.theta, self.data * s)

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# free distorted Fourier transform

def f0_star(phi: BoundaryVector) -> FieldEvaluator:
    """Plane-wave field ``F0(theta)* phi``; it solves ``(U0 - e^{i theta}) u = 0``."""
    th = phi.theta

    def ev(x1, x2):
        out = np.empty(x1.shape + (4,), dtype=complex)
        out[:, 0] = np.exp(1j * th * x1) * phi.values(0, x2)
        out[:, 1] = np.exp(-1j * th * x1) * phi.values(1, x2)
        out[:, 2] = np.exp(1j * th * x2) * phi.values(2, x1)
        out[:, 3] = np.exp(-1j * th * x2) * phi.values(3, x1)
        return out / SQRT2PI

    return FieldEvaluator(ev, region="Z^2 (plane waves)")


def f0(f: GridField, theta: float, m: int | None = None) -> BoundaryVector:
    """``F0(theta) f``: full transverse-line sums of ``f`` with phases ``e^{-+ i theta y}``."""
    L = f.L
    m = L if m is None else m
    y = np.arange(-L, L + 1)
    em = np.exp(-1j * theta * y)
    rows = np.stack([
        em @ f.data[..., 0],
        np.conj(em) @ f.data[..., 1],
        f.data[..., 2] @ em,
        f.data[..., 3] @ np.conj(em),
    ]) / SQRT2PI
    return BoundaryVector(theta, rows).resize(m)


# --------------------------------------------------------------------------
# perturbed distorted Fourier transform

def fpm_star(phi: BoundaryVector, side, c: CoinField) -> FieldEvaluator:
    """``F^(pm)(theta)* phi = F0* phi + e^{i theta} U R(theta -+ i0) V* F0* phi``.

    ``side`` PLUS gives the eigenfunction whose scattered part is outgoing.
    """
    side = Side.parse(side)
    th = phi.theta
    u0 = f0_star(phi)
    h = V_adjoint_of_evaluator(c, u0)
    corr = walk_evaluator(c, apply_R(c, h, th, side.opposite))
    out = u0 + np.exp(1j * th) * corr
    out.region = "Z^2 (exact up to solve roundoff)"
    return out


def fpm(f: GridField, theta: float, side, c: CoinField, m: int | None = None) -> BoundaryVector:
    """``F^(pm)(theta) f = F0(theta) (f - V R(theta +- i0) f)``.

    ``V R f`` is supported in the box of half-width ``n0 + 1``, so the result is
    a finite computation. ``m`` defaults to the larger of the two supports.
    """
    s = Side.parse(side)
    g = boundary_source(c, f, theta, s)
    m = max(f.L, c.n0 + 1) if m is None else m
    return f0(f, theta, m) - f0(g, theta, m)


# --------------------------------------------------------------------------
# combinatorial construction

@dataclass
class UDMatrix:
    """``U_D = chi U chi*`` on ``l^2(D; C^4)`` with basis ``(x1, x2, chirality)`` lexicographic."""

    n0: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_vector(self, f: GridField) -> np.ndarray:
        return f.resize(self.n0).data.reshape(-1)

    def to_field(self, v: np.ndarray) -> GridField:
        n = 2 * self.n0 + 1
        return GridField(Window(self.n0), np.asarray(v).reshape(n, n, 4))


def build_UD(c: CoinField) -> UDMatrix:
    """Apply the walk to every basis field of D and restrict back to D."""
    n0 = c.n0
    n = 2 * n0 + 1
    dim = 4 * n * n
    cols = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        e = GridField.zeros(n0 + 1)
        i, rest = divmod(k, 4 * n)
        j, p = divmod(rest, 4)
        e.data[i + 1, j + 1, p] = 1.0
        cols[:, k] = apply_walk(c, e).crop(n0).data.reshape(-1)
    return UDMatrix(n0, cols)


class InconclusiveBound(RuntimeWarning):
    """The Gelfand bound did not drop below ``1 - margin`` within ``max_power``."""


@dataclass
class SpectralBound:
    bound: float
    power: int
    passed: bool
    history: np.ndarray


def spectral_radius_bound(m: UDMatrix | np.ndarray, max_power: int = 512, margin: float = 1e-6) -> SpectralBound:
    """``min_{k <= max_power} ||U_D^k||_2^{1/k}``, an upper bound on the spectral radius.

    Stops early once a power vanishes exactly. Emits :class:`InconclusiveBound`
    (a warning) if the bound never drops below ``1 - margin``.
    """
    if max_power < 1:
        raise ValueError("max_power must be >= 1")
    a = m.matrix if isinstance(m, UDMatrix) else np.asarray(m, dtype=complex)
    p = np.eye(a.shape[0], dtype=complex)
    best, best_k = np.inf, 0
    hist = []
    for k in range(1, max_power + 1):
        p = p @ a
        nrm = np.linalg.norm(p, 2) if p.size else 0.0
        val = nrm ** (1.0 / k)
        hist.append(val)
        if val < best:
            best, best_k = val, k
        if nrm == 0.0:
            break
    passed = best < 1 - margin
    if not passed:
        warnings.warn(f"Gelfand bound {best:.8f} not below 1 - {margin} within k <= {max_power}",
                      InconclusiveBound, stacklevel=2)
    return SpectralBound(float(best), best_k, passed, np.array(hist))


def incident_wave(n0: int, theta: float, b: int, chirality) -> FieldEvaluator:
    """Plane wave of unit amplitude on the half-line entering D along row/column ``b``.

    Left: ``e^{i theta x1} e_L`` on ``x2 = b, x1 >= n0+1``; Right: ``e^{-i theta x1} e_R``
    on ``x1 <= -n0-1``; Down: ``e^{i theta x2} e_D`` on ``x1 = b, x2 >= n0+1``;
    Up: ``e^{-i theta x2} e_U`` on ``x2 <= -n0-1``.
    """
    p = Chirality.parse(chirality)

    def ev(x1, x2):
        out = np.zeros(x1.shape + (4,), dtype=complex)
        along, across = (x1, x2) if p.axis == 0 else (x2, x1)
        s = p.sign
        on = (across == b) & (s * along >= n0 + 1)
        out[on, p] = np.exp(1j * s * theta * along[on])
        return out

    return FieldEvaluator(ev, region="Z^2")


@dataclass
class CombinatorialEigenfunction:
    theta: float
    b: int
    chirality: Chirality
    n0: int
    phi_inf: GridField
    f_inf: GridField
    source: GridField
    ring: dict
    evaluator: FieldEvaluator

    def __call__(self, x1, x2):
        return self.evaluator(x1, x2)


def _walk_source_on_D(c: CoinField, u: FieldEvaluator) -> GridField:
    """``chi U u`` for a field known pointwise (only values near D are read)."""
    X1, X2 = Window(c.n0).coords()
    return GridField(Window(c.n0), walk_evaluator(c, u)(X1, X2))


def combinatorial_eigenfunction(c: CoinField, theta: float, b: int, chirality) -> CombinatorialEigenfunction:
    """Long-time limit ``Psi_inf`` of ``e^{-it theta} U^t Psi_0`` for a single incident half-line.

    ``phi_inf`` solves ``(e^{i theta} - U_D) phi = chi U Psi_0`` directly; the
    outgoing corridor field is ``e^{-i mu_x theta} (U f_inf)(x~)`` with
    ``f_inf = delta_B chi* phi_inf``.
    """
    p = Chirality.parse(chirality)
    n0 = c.n0
    if not -n0 <= b <= n0:
        raise ValueError(f"incident row b={b} outside [-{n0}, {n0}]")
    ud = build_UD(c)
    psi0 = incident_wave(n0, theta, b, p)
    src = _walk_source_on_D(c, psi0)
    rhs = ud.to_vector(src)
    fac = lu_factor(np.exp(1j * theta) * np.eye(ud.dim) - ud.matrix)
    phi_inf = ud.to_field(fac.solve(rhs))

    X1, X2 = Window(n0).coords()
    ring_mask = (np.abs(X1) == n0) | (np.abs(X2) == n0)
    f_inf = GridField(Window(n0), phi_inf.data * ring_mask[..., None])
    uf = apply_walk(c, f_inf.embed(n0 + 1))
    t = np.arange(-n0, n0 + 1)
    e = n0 + 1
    ring = {
        "right": np.stack([uf.at(e, k) for k in t]),
        "left": np.stack([uf.at(-e, k) for k in t]),
        "top": np.stack([uf.at(k, e) for k in t]),
        "bottom": np.stack([uf.at(k, -e) for k in t]),
    }
    inner = phi_inf.as_evaluator()

    def ev(x1, x2):
        out = inner(x1, x2) + psi0(x1, x2)
        a1, a2 = np.abs(x1), np.abs(x2)
        horiz = (a1 > n0) & (a2 <= n0)
        vert = (a1 <= n0) & (a2 > n0)
        for key, sel, mu, tcoord in (
            ("right", horiz & (x1 > 0), x1 - n0, x2),
            ("left", horiz & (x1 < 0), -x1 - n0, x2),
            ("top", vert & (x2 > 0), x2 - n0, x1),
            ("bottom", vert & (x2 < 0), -x2 - n0, x1),
        ):
            if np.any(sel):
                vals = ring[key][tcoord[sel] + n0]
                out[sel] += np.exp(-1j * theta * mu[sel])[:, None] * vals
        return out

    return CombinatorialEigenfunction(theta, b, p, n0, phi_inf, f_inf, src, ring,
                                      FieldEvaluator(ev, region="Z^2"))


def finite_time_errors(c: CoinField, theta: float, b: int, chirality, t_max: int,
                       phi_inf: GridField | None = None) -> np.ndarray:
    """``|| e^{-it theta} phi_t - phi_inf ||`` for ``t = 0..t_max`` via the recursion
    ``phi_{t+1} = U_D phi_t + e^{it theta} chi U Psi_0``, ``phi_0 = 0``."""
    ud = build_UD(c)
    src = ud.to_vector(_walk_source_on_D(c, incident_wave(c.n0, theta, b, chirality)))
    if phi_inf is None:
        phi_inf = combinatorial_eigenfunction(c, theta, b, chirality).phi_inf
    target = ud.to_vector(phi_inf)
    phi = np.zeros(ud.dim, dtype=complex)
    errs = np.empty(t_max + 1)
    for t in range(t_max + 1):
        errs[t] = np.linalg.norm(np.exp(-1j * t * theta) * phi - target)
        phi = ud.matrix @ phi + np.exp(1j * t * theta) * src
    return errs


def observed_ratio(errors: np.ndarray, floor: float = 1e-13) -> float:
    """Geometric decay ratio from a log-linear fit over the second half of ``errors``.

    Entries below ``floor`` times the initial error are dropped so roundoff
    plateaus do not bias the fit.
    """
    e = np.asarray(errors, dtype=float)
    t = np.arange(e.size)
    keep = (t >= e.size // 2) & (e > floor * max(e[0], np.finfo(float).tiny))
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(t[keep], np.log(e[keep]), 1)[0]
    return float(np.exp(slope))


def incident_site(n0: int, b: int, chirality, depth: int = 3) -> tuple[int, int]:
    """A site on the incident half-line, ``depth`` steps beyond the box."""
    p = Chirality.parse(chirality)
    along = p.sign * (n0 + depth)
    return (along, b) if p.axis == 0 else (b, along)


def matching_constant(psi: CombinatorialEigenfunction, u_plus: FieldEvaluator, depth: int = 3) -> complex:
    """Ratio ``Psi_inf / u+`` of the incident component on the incident half-line.

    With ``u+ = F^(+)* (delta_b e_p)`` the ratio is ``sqrt(2 pi)``.
    """
    x = incident_site(psi.n0, psi.b, psi.chirality, depth)
    p = int(psi.chirality)
    return complex(psi.evaluator.at(x)[p] / u_plus.at(x)[p])


# --------------------------------------------------------------------------
# unique continuation

class SingularLocalSystem(np.linalg.LinAlgError):
    pass


def ucp_matrices(c: CoinField, theta: float, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(M, A1, A2)`` with ``M(x) psi(x) = A1(x+e1) psi(x+e1) + A2(x+e2) psi(x+e2)``.

    Odd rows (Left, Down) of ``M`` are ``e^{i theta}`` times unit rows and even
    rows (Right, Up) are rows of ``C(x)``; ``A_k`` carries row ``2k-1`` of the coin
    at ``x + e_k`` and ``e^{i theta}`` on the unit row ``2k``.
    """
    x1, x2 = int(x[0]), int(x[1])
    ph = np.exp(1j * theta)
    eye = np.eye(4)
    cx = c.matrix_at(np.array(x1), np.array(x2))
    c1 = c.matrix_at(np.array(x1 + 1), np.array(x2))
    c2 = c.matrix_at(np.array(x1), np.array(x2 + 1))
    M = np.array([ph * eye[0], cx[1], ph * eye[2], cx[3]])
    A1 = np.zeros((4, 4), dtype=complex)
    A1[0], A1[1] = c1[0], ph * eye[1]
    A2 = np.zeros((4, 4), dtype=complex)
    A2[2], A2[3] = c2[2], ph * eye[3]
    return M, A1, A2


def ucp_reconstruct(c: CoinField, theta: float, x, neighbor_values, det_floor: float = 1e-10) -> np.ndarray:
    """Recover ``psi(x)`` from ``psi(x+e1)`` and ``psi(x+e2)`` for a solution of ``U psi = e^{i theta} psi``."""
    M, A1, A2 = ucp_matrices(c, theta, x)
    det = abs(np.linalg.det(M))
    if det < det_floor:
        raise SingularLocalSystem(f"|det M| = {det:.3e} below {det_floor:.1e} at {tuple(x)}")
    n1, n2 = (np.asarray(v, dtype=complex) for v in neighbor_values)
    return np.linalg.solve(M, A1 @ n1 + A2 @ n2)


# --------------------------------------------------------------------------
# residual oracle

def eigen_residual(c: CoinField | None, u, theta: float, window: int | None = None) -> float:
    """``sup |(U u - e^{i theta} u)(x)|`` over window-interior sites.

    Evaluators are materialized with a one-site margin so the walk applied on
    the array is exact on the window; a :class:`GridField` is checked on its
    interior ``L - 1``. ``c=None`` checks against the free walk.
    """
    from .lattice import apply_free_walk

    if isinstance(u, GridField):
        L = u.L - 1 if window is None else min(window, u.L - 1)
        big = u
    else:
        L = 10 if window is None else window
        big = u.materialize(L + 1)
    uu = apply_free_walk(big) if c is None else apply_walk(c, big)
    r = uu.crop(L).data - np.exp(1j * theta) * big.crop(L).data
    return float(np.abs(r).max(initial=0.0))
