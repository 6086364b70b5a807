"""Fields, coins and the walk operators ``S``, ``C``, ``U = SC`` on a window of Z^2.

Layout conventions used throughout the package:

* chirality order is (Left, Right, Down, Up) = (0, 1, 2, 3);
* a :class:`GridField` stores amplitudes as ``data[x1 + L, x2 + L, p]``;
* every window operator reads 0 from outside the window, so only sites at
  distance >= 1 from the edge are exact after one application of ``S``.

Closed-form fields valid on all of Z^2 are represented by
:class:`FieldEvaluator`; pointwise operators on evaluators never truncate.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Chirality", "Site", "Window", "GridField", "FieldEvaluator", "CoinField",
    "BUILTIN_COINS", "ValidationReport", "CoinValidationError", "NormReport",
    "RadiationReport", "Sign",
    "apply_shift", "apply_shift_inverse", "apply_coin", "apply_coin_adjoint",
    "apply_walk", "apply_free_walk", "apply_walk_adjoint", "apply_free_walk_adjoint",
    "apply_V", "apply_V_adjoint", "v_range_box", "v_adjoint_range_box",
    "walk_evaluator", "free_walk_evaluator", "V_of_evaluator", "V_adjoint_of_evaluator",
    "validate_coin", "norms", "radiation_residual", "evolve", "evolve_iter",
    "validity_radius", "heaviside", "INCLUSION_CONSTANTS",
]


class Chirality(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    DOWN = 2
    UP = 3

    @property
    def axis(self) -> int:
        """0 for Left/Right (moves along x1), 1 for Down/Up."""
        return 0 if self <= 1 else 1

    @property
    def sign(self) -> int:
        """+1 if the shift reads from ``x + e_j`` (Left, Down), else -1."""
        return 1 if self in (Chirality.LEFT, Chirality.DOWN) else -1

    @property
    def offset(self) -> tuple[int, int]:
        return tuple(int(v) for v in OFFSETS[self])

    @property
    def letter(self) -> str:
        return "LRDU"[self]

    @classmethod
    def parse(cls, value) -> "Chirality":
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip()
        aliases = {"L": 0, "R": 1, "D": 2, "U": 3, "←": 0, "→": 1, "↓": 2, "↑": 3}
        if key.upper() in aliases:
            return cls(aliases[key.upper()])
        if key in aliases:
            return cls(aliases[key])
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown chirality {value!r}") from None


# (Sf)_p(x) = f_p(x + OFFSETS[p])
OFFSETS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])


class Site(NamedTuple):
    x1: int
    x2: int


def heaviside(s):
    """Indicator of ``s >= 0`` (so ``heaviside(0) == 1``)."""
    return (np.asarray(s) >= 0).astype(float)


@dataclass(frozen=True)
class Window:
    """The square ``|x1| <= L, |x2| <= L``."""

    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 0:
            raise ValueError(f"window half-width must be a nonnegative integer, got {self.L}")

    @property
    def size(self) -> int:
        return 2 * self.L + 1

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.arange(-self.L, self.L + 1)
        return np.meshgrid(r, r, indexing="ij")

    def contains(self, x1, x2):
        return (np.abs(x1) <= self.L) & (np.abs(x2) <= self.L)

    def sites(self) -> list[Site]:
        r = range(-self.L, self.L + 1)
        return [Site(a, b) for a in r for b in r]


@dataclass
class GridField:
    """A C^4-valued field on a finite window."""

    window: Window
    data: np.ndarray

    def __post_init__(self):
        if not isinstance(self.window, Window):
            self.window = Window(int(self.window))
        data = np.asarray(self.data, dtype=complex)
        n = self.window.size
        if data.shape != (n, n, 4):
            raise ValueError(f"field data must have shape {(n, n, 4)}, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains NaN or Inf")
        self.data = data

    @property
    def L(self) -> int:
        return self.window.L

    @classmethod
    def zeros(cls, L: int) -> "GridField":
        return cls(Window(L), np.zeros((2 * L + 1, 2 * L + 1, 4), dtype=complex))

    @classmethod
    def delta(cls, L: int, site=(0, 0), chirality=Chirality.LEFT, value: complex = 1.0) -> "GridField":
        f = cls.zeros(L)
        f.data[site[0] + L, site[1] + L, Chirality.parse(chirality)] = value
        return f

    @classmethod
    def random(cls, L: int, rng: np.random.Generator, radius: int | None = None) -> "GridField":
        """Complex Gaussian field supported in ``max(|x1|, |x2|) <= radius``."""
        radius = L if radius is None else radius
        f = cls.zeros(L)
        n = 2 * radius + 1
        lo = L - radius
        f.data[lo:lo + n, lo:lo + n] = rng.standard_normal((n, n, 4)) + 1j * rng.standard_normal((n, n, 4))
        return f

    def at(self, x1: int, x2: int) -> np.ndarray:
        if abs(x1) > self.L or abs(x2) > self.L:
            return np.zeros(4, dtype=complex)
        return self.data[x1 + self.L, x2 + self.L].copy()

    def copy(self) -> "GridField":
        return GridField(self.window, self.data.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2)))

    def inner(self, other: "GridField") -> complex:
        """``(self, other) = sum <self(x), other(x)>``, conjugate on ``other``."""
        a, b = _common(self, other)
        return complex(np.sum(a.data * np.conj(b.data)))

    def crop(self, L: int) -> "GridField":
        if L > self.L:
            raise ValueError("crop target larger than window")
        d = self.L - L
        return GridField(Window(L), self.data[d:d + 2 * L + 1, d:d + 2 * L + 1].copy())

    def embed(self, L: int) -> "GridField":
        if L < self.L:
            return self.crop(L)
        out = GridField.zeros(L)
        d = L - self.L
        out.data[d:d + self.window.size, d:d + self.window.size] = self.data
        return out

    def resize(self, L: int) -> "GridField":
        return self.embed(L) if L >= self.L else self.crop(L)

    def support_radius(self) -> int:
        """Largest ``max(|x1|, |x2|)`` over nonzero sites; -1 for the zero field."""
        nz = np.nonzero(np.any(self.data != 0, axis=2))
        if nz[0].size == 0:
            return -1
        return int(max(np.abs(nz[0] - self.L).max(), np.abs(nz[1] - self.L).max()))

    def as_evaluator(self) -> "FieldEvaluator":
        data, L = self.data, self.L

        def ev(x1, x2):
            inside = (np.abs(x1) <= L) & (np.abs(x2) <= L)
            out = np.zeros(x1.shape + (4,), dtype=complex)
            out[inside] = data[x1[inside] + L, x2[inside] + L]
            return out

        return FieldEvaluator(ev, region=f"window L={L}, zero outside")

    def __add__(self, other):
        a, b = _common(self, other)
        return GridField(a.window, a.data + b.data)

    def __sub__(self, other):
        a, b = _common(self, other)
        return GridField(a.window, a.data - b.data)

    def __mul__(self, scalar):
        return GridField(self.window, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.window, -self.data)


def _common(a: GridField, b: GridField) -> tuple[GridField, GridField]:
    L = max(a.L, b.L)
    return a.resize(L), b.resize(L)


class FieldEvaluator:
    """Exact pointwise evaluator ``Site -> C^4`` for closed-form fields on Z^2.

    ``func(x1, x2)`` takes integer arrays of equal shape and returns an array of
    shape ``x1.shape + (4,)``. ``region`` describes where the closed form is exact.
    """

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], region: str = "Z^2"):
        self._func = func
        self.region = region

    def __call__(self, x1, x2) -> np.ndarray:
        a = np.asarray(x1, dtype=np.int64)
        b = np.asarray(x2, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        out = self._func(a.reshape(-1), b.reshape(-1))
        return np.asarray(out, dtype=complex).reshape(a.shape + (4,))

    def at(self, site) -> np.ndarray:
        return self(site[0], site[1])

    def materialize(self, L: int) -> GridField:
        X1, X2 = Window(L).coords()
        return GridField(Window(L), self(X1, X2))

    def _combine(self, other, op, name):
        f, g = self._func, other._func
        return FieldEvaluator(lambda x1, x2: op(f(x1, x2), g(x1, x2)),
                              region=f"({self.region}) {name} ({other.region})")

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __mul__(self, scalar):
        f = self._func
        return FieldEvaluator(lambda x1, x2: scalar * f(x1, x2), region=self.region)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def zero(cls) -> "FieldEvaluator":
        return cls(lambda x1, x2: np.zeros(x1.shape + (4,), dtype=complex))


# --------------------------------------------------------------------------
# coins

_H = 0.5 * np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=complex)
_S2, _S6, _S12 = np.sqrt(2), np.sqrt(6), np.sqrt(12)
_E2 = np.array([
    [1 / _S2, 1 / _S6, 1 / _S12, 1 / 2],
    [-1 / _S2, 1 / _S6, 1 / _S12, 1 / 2],
    [0, -2 / _S6, 1 / _S12, 1 / 2],
    [0, 0, 3 / _S12, -1 / 2],
], dtype=complex)
_GROVER = 0.5 * np.array([[-1, 1, 1, 1], [1, -1, 1, 1], [1, 1, -1, 1], [1, 1, 1, -1]], dtype=complex)
_FOURIER = 0.5 * np.array([[1, 1, 1, 1], [1, 1j, -1, -1j], [1, -1, 1, -1], [1, -1j, -1, 1j]], dtype=complex)

BUILTIN_COINS: dict[str, np.ndarray] = {
    "example1": _H,
    "example2": _E2,
    "grover": _GROVER,
    "fourier": _FOURIER,
    "identity": np.eye(4, dtype=complex),
}
for _m in BUILTIN_COINS.values():
    _m.setflags(write=False)


@dataclass(frozen=True, eq=False)
class CoinField:
    """Coin matrices ``C(x)`` on the box ``D = {|x1|, |x2| <= n0}``; identity outside.

    ``coins[x1 + n0, x2 + n0]`` is the 4x4 matrix at ``(x1, x2)``. Instances are
    immutable and hash by identity, so they can key caches.
    """

    n0: int
    coins: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        if int(self.n0) != self.n0 or self.n0 < 1:
            raise ValueError(f"n0 must be a positive integer, got {self.n0}")
        n = 2 * self.n0 + 1
        coins = np.array(self.coins, dtype=complex)
        if coins.shape != (n, n, 4, 4):
            raise ValueError(f"coins must have shape {(n, n, 4, 4)}, got {coins.shape}")
        if not np.all(np.isfinite(coins)):
            raise ValueError("coin matrices contain NaN or Inf")
        coins.setflags(write=False)
        object.__setattr__(self, "coins", coins)

    @classmethod
    def homogeneous(cls, matrix, n0: int, name: str = "custom") -> "CoinField":
        m = np.asarray(matrix, dtype=complex)
        n = 2 * n0 + 1
        return cls(n0, np.broadcast_to(m, (n, n, 4, 4)).copy(), name=name)

    @classmethod
    def builtin(cls, name: str, n0: int) -> "CoinField":
        try:
            m = BUILTIN_COINS[name]
        except KeyError:
            raise ValueError(f"unknown builtin coin {name!r}; choose from {sorted(BUILTIN_COINS)}") from None
        return cls.homogeneous(m, n0, name=name)

    @classmethod
    def identity(cls, n0: int) -> "CoinField":
        return cls.builtin("identity", n0)

    @classmethod
    def random(cls, n0: int, seed: int = 0) -> "CoinField":
        """Haar-random unitary at every site of D."""
        from scipy.stats import unitary_group

        n = 2 * n0 + 1
        mats = unitary_group.rvs(4, size=n * n, random_state=seed).reshape(n, n, 4, 4)
        return cls(n0, mats, name=f"random(seed={seed})")

    def sites(self) -> list[Site]:
        r = range(-self.n0, self.n0 + 1)
        return [Site(a, b) for a in r for b in r]

    def in_box(self, x1, x2):
        return (np.abs(x1) <= self.n0) & (np.abs(x2) <= self.n0)

    def matrix_at(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        out = np.broadcast_to(np.eye(4, dtype=complex), x1.shape + (4, 4)).copy()
        inside = self.in_box(x1, x2)
        out[inside] = self.coins[x1[inside] + self.n0, x2[inside] + self.n0]
        return out

    def on_window(self, L: int) -> np.ndarray:
        """Coin array of shape ``(2L+1, 2L+1, 4, 4)`` for a window."""
        X1, X2 = Window(L).coords()
        return self.matrix_at(X1, X2)


# --------------------------------------------------------------------------
# operators on window fields

def _read(arr: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """``out[x] = arr[x + d]`` with zeros where ``x + d`` leaves the window."""
    out = np.zeros_like(arr)
    n1, n2 = arr.shape[:2]
    s1 = slice(max(0, -d1), n1 - max(0, d1))
    s2 = slice(max(0, -d2), n2 - max(0, d2))
    t1 = slice(max(0, d1), n1 - max(0, -d1))
    t2 = slice(max(0, d2), n2 - max(0, -d2))
    out[s1, s2] = arr[t1, t2]
    return out


def apply_shift(f: GridField) -> GridField:
    """``(Sf)_p(x) = f_p(x + offset_p)``; sources outside the window read 0."""
    out = np.empty_like(f.data)
    for p in range(4):
        out[..., p] = _read(f.data[..., p], *OFFSETS[p])
    return GridField(f.window, out)


def apply_shift_inverse(f: GridField) -> GridField:
    out = np.empty_like(f.data)
    for p in range(4):
        out[..., p] = _read(f.data[..., p], *(-OFFSETS[p]))
    return GridField(f.window, out)


def apply_coin(c: CoinField, f: GridField) -> GridField:
    if f.L < c.n0:
        raise ValueError(f"window L={f.L} does not cover the coin box n0={c.n0}")
    return GridField(f.window, np.einsum("abpq,abq->abp", c.on_window(f.L), f.data))


def apply_coin_adjoint(c: CoinField, f: GridField) -> GridField:
    if f.L < c.n0:
        raise ValueError(f"window L={f.L} does not cover the coin box n0={c.n0}")
    return GridField(f.window, np.einsum("abqp,abq->abp", np.conj(c.on_window(f.L)), f.data))


def apply_walk(c: CoinField, f: GridField) -> GridField:
    return apply_shift(apply_coin(c, f))


def apply_free_walk(f: GridField) -> GridField:
    return apply_shift(f)


def apply_walk_adjoint(c: CoinField, f: GridField) -> GridField:
    return apply_coin_adjoint(c, apply_shift_inverse(f))


def apply_free_walk_adjoint(f: GridField) -> GridField:
    return apply_shift_inverse(f)


def apply_V(c: CoinField, f: GridField) -> GridField:
    """``V f = S (C - I) f``; the result lies in :func:`v_range_box`."""
    g = apply_coin(c, f) - f
    return apply_shift(g)


def apply_V_adjoint(c: CoinField, f: GridField) -> GridField:
    """``V* f = (C* - I) S^{-1} f``; the result is supported in D."""
    g = apply_shift_inverse(f)
    return apply_coin_adjoint(c, g) - g


def v_range_box(c: CoinField) -> tuple[tuple[int, int], tuple[int, int]]:
    """Bounding box ``((x1min, x1max), (x2min, x2max))`` of the range of V."""
    n = c.n0 + 1
    return (-n, n), (-n, n)


def v_adjoint_range_box(c: CoinField) -> tuple[tuple[int, int], tuple[int, int]]:
    return (-c.n0, c.n0), (-c.n0, c.n0)


# --------------------------------------------------------------------------
# pointwise operators on evaluators (no truncation)

def walk_evaluator(c: CoinField | None, u: FieldEvaluator) -> FieldEvaluator:
    """``U u`` (or ``U0 u`` when ``c`` is None) as an exact evaluator."""

    def ev(x1, x2):
        out = np.empty(x1.shape + (4,), dtype=complex)
        for p in range(4):
            y1, y2 = x1 + OFFSETS[p, 0], x2 + OFFSETS[p, 1]
            uy = u(y1, y2)
            if c is None:
                out[:, p] = uy[:, p]
            else:
                out[:, p] = np.einsum("nq,nq->n", c.matrix_at(y1, y2)[:, p, :], uy)
        return out

    return FieldEvaluator(ev, region=u.region)


def free_walk_evaluator(u: FieldEvaluator) -> FieldEvaluator:
    return walk_evaluator(None, u)


def V_of_evaluator(c: CoinField, u: FieldEvaluator) -> GridField:
    """``V u`` for a field known pointwise; returned on the window ``n0 + 1``."""
    L = c.n0 + 1
    X1, X2 = Window(L).coords()
    out = np.zeros((2 * L + 1, 2 * L + 1, 4), dtype=complex)
    for p in range(4):
        y1, y2 = X1 + OFFSETS[p, 0], X2 + OFFSETS[p, 1]
        inside = c.in_box(y1, y2)
        uy = u(y1[inside], y2[inside])
        cm = c.matrix_at(y1[inside], y2[inside])[:, p, :] - np.eye(4)[p]
        out[inside, p] = np.einsum("nq,nq->n", cm, uy)
    return GridField(Window(L), out)


def V_adjoint_of_evaluator(c: CoinField, u: FieldEvaluator) -> GridField:
    """``V* u = (C* - I) S^{-1} u`` for a field known pointwise; window ``n0``."""
    L = c.n0
    X1, X2 = Window(L).coords()
    s_inv = np.empty((2 * L + 1, 2 * L + 1, 4), dtype=complex)
    for p in range(4):
        s_inv[..., p] = u(X1 - OFFSETS[p, 0], X2 - OFFSETS[p, 1])[..., p]
    cstar = np.conj(np.swapaxes(c.coins, -1, -2)) - np.eye(4)
    return GridField(Window(L), np.einsum("abpq,abq->abp", cstar, s_inv))


# --------------------------------------------------------------------------
# validation

class CoinValidationError(ValueError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(report.summary())


@dataclass
class ValidationReport:
    passed: bool
    unitarity_defect: np.ndarray
    odd_minor: np.ndarray
    even_minor: np.ndarray
    failures: list[dict]
    tol: float
    det_floor: float

    def summary(self) -> str:
        if self.passed:
            return "coin valid"
        kinds = sorted({f["condition"] for f in self.failures})
        return f"coin invalid at {len(self.failures)} site(s): {', '.join(kinds)}"

    def raise_if_failed(self):
        if not self.passed:
            raise CoinValidationError(self)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "det_floor": self.det_floor,
            "max_unitarity_defect": float(self.unitarity_defect.max()),
            "min_odd_minor": float(self.odd_minor.min()),
            "min_even_minor": float(self.even_minor.min()),
            "failures": self.failures,
        }


def validate_coin(c: CoinField, tol: float = 1e-12, det_floor: float = 1e-10) -> ValidationReport:
    """Check unitarity and the two nonvanishing 2x2 sub-determinants at each site of D."""
    m = c.coins
    eye = np.eye(4)
    defect = np.linalg.norm(m @ np.conj(np.swapaxes(m, -1, -2)) - eye, axis=(-2, -1))
    odd = np.abs(np.linalg.det(m[..., [0, 2], :][..., :, [0, 2]]))
    even = np.abs(np.linalg.det(m[..., [1, 3], :][..., :, [1, 3]]))
    failures = []
    for i, j in np.ndindex(defect.shape):
        site = [int(i - c.n0), int(j - c.n0)]
        if defect[i, j] > tol:
            failures.append({"site": site, "condition": "unitarity", "value": float(defect[i, j])})
        if odd[i, j] < det_floor:
            failures.append({"site": site, "condition": "odd_minor", "value": float(odd[i, j])})
        if even[i, j] < det_floor:
            failures.append({"site": site, "condition": "even_minor", "value": float(even[i, j])})
    return ValidationReport(not failures, defect, odd, even, failures, tol, det_floor)


# --------------------------------------------------------------------------
# norms

@dataclass
class NormReport:
    l2: float
    l2s: dict[float, float]
    b_norm: float
    b_star_norm: float
    shells: np.ndarray


def _transport_coords(L: int):
    """Per-component transport coordinate grids: |x1| for L/R, |x2| for D/U."""
    X1, X2 = Window(L).coords()
    A1, A2 = np.abs(X1), np.abs(X2)
    return np.stack([A1, A1, A2, A2], axis=-1)


def _shell_index(r: np.ndarray) -> np.ndarray:
    # I_0 = {0}, I_j = {2^(j-1) <= |y| < 2^j}: the bit length of |y|
    return np.where(r == 0, 0, np.floor(np.log2(np.maximum(r, 1))).astype(int) + 1)


def _partial_masses(f: GridField) -> np.ndarray:
    """``P[rho-1]`` = anisotropic mass with transport coordinate < rho, rho = 1..L."""
    coord = _transport_coords(f.L)
    w = np.abs(f.data) ** 2
    per_r = np.bincount(coord.ravel(), weights=w.ravel(), minlength=f.L + 1)
    return np.cumsum(per_r)[: max(f.L, 1)]


# Constants c with lhs <= c * rhs for every field, using the weight (1 + r^2)^s:
# shell j >= 1 has r <= 2^j - 1, so (1 + r^2)^(1/2) <= 2^j; and r < rho gives
# (1 + r^2)^(-1/2) >= 1/rho.
INCLUSION_CONSTANTS = {
    ("l2s(0.5)", "b_norm"): 1.0,
    ("b_star_norm", "b_norm"): 1.0,
    ("b_star_norm", "l2s(-0.5)"): 1.0,
}


def norms(f: GridField, s_list: Sequence[float] = (0.5, -0.5)) -> NormReport:
    """l2, weighted l^{2,s}, and the truncated anisotropic B / B* norms.

    Left/Right amplitudes are binned by ``|x1|`` and Down/Up by ``|x2|``. The
    B* supremum runs over ``rho = 1, ..., L``.
    """
    coord = _transport_coords(f.L)
    w = np.abs(f.data) ** 2
    shell = _shell_index(coord)
    depth = int(f.L).bit_length()
    a = np.sqrt(np.bincount(shell.ravel(), weights=w.ravel(), minlength=depth + 1))
    r = 2.0 ** np.arange(a.size)
    b_norm = float(np.sum(np.sqrt(r) * a))
    masses = _partial_masses(f)
    rho = np.arange(1, masses.size + 1)
    b_star = float(np.sqrt(np.max(masses / rho)))
    l2s = {float(s): float(np.sqrt(np.sum((1.0 + coord ** 2) ** s * w))) for s in s_list}
    return NormReport(float(np.sqrt(w.sum())), l2s, b_norm, b_star, a)


# --------------------------------------------------------------------------
# radiation condition

class Sign(enum.Enum):
    PLUS = "+"
    MINUS = "-"

    @classmethod
    def parse(cls, value) -> "Sign":
        if isinstance(value, cls):
            return value
        if hasattr(value, "sign"):
            return cls.PLUS if value.sign > 0 else cls.MINUS
        key = str(value).strip().lower()
        if key in ("+", "plus", "+i0", "p"):
            return cls.PLUS
        if key in ("-", "minus", "-i0", "m"):
            return cls.MINUS
        raise ValueError(f"unknown sign {value!r}")


@dataclass
class RadiationReport:
    residual: GridField
    sup: float
    indicator: np.ndarray
    probe_radius: int


def _b_mask(L: int, sign: Sign) -> np.ndarray:
    X1, X2 = Window(L).coords()
    s = 1 if sign is Sign.PLUS else -1
    return np.stack([heaviside(s * X1), heaviside(-s * X1), heaviside(s * X2), heaviside(-s * X2)], axis=-1)


def radiation_residual(u, theta: float, sign, probe_radius: int, window: int | None = None) -> RadiationReport:
    """``B_pm S u - e^{i theta} u`` on sites with ``max(|x1|, |x2|) >= probe_radius``.

    ``u`` may be a :class:`GridField` (edge sites are excluded) or a
    :class:`FieldEvaluator` (evaluated on ``window``, default ``probe_radius + 8``).
    The indicator is ``(1/rho) * anisotropic mass below rho`` of the residual.
    """
    sign = Sign.parse(sign)
    if isinstance(u, GridField):
        L = u.L - 1
        if probe_radius > L:
            raise ValueError("probe radius must not exceed L - 1")
        su = apply_shift(u).crop(L)
        uu = u.crop(L)
    else:
        L = probe_radius + 8 if window is None else window
        big = u.materialize(L + 1)
        su = apply_shift(big).crop(L)
        uu = big.crop(L)
    res = _b_mask(L, sign) * su.data - np.exp(1j * theta) * uu.data
    X1, X2 = Window(L).coords()
    far = np.maximum(np.abs(X1), np.abs(X2)) >= probe_radius
    res[~far] = 0.0
    r = GridField(Window(L), res)
    masses = _partial_masses(r)
    indicator = masses / np.arange(1, masses.size + 1)
    return RadiationReport(r, float(np.abs(res).max(initial=0.0)), indicator, probe_radius)


# --------------------------------------------------------------------------
# time evolution

def evolve_iter(c: CoinField, f: GridField, t: int):
    """Yield ``U^k f`` for ``k = 0, ..., t``."""
    if t < 0:
        raise ValueError("number of steps must be nonnegative")
    g = f
    yield g
    for _ in range(t):
        g = apply_walk(c, g)
        yield g


def evolve(c: CoinField, f: GridField, t: int) -> GridField:
    """``U^t f`` on the window of ``f``.

    Exact on sites within :func:`validity_radius` of the origin; the norm is
    conserved as long as that radius is nonnegative.
    """
    g = f
    for g in evolve_iter(c, f, t):
        pass
    return g


def validity_radius(L: int, support_radius: int, t: int) -> int:
    """``L - t - support_radius``: negative once the wavefront can reach the edge."""
    return L - t - support_radius
