"""Property suites run by ``qws verify``; each check yields a JSON-ready verdict."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .eigen import (
    BoundaryVector, build_UD, combinatorial_eigenfunction, eigen_residual, f0, f0_star,
    finite_time_errors, fpm, fpm_star, observed_ratio, spectral_radius_bound, ucp_reconstruct,
)
from .green import GreenKernel, Side, apply_R, apply_R0, boundary_source
from .lattice import (
    CoinField, GridField, Window, apply_free_walk, apply_walk, norms, radiation_residual,
    V_of_evaluator,
)
from .smatrix import channel_amplitudes, check_corridor, check_unitarity, compute_A

__all__ = ["Check", "SuiteResult", "SUITES", "run_suite", "run_checks"]

SQRT2PI = math.sqrt(2 * math.pi)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    counterexample: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        f = self.first_failure()
        return {"suite": self.suite, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks],
                "firstFailure": None if f is None else f.to_dict()}


def _worst(name: str, items, tol: float) -> Check:
    """``items`` yields ``(value, context)``; the largest value decides."""
    worst, ctx = 0.0, None
    for v, c in items:
        if not np.isfinite(v) or v > worst:
            worst, ctx = float(v), c
            if not np.isfinite(v):
                break
    ok = bool(np.isfinite(worst) and worst <= tol)
    return Check(name, ok, worst, tol, None if ok else ctx)


# -- kernels ---------------------------------------------------------------

def kernel_fundamental_residual(theta: float, side: Side, p: int, L: int, y=(0, 0)) -> float:
    """``sup |(U0 - e^{i theta}) G0(. - y) e_p - delta_y e_p|`` on a window."""
    k = GreenKernel(theta, side)
    X1, X2 = Window(L + 1).coords()
    g = np.zeros(X1.shape + (4,), dtype=complex)
    g[..., p] = k(X1 - y[0], X2 - y[1])[..., p]
    G = GridField(Window(L + 1), g)
    r = apply_free_walk(G).crop(L).data - np.exp(1j * theta) * G.crop(L).data
    r[y[0] + L, y[1] + L, p] -= 1.0
    return float(np.abs(r).max())


def free_resolvent_residual(f: GridField, theta: float, side: Side, L: int) -> float:
    u = apply_R0(f, theta, side).materialize(L + 1)
    r = apply_free_walk(u).crop(L).data - np.exp(1j * theta) * u.crop(L).data - f.resize(L).data
    return float(np.abs(r).max())


def resolvent_residual(c: CoinField, f: GridField, theta: float, side: Side, L: int) -> float:
    u = apply_R(c, f, theta, side).materialize(L + 1)
    r = apply_walk(c, u).crop(L).data - np.exp(1j * theta) * u.crop(L).data - f.resize(L).data
    return float(np.abs(r).max())


def _kernels(c, thetas, L, rng, tol):
    checks = [
        _worst("fundamental solution", ((kernel_fundamental_residual(t, s, p, min(L, 40)),
                                         {"theta": t, "side": s.value, "chirality": p})
                                        for t in thetas for s in Side for p in range(4)), 1e-12),
    ]
    fs = [GridField.random(6, rng, radius=4) for _ in range(6)]
    checks.append(_worst("free resolvent equation", ((free_resolvent_residual(f, t, s, 12),
                                                      {"theta": t, "side": s.value})
                                                     for f in fs for t in thetas[:4] for s in Side), 1e-12))
    X1, X2 = Window(8).coords()

    def sym():
        for t in thetas:
            for s in Side:
                k = GreenKernel(t, s)
                a, b = k(X1, X2), k(-X1, -X2)
                yield float(max(np.abs(a[..., 1] - b[..., 0]).max(), np.abs(a[..., 3] - b[..., 2]).max())), \
                    {"theta": t, "side": s.value}
    checks.append(_worst("kernel reflection symmetry", sym(), 0.0))
    return checks


# -- resolvents ------------------------------------------------------------

def adjoint_pairing_defect(c, f, g, theta, L) -> float:
    """``|(R+ f, g) - (f, -e^{i theta} U R- g)|`` relative to ``|f||g|``."""
    lhs = apply_R(c, f, theta, Side.PLUS).materialize(L).inner(g.resize(L))
    from .lattice import walk_evaluator

    rhs_field = (walk_evaluator(c, apply_R(c, g, theta, Side.MINUS)) * (-np.exp(1j * theta))).materialize(L)
    rhs = f.resize(L).inner(rhs_field)
    return abs(lhs - rhs) / (f.norm() * g.norm())


def stone_defect(c, f, g, theta, side, L) -> float:
    """Stone-type identity, scaled by the truncated B-norms of ``f`` and ``g``."""
    lhs = (apply_R(c, f, theta, Side.PLUS) - apply_R(c, f, theta, Side.MINUS)).materialize(L).inner(g.resize(L))
    m = max(f.L, g.L, c.n0 + 1)
    rhs = 2 * np.pi * np.exp(-1j * theta) * fpm(f, theta, side, c, m).inner(fpm(g, theta, side, c, m))
    return abs(lhs - rhs) / (norms(f).b_norm * norms(g).b_norm)


def resolvent_equation_defect(c, f, theta, side, L) -> float:
    """Both forms of the resolvent equation agree with ``R f`` at window sites."""
    X1, X2 = Window(L).coords()
    rf = apply_R(c, f, theta, side)(X1, X2)
    g = boundary_source(c, f, theta, side)
    form1 = apply_R0(f, theta, side)(X1, X2) - apply_R0(g, theta, side)(X1, X2)
    vr0f = V_of_evaluator(c, apply_R0(f, theta, side))
    form2 = apply_R0(f, theta, side)(X1, X2) - apply_R(c, vr0f, theta, side)(X1, X2)
    return float(max(np.abs(rf - form1).max(), np.abs(rf - form2).max()))


def _resolvents(c, thetas, L, rng, tol):
    fs = [GridField.random(c.n0 + 3, rng, radius=c.n0 + 3) for _ in range(4)]
    checks = [
        _worst("perturbed resolvent equation", ((resolvent_residual(c, f, t, s, min(L, c.n0 + 12)),
                                                 {"theta": t, "side": s.value})
                                                for f in fs[:2] for t in thetas for s in Side), tol),
        _worst("resolvent equation forms", ((resolvent_equation_defect(c, fs[0], t, s, c.n0 + 8),
                                             {"theta": t, "side": s.value})
                                            for t in thetas[:4] for s in Side), tol),
        _worst("adjoint pairing", ((adjoint_pairing_defect(c, fs[0], fs[1], t, 3 * c.n0 + 12), {"theta": t})
                                   for t in thetas[:4]), tol),
        _worst("stone identity", ((stone_defect(c, fs[2], fs[3], t, s, 3 * c.n0 + 12),
                                   {"theta": t, "side": s.value})
                                  for t in thetas[:4] for s in Side), tol),
    ]
    return checks


# -- eigenfunctions --------------------------------------------------------

def _channels(n0):
    return [(b, p) for p in range(4) for b in range(-n0, n0 + 1)]


def _eigen(c, thetas, L, rng, tol, agree_tol=1e-8):
    n0 = c.n0
    ths = thetas[:4]
    win = min(L, n0 + 20)
    X1, X2 = Window(win).coords()
    x1, x2 = X1.ravel(), X2.ravel()

    res, agree, ucp = [], [], []
    for t in ths:
        for b, p in _channels(n0):
            ctx = {"theta": t, "row": b, "chirality": p}
            psi = combinatorial_eigenfunction(c, t, b, p)
            up = fpm_star(BoundaryVector.unit(t, p, b, n0 + 2), Side.PLUS, c)
            res.append((max(eigen_residual(c, psi.evaluator, t, win), eigen_residual(c, up, t, win)), ctx))
            agree.append((float(np.abs(psi(x1, x2) - SQRT2PI * up(x1, x2)).max()), ctx))
            err = 0.0
            for s in c.sites():
                got = ucp_reconstruct(c, t, s, (psi.evaluator.at((s[0] + 1, s[1])),
                                                psi.evaluator.at((s[0], s[1] + 1))))
                err = max(err, float(np.abs(got - psi.evaluator.at(s)).max()))
            ucp.append((err, ctx))

    phi = BoundaryVector(thetas[0], rng.normal(size=(4, 2 * n0 + 5)) + 1j * rng.normal(size=(4, 2 * n0 + 5)))
    f = GridField.random(n0 + 3, rng, radius=n0 + 3)

    def duality():
        for s in Side:
            u = fpm_star(phi, s, c)
            lhs = u.materialize(f.L).inner(f)
            rhs = phi.inner(fpm(f, phi.theta, s, c, phi.m))
            yield abs(lhs - rhs), {"side": s.value}
        yield abs(f0_star(phi).materialize(f.L).inner(f) - phi.inner(f0(f, phi.theta, phi.m))), {"side": "free"}

    ud = build_UD(c)
    sb = _quiet_bound(ud)
    col = float(np.linalg.norm(ud.matrix, axis=0).max(initial=0.0))
    errs = finite_time_errors(c, thetas[0], 0, 0, 200)
    ratio = observed_ratio(errs)
    return [
        _worst("eigen residual", res, tol),
        _worst("cross-construction agreement", agree, agree_tol),
        _worst("unique continuation", ucp, tol),
        _worst("transform duality", duality(), tol),
        Check("U_D spectral bound", sb.bound < 1 - 1e-6, sb.bound, 1 - 1e-6,
              None if sb.bound < 1 - 1e-6 else {"power": sb.power}),
        Check("U_D column contraction", col <= 1 + 1e-12, col, 1 + 1e-12),
        Check("finite-time convergence ratio", ratio <= sb.bound + 1e-3, ratio, sb.bound + 1e-3),
    ]


def _quiet_bound(ud):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return spectral_radius_bound(ud)


# -- S-matrix --------------------------------------------------------------

def _smatrix(c, thetas, L, rng, tol, unitary_tol=1e-10, corridor_tol=1e-12):
    n0 = c.n0
    blocks = [compute_A(c, t) for t in thetas]
    checks = [
        _worst("sigma unitarity", ((check_unitarity(b).defect, {"theta": b.theta}) for b in blocks), unitary_tol),
        _worst("corridor band", ((check_corridor(b).max_entry, {"theta": b.theta}) for b in blocks), corridor_tol),
        _worst("channel flux", ((abs(channel_amplitudes(c, b.theta, 0, p, block=b).flux - 1.0),
                                 {"theta": b.theta, "chirality": p}) for b in blocks[:2] for p in range(4)), tol),
    ]

    def radiation():
        from .smatrix import scattered_wave

        for b in blocks[:2]:
            phi = BoundaryVector(b.theta, rng.normal(size=(4, 2 * n0 + 1)) + 0j)
            sw = scattered_wave(c, phi, b)
            yield radiation_residual(sw.direct, b.theta, "-", n0 + 2, window=n0 + 12).sup, {"theta": b.theta}
    checks.append(_worst("outgoing radiation condition", radiation(), 1e-12))
    return checks


SUITES: dict[str, Callable] = {
    "kernels": _kernels,
    "resolvents": _resolvents,
    "eigen": _eigen,
    "smatrix": _smatrix,
}


def run_checks(suite: str, c: CoinField, thetas, L: int, seed: int = 0, tol: float = 1e-10) -> SuiteResult:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
    rng = np.random.default_rng(seed)
    return SuiteResult(suite, SUITES[suite](c, list(thetas), L, rng, tol))


def run_suite(suite: str, c: CoinField, thetas, L: int, seed: int = 0, tol: float = 1e-10) -> list[SuiteResult]:
    names = list(SUITES) if suite == "all" else [suite]
    return [run_checks(n, c, thetas, L, seed, tol) for n in names]
