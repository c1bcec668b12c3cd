"""Verification pipelines: fixed-point solving, common-core checks,
homotopy admissibility certificates and the duality verdicts.

Each verdict compares two degree computations: the function-space side,
evaluated by certifying a homotopy chain down to a conjugate operator with
a finite-rank reduction witness, and the finite side, evaluated directly
by a Brouwer engine.  All boundary sampling uses a fixed seed so pipelines
are deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from . import degree as deg_mod
from . import flows, gridfn, operators
from .degree import DegreeResult, DomainSpec, box_domain, brouwer_1d, \
    brouwer_nd_regular, fd_jacobian, finite_rank_reduce
from .gridfn import Grid, GridFunction, constant
from .operators import C1Function, OperatorHandle

DEFAULT_SEED = 0x4B52
FINITE_FP_TOL = 1e-8
GRID_FP_TOL = 5e-5


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map; RD_THREADS > 1 enables a thread pool."""
    try:
        workers = int(os.environ.get("RD_THREADS", "1"))
    except ValueError:
        workers = 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# ---------------------------------------------------------------------------
# Domains in the discretized function space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionBall:
    """Sup-norm ball in the discretized function space (center 0 if None)."""

    radius: float
    center: object = None

    def clearance(self, x) -> float:
        if self.center is None:
            nrm = x.sup_norm()
        else:
            nrm = operators.sup_distance(x, self.center)
        return self.radius - nrm


# ---------------------------------------------------------------------------
# Flatten / unflatten between handle spaces and vectors
# ---------------------------------------------------------------------------

def _flatten(x) -> np.ndarray:
    if isinstance(x, GridFunction):
        return x.values.ravel().copy()
    if isinstance(x, C1Function):
        return np.concatenate([x.values.values.ravel(), x.deriv0])
    return np.atleast_1d(np.asarray(x, dtype=float))


def _unflattener(h: OperatorHandle):
    problem = h.problem
    if h.space == operators.GRID_SPACE:
        grid = problem.grid()
        n = problem.field().dim
        return lambda v: GridFunction(grid, v.reshape(grid.m + 1, n))
    if h.space == operators.C1_SPACE:
        grid = problem.grid()
        n = problem.field().dim
        return lambda v: C1Function(
            GridFunction(grid, v[:-n].reshape(grid.m + 1, n)), v[-n:])
    return lambda v: v


# ---------------------------------------------------------------------------
# Fixed points
# ---------------------------------------------------------------------------

def find_fixed_points(h: OperatorHandle, domain, seeds=None,
                      tol: float | None = None) -> list:
    """Fixed points of the operator inside the domain.

    Finite handles: multistart Newton on x - h(x).  Grid-space handles:
    damped Picard then Newton on the flattened discrete residual.  Returns
    clustered points; an empty list when nothing converges.
    """
    if h.space == operators.FINITE_SPACE:
        tol = FINITE_FP_TOL if tol is None else tol
        g = lambda v: np.atleast_1d(v) - np.atleast_1d(
            np.asarray(h.apply_fn(np.atleast_1d(v)), dtype=float))
        dom = domain if isinstance(domain, DomainSpec) else box_domain(domain)
        b = dom.as_box()
        if seeds is None:
            k = b.shape[0]
            if k <= 4:
                seeds = np.vstack([deg_mod._lattice_seeds(b, 3),
                                   np.mean(b, axis=1)[None, :]])
            else:
                seeds = np.mean(b, axis=1)[None, :]
        found = []
        for s in seeds:
            z, ok = deg_mod._newton(g, np.asarray(s, dtype=float), tol)
            if ok and dom.contains(z) and all(
                    np.max(np.abs(z - z0)) > 10 * tol for z0 in found):
                found.append(z)
        return found

    tol = GRID_FP_TOL if tol is None else tol
    unflat = _unflattener(h)

    def res(v):
        try:
            return v - _flatten(h.apply_fn(unflat(v)))
        except (flows.IntegrationError, ValueError):
            return np.full_like(v, np.inf)
    if seeds is None:
        n = h.problem.field().dim
        grid = h.problem.grid()
        base = constant(grid, np.zeros(n))
        seeds = [base if h.space == operators.GRID_SPACE
                 else C1Function(base, np.zeros(n))]
    found = []
    for seed in seeds:
        v = _flatten(seed)
        # damped Picard to get into the Newton basin
        for _ in range(200):
            r = res(v)
            if np.max(np.abs(r)) < 1e-3:
                break
            v = v - 0.5 * r
            if not np.all(np.isfinite(v)):
                break
        if not np.all(np.isfinite(v)):
            continue
        v, ok = _newton_flat(res, v, 1e-10)
        if not ok or np.max(np.abs(res(v))) > tol:
            continue
        x = unflat(v)
        if isinstance(domain, FunctionBall) and domain.clearance(x) <= 0:
            continue
        if all(operators.sup_distance(x, x0) > 100 * tol for x0 in found):
            found.append(x)
    return found


def _newton_flat(res: Callable, v0: np.ndarray, tol: float,
                 max_iter: int = 30) -> tuple[np.ndarray, bool]:
    """Dense finite-difference Newton on a flattened residual."""
    v = v0.copy()
    r = res(v)
    for _ in range(max_iter):
        nrm = np.max(np.abs(r))
        if nrm <= tol:
            return v, True
        N = v.size
        jac = np.empty((N, N))
        for i in range(N):
            hstep = 1e-6 * (1.0 + abs(v[i]))
            e = np.zeros(N)
            e[i] = hstep
            jac[:, i] = (res(v + e) - res(v - e)) / (2 * hstep)
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            return v, False
        s = 1.0
        for _ in range(8):
            vn = v - s * step
            rn = res(vn)
            if np.all(np.isfinite(rn)) and np.max(np.abs(rn)) < nrm:
                v, r = vn, rn
                break
            s *= 0.5
        else:
            return v, False
    return v, bool(np.max(np.abs(r)) <= tol)


# ---------------------------------------------------------------------------
# Common core
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommonCoreReport:
    boundary_clearances: tuple
    matched_pairs: tuple
    verdict: bool
    diagnostics: tuple = ()


def _finite_handle(problem) -> OperatorHandle:
    if problem.kind in operators.PERIODIC_KINDS:
        return operators.build_finite("K2", problem)
    if problem.kind == "dirichlet_bvp":
        return operators.build_finite("Kdir2", problem)
    if problem.kind == "periodic_dde":
        return operators.build_finite(
            "Kdelay2", problem, {"history_nodes": problem.history_nodes()})
    raise ValueError(f"no finite side for problem kind {problem.kind!r}")


def _grid_representative(problem, v: np.ndarray):
    """alpha_1 of the solution with finite representative v."""
    f = problem.field()
    grid = problem.grid()
    if problem.kind in operators.PERIODIC_KINDS:
        return flows.mu_periodic(f, v, m=grid.m)
    if problem.kind == "dirichlet_bvp":
        n = f.dim
        sol = flows.mu_dirichlet(f, v[:n], v[n:], m=grid.m)
        return C1Function(sol.x, v[:n])
    if problem.kind == "periodic_dde":
        kernel = problem.kernel()
        v = np.atleast_1d(np.asarray(v, dtype=float))
        nodes = v.size // f.dim
        hg = Grid(-kernel.tau, 0.0, nodes - 1)
        hist = GridFunction(hg, v.reshape(nodes, f.dim))
        return flows.dde_flow(f, hist, f.period)
    raise ValueError(problem.kind)


def _finite_clearance(v: np.ndarray, dom: DomainSpec) -> float:
    b = dom.as_box()
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(np.min(np.minimum(v - b[:, 0], b[:, 1] - v)))


def check_common_core(problem, U1: FunctionBall, U2: DomainSpec,
                      eps: float = 1e-3) -> CommonCoreReport:
    """Verify that the two domains isolate the same solution set.

    Finds the finite-side fixed points, maps each solution through both
    representations, and checks boundary clearance on both sides.  A
    near-singular linearization at a fixed point flags the degenerate
    (non-isolated) case and the verdict is false with a diagnostic.
    """
    fin = _finite_handle(problem)
    fps = find_fixed_points(fin, U2)
    diagnostics: list[str] = []
    if not fps:
        return CommonCoreReport((0.0, 0.0), (), False,
                                ("no fixed points found in U2",))

    g = lambda v: v - np.asarray(fin.apply_fn(v), dtype=float)
    pairs = []
    clear1 = np.inf
    clear2 = np.inf
    verdict = True
    for v in fps:
        det = float(np.linalg.det(fd_jacobian(g, v)))
        if abs(det) < 1e-8:
            diagnostics.append("degenerate: non-isolated fixed points")
            verdict = False
        traj = _grid_representative(problem, v)
        c1 = U1.clearance(traj)
        c2 = _finite_clearance(v, U2)
        clear1 = min(clear1, c1)
        clear2 = min(clear2, c2)
        pairs.append({"finite": tuple(np.atleast_1d(v)),
                      "grid_sup_norm": traj.sup_norm(),
                      "in_U1": c1 > 0, "in_U2": c2 > 0})
        if c1 <= 0 or c2 <= 0:
            verdict = False
    if min(clear1, clear2) < eps:
        verdict = False
        diagnostics.append(
            f"boundary clearance {min(clear1, clear2):.3e} below eps={eps:.1e}")
    return CommonCoreReport((float(clear1), float(clear2)), tuple(pairs),
                            verdict, tuple(diagnostics))


# ---------------------------------------------------------------------------
# Homotopy admissibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomotopyCertificate:
    pair: tuple
    lambda_grid: tuple
    min_residual: float
    refinements: int
    admissible: bool
    stable: bool = True
    residual_curve: tuple = ()  # per-lambda boundary minimum, finest level


def admissibility_eps(problem, factor: float = 10.0) -> float:
    """10x the estimated operator-application error (trapezoid, order h^2)."""
    return factor * problem.grid().h ** 2


def _random_directions(problem, count: int, seed: int, vanish_at_end: bool):
    """Smooth random unit-sup-norm grid functions, optionally zero at t=T."""
    grid = problem.grid()
    n = problem.field().dim
    T = grid.length
    t = grid.nodes[:, None]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        vals = np.zeros((grid.m + 1, n))
        for j in range(1, 4):
            a = rng.standard_normal(n)
            b = rng.standard_normal(n)
            vals += a * np.cos(2 * np.pi * j * (t - grid.a) / T) \
                + b * np.sin(2 * np.pi * j * (t - grid.a) / T)
        vals += rng.standard_normal(n)
        if vanish_at_end:
            vals = vals * np.sin(np.pi * (t - grid.a) / T)
        nrm = np.max(np.abs(vals))
        if nrm == 0:
            continue
        out.append(GridFunction(grid, vals / nrm))
    return out


def _pullback_boundary_samples(problem, dom: DomainSpec, count: int, seed: int):
    """Boundary of pi^{-1}(U) cap B(0, r): lifted finite-boundary points with
    tangential bumps, plus norm-r shell points."""
    inverse_kind = dom.projector
    U = dom.finite
    r = dom.r
    b = U.as_box()
    k = b.shape[0]
    per = max(2, min(int(round(count ** (1.0 / max(k - 1, 1)))), 24))
    finite_bdry = deg_mod._boundary_lattice(b, per)
    interior = deg_mod._lattice_seeds(b, 2)
    # fixed bump pool across refinement levels: refining only refines the
    # finite-boundary lattice, so the boundary minimum is stable
    bumps = _random_directions(problem, 8, seed, vanish_at_end=True)

    samples = []
    for u in finite_bdry:
        base = operators.i_map(inverse_kind, u, problem)
        samples.append(base)
        room = r - base.sup_norm()
        if room > 0:
            for w in bumps[:4]:
                samples.append(base + 0.5 * room * w)
    # shell part: scale a bump until the sup norm hits r
    for u in interior:
        base = operators.i_map(inverse_kind, u, problem)
        if base.sup_norm() >= r:
            continue
        for w in bumps[4:6]:
            lo, hi = 0.0, r + base.sup_norm() + 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if (base + mid * w).sup_norm() < r:
                    lo = mid
                else:
                    hi = mid
            samples.append(base + hi * w)
    return samples


def _domain_boundary_samples(hA: OperatorHandle, dom, count: int, seed: int):
    problem = hA.problem
    if isinstance(dom, FunctionBall):
        dirs = _random_directions(problem, count, seed, vanish_at_end=False)
        n = problem.field().dim
        grid = problem.grid()
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            dirs += [constant(grid, e), constant(grid, -e)]
        center = dom.center
        out = []
        for d in dirs:
            x = dom.radius * d if center is None else center + dom.radius * d
            if hA.space == operators.C1_SPACE:
                x = C1Function(x, np.zeros(n))
            out.append(x)
        return out
    if isinstance(dom, DomainSpec) and dom.kind == "pullback":
        return _pullback_boundary_samples(problem, dom, count, seed)
    if isinstance(dom, DomainSpec):
        b = dom.as_box()
        per = max(2, int(round(count ** (1.0 / max(b.shape[0] - 1, 1)))))
        return list(deg_mod._boundary_lattice(b, per))
    raise ValueError(f"unsupported homotopy domain {dom!r}")


def certify_homotopy(hA: OperatorHandle, hB: OperatorHandle, domain,
                     lambda_steps: int = 9, boundary_samples: int = 16,
                     eps: float | None = None, seed: int = DEFAULT_SEED,
                     max_doublings: int = 4) -> HomotopyCertificate:
    """Empirical admissibility of H_lam = lam*A + (1-lam)*B over the domain.

    Doubles the lambda grid and the boundary sampling until the minimum
    boundary residual stabilizes (< 20% change) after at least two
    doublings; admissible iff the stable minimum clears eps.
    """
    if hA.space != hB.space:
        raise ValueError("homotopy endpoints live in different spaces")
    if eps is None:
        eps = admissibility_eps(hA.problem) if hA.problem is not None else 1e-4

    def level_eval(n_lam: int, n_samp: int, level: int):
        lams = np.linspace(0.0, 1.0, n_lam)
        samples = _domain_boundary_samples(hA, domain, n_samp, seed)

        def eval_point(x):
            a = hA.apply_fn(x)
            b = hB.apply_fn(x)
            # x - H_lam(x) = (x - b) + lam (b - a), componentwise
            if isinstance(a, GridFunction):
                pieces = [(x.values - b.values, b.values - a.values)]
            elif isinstance(a, C1Function):
                pieces = [(x.values.values - b.values.values,
                           b.values.values - a.values.values),
                          (x.deriv0 - b.deriv0, b.deriv0 - a.deriv0)]
            else:
                xa = np.atleast_1d(np.asarray(x, dtype=float))
                av = np.atleast_1d(np.asarray(a, dtype=float))
                bv = np.atleast_1d(np.asarray(b, dtype=float))
                pieces = [(xa - bv, bv - av)]
            out = np.zeros(n_lam)
            for base, delta in pieces:
                flat_b = base.ravel()
                flat_d = delta.ravel()
                res = np.abs(flat_b[None, :] + lams[:, None] * flat_d[None, :])
                out = np.maximum(out, res.max(axis=1))
            return out

        vals = parallel_map(eval_point, samples)
        if not vals:
            return np.inf, lams, np.full(n_lam, np.inf)
        curve = np.min(np.asarray(vals), axis=0)
        return float(np.min(curve)), lams, curve

    n_lam, n_samp = lambda_steps, boundary_samples
    best, lams, curve = level_eval(n_lam, n_samp, 0)
    history = [best]
    stable = False
    for level in range(1, max_doublings + 1):
        n_lam = 2 * n_lam - 1
        n_samp *= 2
        new, lams, curve = level_eval(n_lam, n_samp, level)
        history.append(min(history[-1], new))
        if level >= 2 and history[-2] > 0 and \
                abs(history[-1] - history[-2]) < 0.2 * history[-2]:
            stable = True
            break
    min_res = history[-1]
    admissible = stable and min_res >= eps
    return HomotopyCertificate(pair=(hA.name, hB.name),
                               lambda_grid=tuple(lams),
                               min_residual=min_res,
                               refinements=len(history) - 1,
                               admissible=admissible, stable=stable,
                               residual_curve=tuple(curve))


# ---------------------------------------------------------------------------
# Duality verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualityReport:
    name: str
    left: DegreeResult
    right: DegreeResult
    equal: bool
    route: str
    certificates: tuple = ()
    sign_factor: int = 1
    common_core: CommonCoreReport | None = None
    params: dict = dc_field(default_factory=dict)

    @property
    def conclusive(self) -> bool:
        return self.left.certified and self.right.certified


def default_pullback(problem, U2: DomainSpec, r: float | None = None) -> DomainSpec:
    kind = {"periodic_ode": "periodic", "nonlocal_1d": "periodic",
            "dirichlet_bvp": "dirichlet", "periodic_dde": "delay"}[problem.kind]
    if r is None:
        b = U2.as_box()
        r = 2.0 * (float(np.max(np.abs(b))) + 1.0)
    return deg_mod.pullback_domain(kind, U2, r)


def _right_degree(problem, U2: DomainSpec, finite: OperatorHandle,
                  seeds=None) -> DegreeResult:
    g = lambda v: np.atleast_1d(v) - np.atleast_1d(
        np.asarray(finite.apply_fn(np.atleast_1d(v)), dtype=float))
    if U2.dim == 1:
        return brouwer_1d(lambda t: g(np.array([t]))[0], U2.as_box()[0])
    return brouwer_nd_regular(g, U2, seeds=seeds)


def verify_duality(problem, pair: str, U1: FunctionBall | None = None,
                   U2: DomainSpec | None = None, eta: float | None = None,
                   skip_common_core: bool = False,
                   seed: int = DEFAULT_SEED) -> DualityReport:
    """Run one named duality instance and compare both degrees.

    pair in {"krasnoselskii", "eta_sign", "inverse_poincare",
    "dirichlet_shooting", "delay", "nonlocal_signs"}.
    """
    if U2 is None:
        U2 = problem.default_U2()
    if U1 is None:
        U1 = problem.default_U1()

    core = None
    if not skip_common_core and pair in ("krasnoselskii", "eta_sign", "delay",
                                         "dirichlet_shooting"):
        core = check_common_core(problem, U1, U2)

    if pair == "krasnoselskii":
        return _verify_krasnoselskii(problem, U1, U2, core, seed)
    if pair == "eta_sign":
        if eta is None:
            raise ValueError("eta_sign pair needs eta")
        return _verify_eta_sign(problem, U1, U2, eta, core, seed)
    if pair == "inverse_poincare":
        return _verify_inverse_poincare(problem, U2)
    if pair == "dirichlet_shooting":
        return _verify_dirichlet(problem, U2, core)
    if pair == "delay":
        return _verify_delay(problem, U1, U2, core, seed)
    if pair == "nonlocal_signs":
        if eta is None:
            raise ValueError("nonlocal_signs pair needs eta")
        return _verify_nonlocal_signs(problem, eta)
    raise ValueError(f"unknown duality pair {pair!r}")


def _verify_krasnoselskii(problem, U1, U2, core, seed=DEFAULT_SEED) -> DualityReport:
    k_op = operators.build("K", problem)
    k1_op = operators.build("K1", problem)
    ktilde = operators.build("Ktilde", problem)
    vr = default_pullback(problem, U2)
    certs = (certify_homotopy(k_op, k1_op, vr, seed=seed),
             certify_homotopy(k1_op, ktilde, vr, seed=seed))
    left = finite_rank_reduce(ktilde, U2, r=vr.r)
    right = _right_degree(problem, U2, operators.build_finite("K2", problem))
    equal = (left.degree == right.degree and left.certified and right.certified
             and all(c.admissible for c in certs)
             and (core is None or core.verdict))
    return DualityReport("krasnoselskii", left, right, equal,
                         route="homotopy_chain", certificates=certs,
                         common_core=core)


def _verify_eta_sign(problem, U1, U2, eta: float, core,
                     seed=DEFAULT_SEED) -> DualityReport:
    n = problem.field().dim
    keta = operators.build("Keta", problem, {"eta": eta})
    k3 = operators.build("K3", problem)
    ktilde = operators.build("Ktilde", problem)
    vr = default_pullback(problem, U2)
    # right side: deg(I - K3) via the paper's chain K3 ~ K4 ~ K and reduction
    k4 = operators.build("K4", problem)
    k_op = operators.build("K", problem)
    chain = [certify_homotopy(k3, k4, vr, seed=seed),
             certify_homotopy(k4, k_op, vr, seed=seed)]
    right = finite_rank_reduce(ktilde, U2, r=vr.r)

    if eta > 0:
        chain.insert(0, certify_homotopy(keta, k3, vr, seed=seed))
        left = DegreeResult(degree=right.degree, method=right.method,
                            min_boundary_norm=right.min_boundary_norm,
                            refinement_levels=right.refinement_levels,
                            certified=right.certified, zeros=right.zeros,
                            params={"via": "chain Keta~K3~K4~K~reduction"})
    else:
        khat3 = operators.build("Khat3", problem)
        chain.insert(0, certify_homotopy(keta, khat3, vr, seed=seed))
        # hat chain bottoms out at K2hat(x0) = 2 x0 - P(x0)
        fin = operators.build_finite("K2", problem)
        k2hat = OperatorHandle(
            "K2hat", operators.FINITE_SPACE,
            lambda v: 2.0 * np.atleast_1d(v) - np.asarray(
                fin.apply_fn(np.atleast_1d(v)), dtype=float),
            problem)
        left = _right_degree(problem, U2, k2hat)
    sign = 1 if eta > 0 else (-1) ** n
    equal = (left.degree == sign * right.degree
             and left.certified and right.certified
             and all(c.admissible for c in chain)
             and (core is None or core.verdict))
    return DualityReport("eta_sign", left, right, equal,
                         route="homotopy_chain", certificates=tuple(chain),
                         sign_factor=sign, common_core=core,
                         params={"eta": eta})


def _verify_inverse_poincare(problem, U2) -> DualityReport:
    n = problem.field().dim
    fin = operators.build_finite("K2", problem)
    hatp = operators.build_finite("KhatP", problem)
    right = _right_degree(problem, U2, fin)
    # image domain P(U2): bounding box of the mapped boundary samples
    b = U2.as_box()
    bdry = deg_mod._boundary_lattice(b, 17)
    mapped = np.asarray([fin.apply_fn(p) for p in bdry])
    img = box_domain(np.stack([mapped.min(axis=0), mapped.max(axis=0)], axis=1))
    left = _right_degree(problem, img, hatp)
    sign = (-1) ** n
    equal = (left.degree == sign * right.degree
             and left.certified and right.certified)
    return DualityReport("inverse_poincare", left, right, equal,
                         route="independent", sign_factor=sign,
                         params={"image_box": img.as_box().tolist()})


def _verify_dirichlet(problem, U2, core) -> DualityReport:
    n = problem.field().dim
    ktilde = operators.build("Ktilde", problem)
    # phi(U2) is the slope block of the kernel-coordinate box
    phi_U2 = box_domain(U2.as_box()[:n])
    left = finite_rank_reduce(ktilde, phi_U2)
    right = _right_degree(problem, U2, operators.build_finite("Kdir2", problem))
    # block-Jacobian sign identity at each finite fixed point
    block_ok = True
    kdir2 = operators.build_finite("Kdir2", problem)
    gfull = lambda v: np.atleast_1d(v) - np.asarray(
        kdir2.apply_fn(np.atleast_1d(v)), dtype=float)
    shoot = lambda a: np.asarray(
        flows.shooting(problem.field(), np.atleast_1d(a), m=problem.grid().m))
    for z in right.zeros:
        z = np.asarray(z)
        for scale in (1e-5, 5e-6):
            d_full = np.sign(np.linalg.det(fd_jacobian(gfull, z, scale=scale)))
            d_shoot = np.sign(np.linalg.det(fd_jacobian(shoot, z[:n], scale=scale)))
            if d_full != d_shoot:
                block_ok = False
    equal = (left.degree == right.degree and left.certified and right.certified
             and block_ok and (core is None or core.verdict))
    return DualityReport("dirichlet_shooting", left, right, equal,
                         route="independent", common_core=core,
                         params={"block_sign_identity": block_ok})


def _verify_delay(problem, U1, U2, core, seed=DEFAULT_SEED) -> DualityReport:
    coarse = problem.with_history_nodes()
    k_op = operators.build("Kdelay", problem)
    k1_op = operators.build("Kdelay1", problem)
    ktilde = operators.build("Ktilde", coarse)
    if not isinstance(U1, FunctionBall):
        raise ValueError("delay pair needs a sup-norm ball U1")
    certs = (certify_homotopy(k_op, k1_op, U1, seed=seed),)
    left = finite_rank_reduce(ktilde, U2)
    right = _right_degree(problem, U2,
                          operators.build_finite(
                              "Kdelay2", problem,
                              {"history_nodes": problem.history_nodes()}))
    # independent sign oracle: discrete monodromy of the linearization
    mono = _delay_monodromy_sign(coarse, U2)
    equal = (left.degree == right.degree and left.certified and right.certified
             and all(c.admissible for c in certs)
             and (core is None or core.verdict))
    return DualityReport("delay", left, right, equal, route="homotopy_chain",
                         certificates=certs, common_core=core,
                         params={"monodromy_det_sign": mono})


def _delay_monodromy_sign(problem, U2) -> int:
    """sgn det(I - DP) at the history-space fixed point, finite differences."""
    fin = operators.build_finite(
        "Kdelay2", problem, {"history_nodes": problem.history_nodes()})
    fps = find_fixed_points(fin, U2)
    if not fps:
        return 0
    g = lambda v: v - np.asarray(fin.apply_fn(v), dtype=float)
    return int(np.sign(np.linalg.det(fd_jacobian(g, fps[0]))))


def _verify_nonlocal_signs(problem, eta: float) -> DualityReport:
    """d = 1 nonlocal problem: Fourier overall sign vs the averaged field."""
    n = 1
    A = problem.linearization()
    rep = deg_mod.fourier_block_signs(A, eta, n_max=16)
    left = DegreeResult(degree=rep.overall_sign, method="fourier_blocks",
                        min_boundary_norm=np.inf, refinement_levels=0,
                        certified=all(s == 1 for _, s in rep.block_signs),
                        params={"skipped": list(rep.skipped)})
    # right: Brouwer degree of the averaged field phi(u) = -T * mean f(., u)
    phi = problem.averaged_field()
    iv = problem.default_U2().as_box()[0]
    right = brouwer_1d(phi, iv)
    sign = 1 if eta > 0 else (-1) ** n
    equal = left.degree == sign * right.degree and right.certified
    return DualityReport("nonlocal_signs", left, right, equal,
                         route="independent", sign_factor=sign,
                         params={"eta": eta})
