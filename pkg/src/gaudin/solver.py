"""Eigenstate search via the quadratic on-level equations.

Eigenstates in the sector with M up spins are encoded by N real numbers
Λ(ε_j) obeying the coupled quadratic system

    Λ_j² = Σ_{i≠j} (Λ_j - Λ_i)/(ε_j - ε_i) ± (2/g) Λ_j,

the + sign on the down-vacuum (λ) axis and - on the up-vacuum (μ) axis.
Working with Λ instead of rapidities keeps everything real: complex
conjugate rapidity pairs are invisible at this level, so plain real
Newton iteration applies.

Solutions are labeled by their g → 0 limit, where each eigenstate
collapses onto a product state with up spins on a definite set of
levels.  A geometric ladder in g carries that seed adiabatically to the
target coupling; the Newton step at each rung uses the analytic
Jacobian, and failed rungs are retried with geometrically halved steps.
"""

from __future__ import annotations

import json
import os
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import NoConvergence, NotAnEigenstate
from .model import (Axis, BasisOccupation, GaudinModel, pair_inverse_matrix)

DUPLICATE_DISTANCE = 1e-6  # inf-norm separation below which states collide

# Reject a continuation rung whose Newton correction exceeds this
# fraction of the state scale: large corrections mean the predictor may
# have strayed into a neighboring branch's basin (solutions of adjacent
# labels pass close to each other at avoided crossings in g).
JUMP_GUARD = 0.02


@dataclass(frozen=True)
class LambdaState:
    """On-level variables Λ(ε_i) of one state, with axis tag and sector."""

    values: np.ndarray
    axis: Axis
    sector_m: int
    g: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ContinuationConfig:
    """Knobs of the g-ladder continuation."""

    g_start: float | None = None      # None: 1e-3 * smallest level spacing
    step_factor: float = 1.5
    newton_tol: float = 1e-12
    max_newton_iters: int = 50
    max_backtracks: int = 30

    def __post_init__(self):
        if not (1.0 < self.step_factor <= 2.0):
            raise ValueError("step_factor must lie in (1, 2]")
        if not (1e-14 <= self.newton_tol <= 1e-6):
            raise ValueError("newton_tol must lie in [1e-14, 1e-6]")


def _axis_sign(axis: Axis) -> float:
    return 1.0 if axis is Axis.LAMBDA else -1.0


def _residual(v, c, s, g, sigma):
    # residual_j = Λ_j² - [Λ_j s_j - (CΛ)_j] - σ (2/g) Λ_j
    return v * v - v * s + c @ v - sigma * (2.0 / g) * v


def _jacobian(v, c, s, g, sigma):
    jac = c.copy()
    jac[np.diag_indices_from(jac)] = 2.0 * v - s - sigma * 2.0 / g
    return jac


def _residual_scale(v, g):
    vmax = float(np.abs(v).max(initial=0.0))
    return 1.0 + vmax * vmax + 2.0 * vmax / abs(g)


def quadratic_residual(model: GaudinModel, lam: LambdaState) -> np.ndarray:
    """Componentwise defect of the quadratic system at the state's own g."""
    v = np.asarray(lam.values, dtype=float)
    if v.size != model.num_spins:
        raise ValueError("state not defined on all N levels")
    c = pair_inverse_matrix(model.epsilons)
    return _residual(v, c, c.sum(axis=1), lam.g, _axis_sign(lam.axis))


def quadratic_jacobian(model: GaudinModel, lam: LambdaState) -> np.ndarray:
    """Analytic Jacobian d residual_j / d Λ_k at the given point."""
    c = pair_inverse_matrix(model.epsilons)
    return _jacobian(np.asarray(lam.values, dtype=float), c, c.sum(axis=1),
                     lam.g, _axis_sign(lam.axis))


def _seed_values(model: GaudinModel, occ: BasisOccupation, g_small: float):
    """Weak-coupling asymptotics: rapidities sit at ε_k - g/2 on occupied levels."""
    eps = model.epsilons
    v = np.zeros(model.num_spins)
    occ_list = list(occ.up_sites)
    for j in range(model.num_spins):
        for k in occ_list:
            if k != j:
                v[j] += 1.0 / (eps[j] - eps[k])
    for k in occ_list:
        v[k] += 2.0 / g_small
    return v


def seed_state(model: GaudinModel, occ: BasisOccupation,
               g_small: float) -> LambdaState:
    """Down-vacuum-axis Newton seed at a small coupling g_small."""
    occ.validate(model.num_spins)
    return LambdaState(_seed_values(model, occ, g_small), Axis.LAMBDA,
                       len(occ), g_small)


def _sum_zero_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the hyperplane Σ_j v_j = 0 (n-1 columns)."""
    qfull, _ = np.linalg.qr(np.ones((n, 1)), mode="complete")
    return qfull[:, 1:]


def _newton(v0, c, s, g, sigma, m_exc, qbasis, newton_tol, max_iters):
    """Newton iteration constrained to the exact sum rule Σ Λ = σ 2M/g.

    Returns (values, residual_inf, converged).  The constraint is an
    identity on every sector-M solution at every coupling, and it is
    load-bearing: solutions from adjacent sectors merge in the
    strong-coupling limit (avoided only in Σ), so the unconstrained
    Jacobian degenerates there while the restriction to the hyperplane
    stays well conditioned.  Steps solve the N×(N-1) least-squares
    system J Q δy = -F with the analytic Jacobian.  After reaching the
    scaled tolerance a few extra steps grind the residual down to the
    rounding floor.
    """
    target = sigma * 2.0 * m_exc / g
    v = np.array(v0, dtype=float)
    v += (target - v.sum()) / v.size
    f = _residual(v, c, s, g, sigma)
    r = float(np.abs(f).max())
    best_v, best_r = v.copy(), r
    if qbasis.shape[1] == 0:  # N = 1: the constraint fixes everything
        return v, r, r <= newton_tol * _residual_scale(v, g)

    def step_from(v, f):
        jq = _jacobian(v, c, s, g, sigma) @ qbasis
        dy, *_ = np.linalg.lstsq(jq, -f, rcond=None)
        return qbasis @ dy

    for _ in range(max_iters):
        tol = newton_tol * _residual_scale(v, g)
        if r <= tol:
            for _ in range(3):
                v2 = v + step_from(v, f)
                f2 = _residual(v2, c, s, g, sigma)
                r2 = float(np.abs(f2).max())
                if not np.isfinite(r2) or r2 >= r:
                    break
                v, f, r = v2, f2, r2
            return v, r, True
        v = v + step_from(v, f)
        f = _residual(v, c, s, g, sigma)
        r = float(np.abs(f).max())
        if not np.isfinite(r):
            return best_v, best_r, False
        if r < best_r:
            best_v, best_r = v.copy(), r
    converged = best_r <= newton_tol * _residual_scale(best_v, g)
    return best_v, best_r, converged


def solve_sector(model: GaudinModel, occ: BasisOccupation,
                 cfg: ContinuationConfig | None = None) -> LambdaState:
    """Continue the g → 0 product state labeled by `occ` up to model.g.

    The homotopy parameter is |g| itself on a geometric ladder from the
    seed coupling to |model.g| (the sign of g is fixed throughout).  The
    predictor is linear in 1/g, which is exact in the weak-coupling
    regime where Λ on occupied levels behaves as 2/g.
    """
    if cfg is None:
        cfg = ContinuationConfig()
    occ.validate(model.num_spins)
    m_exc = len(occ)
    n = model.num_spins
    eps = model.epsilons
    g_target = model.g
    sign = 1.0 if g_target > 0 else -1.0
    g0 = cfg.g_start if cfg.g_start is not None else 1e-3 * model.min_spacing
    g0 = min(abs(g0), abs(g_target))

    c = pair_inverse_matrix(eps)
    s = c.sum(axis=1)
    qbasis = _sum_zero_basis(n)
    occ_mask = np.zeros(n)
    occ_mask[list(occ.up_sites)] = 1.0

    g_cur = sign * g0
    v, r, ok = _newton(_seed_values(model, occ, g_cur), c, s, g_cur, 1.0,
                       m_exc, qbasis, cfg.newton_tol, cfg.max_newton_iters)
    if not ok:
        raise NoConvergence(f"seed Newton failed at g={g_cur:g}", last_g=None)

    prev = None  # last converged (g, values) behind the current one
    remaining = deque()
    m_cur = g0
    while m_cur < abs(g_target) * (1.0 - 1e-15):
        m_cur = min(m_cur * cfg.step_factor, abs(g_target))
        remaining.append(m_cur)

    backtracks = 0
    while remaining:
        g_next = sign * remaining[0]
        x_cur, x_next = 1.0 / g_cur, 1.0 / g_next
        if prev is None:
            v_pred = v + 2.0 * (x_next - x_cur) * occ_mask
        else:
            g_prev, v_prev = prev
            t = (x_next - x_cur) / (x_cur - 1.0 / g_prev)
            v_pred = v + t * (v - v_prev)
        v_pred = v_pred + (2.0 * m_exc / g_next - v_pred.sum()) / n
        v_new, r, ok = _newton(v_pred, c, s, g_next, 1.0,
                               m_exc, qbasis, cfg.newton_tol,
                               cfg.max_newton_iters)
        if ok:
            correction = float(np.abs(v_new - v_pred).max())
            ok = correction <= JUMP_GUARD * (1.0 + float(np.abs(v).max()))
        if ok:
            prev = (g_cur, v)
            g_cur, v = g_next, v_new
            remaining.popleft()
            continue
        backtracks += 1
        if backtracks > cfg.max_backtracks:
            raise NoConvergence(
                f"Newton failed near g={g_next:g} after {backtracks} backtracks",
                last_g=g_cur)
        mid = float(np.sqrt(abs(g_cur) * abs(g_next)))
        if mid <= abs(g_cur) * (1.0 + 1e-9):
            raise NoConvergence(
                f"g-step underflow near g={g_next:g}", last_g=g_cur)
        remaining.appendleft(mid)

    # the constraint pins Σ Λ = 2M/g; any defect here is a logic error
    sum_defect = abs(v.sum() - 2.0 * m_exc / g_target)
    if sum_defect > 1e-9 * (n / abs(g_target)):
        raise NoConvergence(
            f"sum rule defect {sum_defect:.3e} at target coupling",
            last_g=g_cur)
    return LambdaState(v, Axis.LAMBDA, m_exc, g_target)


def transform_axis(model: GaudinModel, lam: LambdaState,
                   residual_tol: float = 1e-8) -> LambdaState:
    """Switch pseudo-vacuum: Λ_μ = Λ_λ - 2/g (and back with + 2/g).

    Valid only on solutions of the quadratic system, so the input
    residual is checked first.
    """
    res = quadratic_residual(model, lam)
    if np.abs(res).max() > residual_tol * _residual_scale(lam.values, lam.g):
        raise NotAnEigenstate(
            f"residual {np.abs(res).max():.3e} too large for an axis transform")
    shift = -2.0 / lam.g if lam.axis is Axis.LAMBDA else 2.0 / lam.g
    other = Axis.MU if lam.axis is Axis.LAMBDA else Axis.LAMBDA
    return LambdaState(lam.values + shift, other, lam.sector_m, lam.g)


# -- whole-spectrum driving ---------------------------------------------------


@dataclass
class SectorSolutions:
    """All solved states of selected sectors, keyed by excitation count."""

    states: dict = field(default_factory=dict)   # M -> [(occupation, state)]
    collisions: list = field(default_factory=list)

    def all_states(self):
        for m_exc in sorted(self.states):
            yield from self.states[m_exc]


def max_workers(explicit: int | None = None) -> int:
    """Worker count: explicit arg, else GAUDIN_THREADS (0 = auto), else 1."""
    if explicit is not None:
        value = explicit
    else:
        raw = os.environ.get("GAUDIN_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            value = 1
    if value == 0:
        return os.cpu_count() or 1
    return max(1, value)


def solve_all_sectors(model: GaudinModel, cfg: ContinuationConfig | None = None,
                      sectors=None, workers: int | None = None) -> SectorSolutions:
    """Solve every occupation of the requested sectors (default: all).

    Occupations are independent, so they are farmed out to a thread
    pool; results keep the deterministic lexicographic occupation order.
    Pairs of states closer than 1e-6 in inf-norm are reported as
    collisions, never merged.
    """
    if cfg is None:
        cfg = ContinuationConfig()
    n = model.num_spins
    if sectors is None:
        sectors = range(n + 1)
    jobs = []
    for m_exc in sectors:
        if not 0 <= m_exc <= n:
            raise ValueError(f"sector {m_exc} out of range for N={n}")
        jobs.extend(BasisOccupation(occ) for occ in combinations(range(n), m_exc))

    nworkers = max_workers(workers)
    if nworkers > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            solved = list(pool.map(lambda o: solve_sector(model, o, cfg), jobs))
    else:
        solved = [solve_sector(model, occ, cfg) for occ in jobs]

    result = SectorSolutions()
    for occ, state in zip(jobs, solved):
        result.states.setdefault(len(occ), []).append((occ, state))

    def find_collisions():
        found = []
        for _m_exc, pairs in result.states.items():
            for i, j in combinations(range(len(pairs)), 2):
                dist = float(np.abs(pairs[i][1].values
                                    - pairs[j][1].values).max())
                if dist < DUPLICATE_DISTANCE:
                    found.append((pairs[i][0], pairs[j][0], dist))
        return found

    # a collision means one continuation lost its branch at some rung;
    # re-solving the involved labels with a finer ladder re-separates
    # them (reported, never merged, if it does not)
    collisions = find_collisions()
    for factor in (1.2, 1.08, 1.03):
        if not collisions:
            break
        retry = {occ.up_sites for occ_a, occ_b, _d in collisions
                 for occ in (occ_a, occ_b)}
        fine = ContinuationConfig(
            g_start=cfg.g_start, step_factor=factor,
            newton_tol=cfg.newton_tol,
            max_newton_iters=cfg.max_newton_iters,
            max_backtracks=cfg.max_backtracks)
        for m_exc, pairs in result.states.items():
            for k, (occ, _state) in enumerate(pairs):
                if occ.up_sites in retry:
                    pairs[k] = (occ, solve_sector(model, occ, fine))
        collisions = find_collisions()
    result.collisions = collisions
    if result.collisions:
        warnings.warn(f"{len(result.collisions)} colliding solution pairs "
                      "(distance < 1e-6); branches likely merged")
    return result


# -- solutions file ------------------------------------------------------------


def occupation_id(occ: BasisOccupation) -> str:
    """Stable textual id: underscore-joined sites, 'e' for the vacuum."""
    return "_".join(map(str, occ.up_sites)) if occ.up_sites else "e"


def save_solutions(path, model: GaudinModel, solutions: SectorSolutions):
    records = []
    for occ, state in solutions.all_states():
        res = quadratic_residual(model, state)
        records.append({
            "occupation": list(occ.up_sites),
            "M": state.sector_m,
            "axis": state.axis.value,
            "values": [float(x) for x in state.values],
            "residual_inf": float(np.abs(res).max()),
        })
    with open(path, "w") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")


def load_solutions(path, g: float):
    """Read a solutions file back into (occupation, LambdaState) pairs."""
    with open(path) as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise ValueError("solutions file must be a JSON array")
    pairs = []
    for rec in records:
        occ = BasisOccupation(tuple(rec["occupation"]))
        axis = Axis(rec["axis"])
        state = LambdaState(np.asarray(rec["values"], dtype=float), axis,
                            int(rec["M"]), g)
        pairs.append((occ, state))
    return pairs
