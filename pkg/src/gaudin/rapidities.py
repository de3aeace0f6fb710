"""Conversion between on-level variables and explicit rapidities.

A Bethe state is a product of creation operators B(λ_j) on the
pseudo-vacuum; the M parameters λ_j enter all on-level quantities only
through Λ(ε_i) = Σ_j 1/(ε_i - λ_j).  Going back from Λ to the λ_j means
recovering the monic polynomial P(u) = Π_j (u - λ_j) from the N linear
conditions P'(ε_i) = Λ(ε_i) P(ε_i), rooting it, and polishing the roots
on the Bethe equations

    F(λ_i) = Σ_{j≠i} 1/(λ_i - λ_j),
    F(u)   = -Σ_k (1/2)/(ε_k - u) ± 1/g     (+ on the λ axis).

Rapidities are needed only for z-projection form factors and for
cross-checks against explicit state vectors; everything else stays in
the Λ variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (CoincidingRapidities, IllConditioned, InconsistentSector,
                     NonRealLambda, PoleEvaluation, PolishDiverged,
                     RapidityOnLevel)
from .model import Axis, GaudinModel
from .solver import LambdaState

IMAG_TOL = 1e-8
ON_LEVEL_TOL = 1e-12
SECTOR_INT_TOL = 1e-6


@dataclass(frozen=True)
class RapiditySet:
    """M complex rapidities with their quantization-axis tag."""

    values: np.ndarray
    axis: Axis

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _check_off_levels(model: GaudinModel, raps: np.ndarray):
    if raps.size == 0:
        return
    dist = np.abs(raps[:, None] - model.epsilons[None, :])
    if dist.min() <= ON_LEVEL_TOL * model.span:
        raise RapidityOnLevel("a rapidity sits on a level energy")


def lowest_weight_function(model: GaudinModel, axis: Axis, u):
    """Vacuum eigenvalue F(u) of the z-component field, per axis."""
    sign = 1.0 if axis is Axis.LAMBDA else -1.0
    return -0.5 * np.sum(1.0 / (model.epsilons - np.asarray(u)[..., None]),
                         axis=-1) + sign / model.g


def lambda_from_rapidities(model: GaudinModel, rap: RapiditySet) -> LambdaState:
    """Λ(ε_i) = Σ_j 1/(ε_i - λ_j), checked real and returned as a state.

    The imaginary parts must cancel (conjugate-closed rapidity sets);
    anything above threshold raises NonRealLambda.
    """
    raps = rap.values
    _check_off_levels(model, raps)
    if raps.size:
        lam = np.sum(1.0 / (model.epsilons[:, None] - raps[None, :]), axis=1)
    else:
        lam = np.zeros(model.num_spins, dtype=complex)
    scale = max(1.0, float(np.abs(lam.real).max(initial=0.0)))
    if np.abs(lam.imag).max(initial=0.0) > IMAG_TOL * scale:
        raise NonRealLambda(
            f"imaginary residue {np.abs(lam.imag).max():.3e} above threshold")
    m_exc = raps.size if rap.axis is Axis.LAMBDA else model.num_spins - raps.size
    return LambdaState(lam.real, rap.axis, m_exc, model.g)


def bethe_residuals(model: GaudinModel, rap: RapiditySet) -> np.ndarray:
    """Defect F(λ_i) - Σ_{j≠i} 1/(λ_i - λ_j) per rapidity."""
    raps = rap.values
    if raps.size == 0:
        return np.zeros(0, dtype=complex)
    sep = np.abs(raps[:, None] - raps[None, :])
    np.fill_diagonal(sep, np.inf)
    if sep.min() <= 1e-10 * model.span:
        raise CoincidingRapidities("rapidities closer than 1e-10 * span")
    f = lowest_weight_function(model, rap.axis, raps)
    diff = raps[:, None] - raps[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    return f - inv.sum(axis=1)


def _infer_count(model: GaudinModel, lam: LambdaState) -> int:
    """Rapidity count from the sum rule Σ Λ = ±2 M_rap / g."""
    sign = 1.0 if lam.axis is Axis.LAMBDA else -1.0
    m_raw = sign * lam.g * float(np.sum(lam.values)) / 2.0
    m_int = round(m_raw)
    if abs(m_raw - m_int) > SECTOR_INT_TOL or not 0 <= m_int <= model.num_spins:
        raise InconsistentSector(
            f"sum rule gives non-integer rapidity count {m_raw:.8f}")
    return m_int


def extract_rapidities(model: GaudinModel, lam: LambdaState,
                       polish_sweeps: int = 5) -> RapiditySet:
    """Recover the rapidities of a solved state from its Λ values.

    The monic root polynomial is reconstructed in a monomial basis
    shifted and scaled so the levels fall in [-1, 1] (conditioning), its
    non-leading coefficients solved by linear least squares, its roots
    taken from the companion matrix, and each root polished by Newton
    sweeps on the Bethe residual (Jacobi updates, so conjugate pairs
    stay paired).
    """
    m_count = _infer_count(model, lam)
    if m_count == 0:
        return RapiditySet(np.zeros(0, dtype=complex), lam.axis)

    eps = model.epsilons
    lo, hi = float(eps.min()), float(eps.max())
    alpha = 0.5 * (hi - lo) if hi > lo else 1.0
    beta = 0.5 * (hi + lo)
    t = (eps - beta) / alpha
    lam_scaled = alpha * np.asarray(lam.values, dtype=float)

    # rows: Σ_k c_k (k t^{k-1} - Λ̃ t^k) = Λ̃ t^M - M t^{M-1}
    powers = t[:, None] ** np.arange(m_count + 1)[None, :]
    dpowers = np.zeros_like(powers)
    dpowers[:, 1:] = powers[:, :-1] * np.arange(1, m_count + 1)[None, :]
    design = dpowers[:, :m_count] - lam_scaled[:, None] * powers[:, :m_count]
    rhs = lam_scaled * powers[:, m_count] - dpowers[:, m_count]
    coeffs, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    misfit = float(np.abs(design @ coeffs - rhs).max())
    if misfit > 1e-6 * max(1.0, float(np.abs(rhs).max())):
        raise IllConditioned(f"polynomial fit misfit {misfit:.3e}")

    roots_t = np.roots(np.concatenate(([1.0], coeffs[::-1])))
    raps = alpha * roots_t + beta

    # Newton polish on the full coupled Bethe system; the simultaneous
    # update keeps conjugate pairs paired and converges quadratically
    # where one-root-at-a-time sweeps can stall on close pairs
    for _ in range(polish_sweeps):
        diff = raps[:, None] - raps[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        f = lowest_weight_function(model, lam.axis, raps) - inv.sum(axis=1)
        inv2 = inv ** 2
        jac = -inv2
        jac[np.diag_indices_from(jac)] = (
            -0.5 * np.sum(1.0 / (eps[None, :] - raps[:, None]) ** 2, axis=1)
            + inv2.sum(axis=1))
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise PolishDiverged("singular Bethe Jacobian while polishing") \
                from exc
        if not np.all(np.isfinite(step)):
            raise PolishDiverged("non-finite Newton step while polishing roots")
        if np.abs(step).max() > model.span + abs(model.g):
            raise PolishDiverged(f"root step {np.abs(step).max():.3e} diverged")
        raps = raps - step
        if np.abs(step).max() < 1e-14 * max(1.0, np.abs(raps).max()):
            break
    return RapiditySet(raps, lam.axis)


def tau_eigenvalue(model: GaudinModel, rap: RapiditySet, u: complex) -> complex:
    """Transfer-matrix eigenvalue at spectral parameter u.

    τ(u) = F(u)² - F'(u) - 2 Σ_i F(u)/(u-λ_i)
         + Σ_i (1/(u-λ_i)) Σ_{j≠i} 1/(u-λ_j).
    """
    u = complex(u)
    eps = model.epsilons
    raps = rap.values
    guard = 1e-12 * model.span
    if np.abs(u - eps).min(initial=np.inf) <= guard:
        raise PoleEvaluation("u coincides with a level energy")
    if raps.size and np.abs(u - raps).min() <= guard:
        raise PoleEvaluation("u coincides with a rapidity")
    f = complex(lowest_weight_function(model, rap.axis, u))
    fprime = -0.5 * np.sum(1.0 / (eps - u) ** 2)
    if raps.size == 0:
        return f * f - fprime
    inv = 1.0 / (u - raps)
    total = inv.sum()
    return f * f - fprime - 2.0 * f * total + total ** 2 - (inv ** 2).sum()


def save_rapidities(path, rap: RapiditySet):
    """JSON array of [re, im] pairs."""
    with open(path, "w") as fh:
        json.dump([[float(z.real), float(z.imag)] for z in rap.values], fh)
        fh.write("\n")


def load_rapidities(path, axis: Axis = Axis.LAMBDA) -> RapiditySet:
    with open(path) as fh:
        pairs = json.load(fh)
    values = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return RapiditySet(values, axis)
