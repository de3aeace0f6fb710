"""Determinant representations of overlaps, norms, and spin form factors.

Every quantity here is a small dense determinant built from level
energies and on-level variables Λ(ε).  The workhorse is the domain-wall
partition function: the overlap of an M-rapidity Bethe state with the
product state having up spins on levels {ε_{i_1} … ε_{i_M}},

    ⟨ε_{i_1} … ε_{i_M} | λ_1 … λ_M⟩ = Det J,
    J_aa = Σ_{c≠a} 1/(ε_{i_a} - ε_{i_c}) - Λ(ε_{i_a}),
    J_ab = 1/(ε_{i_a} - ε_{i_b}),

valid for arbitrary complex rapidities (no Bethe-equation requirement).
Mixing the two pseudo-vacuum representations turns scalar products,
norm products, and S± form factors into the same kind of determinant
over the full set of N levels.  S^z matrix elements need the explicit
rapidities and cost M reduced determinants; that sum is evaluated
term by term.

Sector selection rules are physics, not misuse: incompatible
magnetizations yield an exact 0 and an optional flag instead of an
error.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from .errors import (AxisMismatch, CoincidingRapidities, LengthMismatch,
                     NonFinite, RapiditiesRequired, SiteOutOfRange, TooLarge,
                     ZeroOverlap)
from .model import Axis, BasisOccupation, GaudinModel, pair_inverse_matrix
from .rapidities import RapiditySet, extract_rapidities
from .solver import LambdaState

PERM_SUM_MAX = 9
_PERM_CACHE = {}


def det(m) -> float | complex:
    """Determinant via pivoted LU; the empty matrix has determinant 1."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"need a square matrix, got shape {m.shape}")
    if m.size == 0:
        return 1.0
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix entries must be finite")
    return np.linalg.det(m)


def _dwbc_matrix(eps_sub: np.ndarray, lam_sub: np.ndarray) -> np.ndarray:
    c = pair_inverse_matrix(eps_sub).astype(np.result_type(lam_sub, float))
    c[np.diag_indices_from(c)] = c.sum(axis=1) - lam_sub
    return c


def partition_overlap_det(model: GaudinModel, occ: BasisOccupation,
                          lam_at_occ) -> float | complex:
    """Det J form of the domain-wall overlap, from Λ at the occupied levels."""
    occ.validate(model.num_spins)
    lam_sub = np.asarray(lam_at_occ)
    if lam_sub.shape != (len(occ),):
        raise LengthMismatch(
            f"need {len(occ)} on-level values, got shape {lam_sub.shape}")
    idx = list(occ.up_sites)
    return det(_dwbc_matrix(model.epsilons[idx], lam_sub))


def partition_overlap_perm(model: GaudinModel, occ: BasisOccupation,
                           rap: RapiditySet) -> complex:
    """Permutation-sum form Σ_P Π_i 1/(λ_i - ε_{P_i}); the M! oracle."""
    occ.validate(model.num_spins)
    m_exc = len(occ)
    if len(rap) != m_exc:
        raise LengthMismatch("rapidity count must match occupation size")
    if m_exc > PERM_SUM_MAX:
        raise TooLarge(f"permutation sum capped at M={PERM_SUM_MAX}")
    if m_exc == 0:
        return 1.0 + 0.0j
    if m_exc not in _PERM_CACHE:
        _PERM_CACHE[m_exc] = np.array(list(permutations(range(m_exc))))
    perms = _PERM_CACHE[m_exc]
    eps_occ = model.epsilons[list(occ.up_sites)]
    # factors[p, i] = 1/(λ_i - ε_{P_i}); the M! terms can cancel heavily,
    # so the final reduction is exactly rounded
    terms = np.prod(1.0 / (rap.values[None, :] - eps_occ[perms]), axis=1)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def _det_lu_extended(mat: np.ndarray) -> complex:
    """Pivoted-LU determinant in extended precision.

    The squared-Cauchy matrix of the Izergin form is exponentially
    ill-conditioned in M, so the few extra long-double digits matter.
    """
    a = mat.astype(np.clongdouble).copy()
    n = a.shape[0]
    value = np.clongdouble(1.0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0:
            return 0.0j
        if p != k:
            a[[k, p]] = a[[p, k]]
            value = -value
        value = value * a[k, k]
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    return value


def izergin_overlap(model: GaudinModel, occ: BasisOccupation,
                    rap: RapiditySet) -> complex:
    """Izergin form: double-pole determinant with a Cauchy-type prefactor.

    Degenerates for coinciding rapidities where the Det J form does not.
    """
    occ.validate(model.num_spins)
    m_exc = len(occ)
    if len(rap) != m_exc:
        raise LengthMismatch("rapidity count must match occupation size")
    if m_exc == 0:
        return 1.0 + 0.0j
    raps = rap.values
    if m_exc > 1:
        sep = np.abs(raps[:, None] - raps[None, :])
        np.fill_diagonal(sep, np.inf)
        if sep.min() <= 1e-12 * max(model.span, float(np.abs(raps).max())):
            raise CoincidingRapidities("Izergin prefactor pole: equal rapidities")
    eps_occ = model.epsilons[list(occ.up_sites)].astype(np.longdouble)
    raps_x = raps.astype(np.clongdouble)
    numer = np.clongdouble(1.0)
    for cross in (raps_x[:, None] - eps_occ[None, :]).ravel():
        numer = numer * cross
    denom = np.clongdouble(1.0)
    for i in range(m_exc):
        for j in range(i):
            denom *= raps_x[i] - raps_x[j]      # Π_{i>j} (λ_i - λ_j)
    for j in range(m_exc):
        for k in range(j + 1, m_exc):
            denom *= eps_occ[j] - eps_occ[k]    # Π_{j<k} (ε_j - ε_k)
    kmat = 1.0 / (eps_occ[None, :] - raps_x[:, None]) ** 2
    return complex(numer / denom * _det_lu_extended(kmat))


def partition_overlap_det_rapidity(model: GaudinModel, occ: BasisOccupation,
                                   rap: RapiditySet) -> complex:
    """Same overlap written on the rapidity side (ε ↔ λ exchange symmetry)."""
    occ.validate(model.num_spins)
    m_exc = len(occ)
    if len(rap) != m_exc:
        raise LengthMismatch("rapidity count must match occupation size")
    if m_exc == 0:
        return 1.0 + 0.0j
    raps = rap.values
    eps_occ = model.epsilons[list(occ.up_sites)]
    diff = raps[:, None] - raps[None, :]
    np.fill_diagonal(diff, 1.0)
    jmat = -1.0 / diff
    np.fill_diagonal(jmat, 0.0)
    diag = jmat.sum(axis=1) + np.sum(1.0 / (raps[:, None] - eps_occ[None, :]),
                                     axis=1)
    jmat[np.diag_indices_from(jmat)] = diag
    return complex(det(jmat))


def _mu_content(model, bra):
    """Normalize the bra to (μ'-type Λ values, rapidity count or None)."""
    if isinstance(bra, LambdaState):
        if bra.axis is Axis.MU:
            return np.asarray(bra.values), model.num_spins - bra.sector_m
        # eigenstate convenience form: a λ-axis bra enters as Λ^λ' - 2/g
        return np.asarray(bra.values) - 2.0 / bra.g, model.num_spins - bra.sector_m
    return np.asarray(bra), None


def _lambda_content(model, ket):
    if isinstance(ket, LambdaState):
        if ket.axis is not Axis.LAMBDA:
            raise AxisMismatch("ket must carry λ-axis content")
        return np.asarray(ket.values), ket.sector_m
    return np.asarray(ket), None


def scalar_product_det(model: GaudinModel, bra, ket, *,
                       bra_rapidity_count: int | None = None,
                       ket_rapidity_count: int | None = None,
                       with_flag: bool = False):
    """⟨μ'_1 … μ'_{N-M}| λ_1 … λ_M⟩ as one N×N determinant.

    Neither side needs to solve the Bethe equations.  `bra` is a μ-axis
    state (or raw Λ^{μ'} values); a λ-axis LambdaState bra is accepted
    as the eigenstate shortcut, entering through Λ^{λ'} - 2/g.  When the
    rapidity counts are known and do not add up to N the states carry
    different magnetization and the product is exactly 0 (flag, not
    error).
    """
    mu_vals, n_mu = _mu_content(model, bra)
    lam_vals, n_lam = _lambda_content(model, ket)
    n = model.num_spins
    if mu_vals.shape != (n,) or lam_vals.shape != (n,):
        raise LengthMismatch("bra and ket must supply Λ on all N levels")
    if bra_rapidity_count is not None:
        n_mu = bra_rapidity_count
    if ket_rapidity_count is not None:
        n_lam = ket_rapidity_count
    mismatch = (n_mu is not None and n_lam is not None
                and n_mu + n_lam != n)
    if mismatch:
        value = 0.0
    else:
        value = det(_dwbc_matrix(model.epsilons, mu_vals + lam_vals))
    return (value, mismatch) if with_flag else value


def norm_product(model: GaudinModel, lam: LambdaState,
                 mu: LambdaState) -> float:
    """Product N_μ N_λ of the two representations' norms, as Det G.

    Only the product carries meaning; the individual norms (and hence
    the overall sign convention of either representation) are not fixed
    by the Λ variables.
    """
    if lam.axis is not Axis.LAMBDA or mu.axis is not Axis.MU:
        raise AxisMismatch("need one λ-axis and one μ-axis state, in that order")
    shift = np.abs(mu.values - (lam.values - 2.0 / lam.g)).max()
    if shift > 1e-8 * max(1.0, float(np.abs(lam.values).max())):
        raise AxisMismatch("μ-state is not the axis transform of the λ-state")
    return float(det(_dwbc_matrix(model.epsilons, lam.values + mu.values)))


def splus_form_factor(model: GaudinModel, site: int, bra, ket, *,
                      with_flag: bool = False):
    """⟨μ'_1 … μ'_{N-M-1}| S⁺_site |λ_1 … λ_M⟩ between unnormalized states.

    One (N-1)×(N-1) determinant: level `site` drops out of every sum and
    of the matrix.  S⁻ elements follow by conjugation symmetry.  A bra
    whose magnetization does not sit one up-spin above the ket gives
    exactly 0 with the mismatch flag.
    """
    n = model.num_spins
    if not 0 <= site < n:
        raise SiteOutOfRange(f"site {site} outside [0, {n})")
    mu_vals, n_mu = _mu_content(model, bra)
    lam_vals, n_lam = _lambda_content(model, ket)
    if mu_vals.shape != (n,) or lam_vals.shape != (n,):
        raise LengthMismatch("bra and ket must supply Λ on all N levels")
    mismatch = (n_mu is not None and n_lam is not None
                and n_mu + n_lam != n - 1)
    if mismatch:
        value = 0.0
    else:
        keep = [a for a in range(n) if a != site]
        eps_sub = model.epsilons[keep]
        value = det(_dwbc_matrix(eps_sub, mu_vals[keep] + lam_vals[keep]))
    return (value, mismatch) if with_flag else value


def sz_form_factor(model: GaudinModel, site: int, bra, ket_rap, ket_lam=None, *,
                   with_flag: bool = False):
    """⟨μ'_1 … μ'_{N-M}| S^z_site |λ_1 … λ_M⟩ via one scalar product plus
    M raising-operator determinants.

    The ket must come with explicit rapidities: each term of the sum
    removes one λ_j, shifting the ket content to Λ(ε) - 1/(ε - λ_j).
    The cross-term coefficient is +1/(λ_j - ε_site); the opposite sign
    fails already against the one-spin matrix element ⟨↑|S^z B(λ)|↓⟩ =
    (1/2)/(λ - ε), and exact diagonalization at N = 2 confirms this one.
    """
    n = model.num_spins
    if not 0 <= site < n:
        raise SiteOutOfRange(f"site {site} outside [0, {n})")
    if not isinstance(ket_rap, RapiditySet):
        raise RapiditiesRequired(
            "S^z needs the ket's rapidities; use extract_rapidities first")
    raps = ket_rap.values
    m_exc = raps.size
    if ket_lam is None:
        if m_exc:
            ket_lam = np.sum(
                1.0 / (model.epsilons[:, None] - raps[None, :]), axis=1)
        else:
            ket_lam = np.zeros(n)
    else:
        ket_lam = np.asarray(ket_lam)
    mu_vals, n_mu = _mu_content(model, bra)
    mismatch = n_mu is not None and n_mu + m_exc != n
    if mismatch:
        return (0.0, True) if with_flag else 0.0

    value = -0.5 * scalar_product_det(model, mu_vals, ket_lam)
    for j in range(m_exc):
        reduced = ket_lam - 1.0 / (model.epsilons - raps[j])
        coeff = 1.0 / (raps[j] - model.epsilons[site])
        value = value + coeff * splus_form_factor(model, site, mu_vals, reduced)
    # conjugate-closed kets give a real result up to rounding noise
    value = complex(value)
    if abs(value.imag) <= 1e-10 * max(1.0, abs(value)):
        value = value.real
    return (value, False) if with_flag else value


def _det_scale(mat) -> float:
    """Hadamard-style magnitude scale: product of row norms."""
    norms = np.linalg.norm(np.atleast_2d(mat), axis=1)
    norms = norms[norms > 0]
    return float(np.prod(norms)) if norms.size else 1.0


def normalized_expectation(model: GaudinModel, op_kind: str, site: int,
                           lam: LambdaState, mu: LambdaState) -> float:
    """⟨O⟩ = ⟨μ…|O|λ…⟩ / ⟨μ…|λ…⟩ for one state given in both representations.

    op_kind is 'sz', 'sp' or 'sm'.  Raising/lowering operators change
    the magnetization, so on a state paired with itself they give 0.
    """
    if lam.axis is not Axis.LAMBDA or mu.axis is not Axis.MU:
        raise AxisMismatch("need one λ-axis and one μ-axis state, in that order")
    denom = scalar_product_det(model, mu, lam)
    kmat = _dwbc_matrix(model.epsilons, np.asarray(mu.values) + lam.values)
    if abs(denom) < 1e-12 * _det_scale(kmat):
        raise ZeroOverlap(f"|⟨μ|λ⟩| = {abs(denom):.3e} below scale threshold")
    if op_kind == "sz":
        raps = extract_rapidities(model, lam)
        numer = sz_form_factor(model, site, mu, raps, lam.values)
    elif op_kind == "sp":
        numer = splus_form_factor(model, site, mu, lam)
    elif op_kind == "sm":
        # ⟨μ|S⁻_i|λ⟩ = ⟨λ|S⁺_i|μ⟩ with real on-level data: same selection rule
        numer = splus_form_factor(model, site, mu, lam)
    else:
        raise ValueError(f"unknown operator kind {op_kind!r}")
    return float(numer) / float(denom)
