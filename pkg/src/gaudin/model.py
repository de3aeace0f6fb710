"""Static problem data for a rational Gaudin magnet of N spins 1/2.

A model is a set of N pairwise-distinct level energies ε_i plus one
coupling g (an inverse magnetic field).  Every integrable Hamiltonian of
the family is a linear combination H = Σ_i η_i R_i of the N commuting
charges

    R_i = -2 S^z_i / g + Σ_{j≠i} 2 S⃗_i·S⃗_j / (ε_i - ε_j),

and the charge eigenvalues r_i on an eigenstate are affine in the
on-level variables Λ(ε_i) = Σ_k 1/(ε_i - λ_k) built from the state's
rapidities λ_k.  Both quantization axes (pseudo-vacuum all-down or
all-up) share the same charges; only the map Λ → r differs by the sign
of the 2/g term.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DuplicateEpsilon, LengthMismatch, ZeroCoupling

# Relative level-distinctness floor: below this the off-diagonal matrix
# entries 1/(eps_a - eps_b) overwhelm double precision.
DISTINCTNESS_FACTOR = 1e-10


class Axis(Enum):
    """Quantization axis tag: which product state serves as pseudo-vacuum."""

    LAMBDA = "lambda"  # all spins down
    MU = "mu"          # all spins up


@dataclass(frozen=True)
class GaudinModel:
    """N distinct level energies and a nonzero coupling."""

    epsilons: np.ndarray
    g: float

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float)
        if eps.ndim != 1 or eps.size < 1:
            raise ValueError("epsilons must be a nonempty 1-d array")
        if not np.all(np.isfinite(eps)) or not math.isfinite(self.g):
            raise ValueError("model parameters must be finite")
        if self.g == 0.0:
            raise ZeroCoupling("g = 0 is only reachable as a continuation seed")
        span = float(eps.max() - eps.min())
        if eps.size > 1:
            gaps = np.abs(eps[:, None] - eps[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= DISTINCTNESS_FACTOR * max(span, 1e-300):
                raise DuplicateEpsilon(
                    f"levels closer than {DISTINCTNESS_FACTOR:g} * span"
                )
        eps.setflags(write=False)
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "g", float(self.g))

    @property
    def num_spins(self) -> int:
        return self.epsilons.size

    @property
    def omega(self) -> int:
        """Total 2|S| weight; equals N since every spin is 1/2."""
        return self.num_spins

    @property
    def span(self) -> float:
        if self.num_spins == 1:
            return 1.0
        return float(self.epsilons.max() - self.epsilons.min())

    @property
    def min_spacing(self) -> float:
        if self.num_spins == 1:
            return 1.0
        e = np.sort(self.epsilons)
        return float(np.diff(e).min())


@dataclass(frozen=True)
class BasisOccupation:
    """Strictly increasing site indices of the up spins of a product state."""

    up_sites: tuple

    def __post_init__(self):
        sites = tuple(int(s) for s in self.up_sites)
        if any(s < 0 for s in sites):
            raise ValueError("site indices must be nonnegative")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise ValueError("site indices must be strictly increasing")
        object.__setattr__(self, "up_sites", sites)

    def __len__(self) -> int:
        return len(self.up_sites)

    def validate(self, num_spins: int):
        if self.up_sites and self.up_sites[-1] >= num_spins:
            raise ValueError(
                f"occupation {self.up_sites} out of range for N={num_spins}"
            )

    def complement(self, num_spins: int) -> "BasisOccupation":
        occ = set(self.up_sites)
        return BasisOccupation(tuple(s for s in range(num_spins) if s not in occ))


@dataclass(frozen=True)
class ChargeEigenvalues:
    """Eigenvalues r_i of the N commuting charges on one eigenstate."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)


def new_model(epsilons, g: float) -> GaudinModel:
    """Validated model; raises DuplicateEpsilon / ZeroCoupling on bad input."""
    return GaudinModel(np.asarray(epsilons, dtype=float), g)


def pair_inverse_matrix(eps: np.ndarray) -> np.ndarray:
    """Matrix C with C[a,b] = 1/(eps_a - eps_b) off-diagonal, 0 on it."""
    eps = np.asarray(eps)
    diff = eps[:, None] - eps[None, :]
    np.fill_diagonal(diff, 1.0)
    c = 1.0 / diff
    np.fill_diagonal(c, 0.0)
    return c


def pair_sums(eps: np.ndarray) -> np.ndarray:
    """Row sums s_a = sum_{b != a} 1/(eps_a - eps_b)."""
    return pair_inverse_matrix(eps).sum(axis=1)


def charge_eigenvalues(model: GaudinModel, lam) -> ChargeEigenvalues:
    """Map on-level variables of either axis to the charge eigenvalues.

    r_i = (1/2) [ -2 Λ(ε_i) ± 2/g + Σ_{j≠i} 1/(ε_i - ε_j) ], the + sign
    for the down-vacuum axis and - for the up-vacuum axis.  Both
    representations of one eigenstate give identical r.
    """
    values = np.asarray(lam.values, dtype=float)
    if values.size != model.num_spins:
        raise LengthMismatch("state not defined on all N levels")
    sign = 1.0 if lam.axis is Axis.LAMBDA else -1.0
    s = pair_sums(model.epsilons)
    r = 0.5 * (-2.0 * values + sign * 2.0 / lam.g + s)
    return ChargeEigenvalues(r)


def hamiltonian_energy(eta, r: ChargeEigenvalues) -> float:
    """Energy Σ_i η_i r_i of H = Σ_i η_i R_i."""
    eta = np.asarray(eta, dtype=float)
    if eta.size != r.r.size:
        raise LengthMismatch(f"eta has {eta.size} entries, r has {r.r.size}")
    return float(eta @ r.r)


def _reject_constant(token):
    raise ValueError(f"non-finite JSON constant {token!r} rejected")


def load_model(path) -> GaudinModel:
    """Read {"epsilons": [...], "g": ...}; NaN/Inf tokens are rejected."""
    with open(path) as fh:
        data = json.load(fh, parse_constant=_reject_constant)
    if not isinstance(data, dict) or "epsilons" not in data or "g" not in data:
        raise ValueError("model file must be an object with 'epsilons' and 'g'")
    return new_model(data["epsilons"], float(data["g"]))


def save_model(model: GaudinModel, path):
    with open(path, "w") as fh:
        json.dump({"epsilons": list(map(float, model.epsilons)),
                   "g": model.g}, fh, indent=1)
        fh.write("\n")
