"""Central-spin decoherence pipeline.

One spin S⃗_0 in a field B ẑ couples to N bath spins through distinct
couplings A_j.  The map g = -1/B, ε_0 = 0, ε_j = -1/A_j renders
H = B S^z_0 + Σ_j A_j S⃗_0·S⃗_j as half of one conserved charge, so the
eigenbasis comes from the quadratic on-level equations sector by
sector.  Starting from

    |ψ(0)⟩ = α |↑_0; bath occ⟩ + β |↓_0; bath occ⟩,

the transverse coherence ⟨ψ(t)|S⁺_0|ψ(t)⟩ is a double spectral sum over
the sectors with M and M+1 up spins; each amplitude is a ratio of
domain-wall overlaps, one raising form factor, and the two norm
products.  The time series is either summed exactly or estimated by
importance sampling over table rows (probability ∝ |amplitude|,
unbiased reweighting, seeded).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .determinants import (norm_product, partition_overlap_det,
                           splus_form_factor)
from .errors import (DegenerateCouplings, DuplicateEpsilon, EmptyTable,
                     IncompleteSector, ZeroField)
from .model import (BasisOccupation, GaudinModel, charge_eigenvalues,
                    hamiltonian_energy, new_model)
from .solver import (ContinuationConfig, occupation_id, solve_all_sectors,
                     transform_axis)


@dataclass(frozen=True)
class CentralSpinParams:
    """Physical inputs: field, couplings, initial amplitudes, bath pattern."""

    field_b: float
    couplings: tuple
    alpha: complex
    beta: complex
    bath_occupation: BasisOccupation

    def __post_init__(self):
        couplings = tuple(float(a) for a in self.couplings)
        if any(a == 0.0 for a in couplings):
            raise ValueError("all couplings A_j must be nonzero")
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm} != 1")
        self.bath_occupation.validate(len(couplings))
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))

    @property
    def num_bath(self) -> int:
        return len(self.couplings)


@dataclass(frozen=True)
class FullSampling:
    """Exact double sum over every table row."""


@dataclass(frozen=True)
class MonteCarloSampling:
    """Importance sampling of rows: probability ∝ |amplitude|, reweighted.

    count >= number of rows falls back to the exact sum, so exhaustive
    sampling reproduces FullSampling for any seed.
    """

    count: int
    seed: int = 0


@dataclass
class SpectralTable:
    """Amplitudes and transition frequencies feeding the coherence sum."""

    amplitudes: np.ndarray     # complex, one entry per (n, m) pair
    frequencies: np.ndarray    # ω_n - ω_m
    upper_ids: list = field(default_factory=list)
    lower_ids: list = field(default_factory=list)
    alpha: complex = 1.0
    beta: complex = 0.0

    def __len__(self) -> int:
        return self.amplitudes.size

    def validate(self, tol: float = 1e-8):
        """Row sum must reproduce the t = 0 coherence conj(α)·β."""
        target = np.conjugate(self.alpha) * self.beta
        defect = abs(self.amplitudes.sum() - target)
        if defect > tol * max(1.0, abs(target)):
            raise ValueError(f"amplitude sum off by {defect:.3e}")
        if np.abs(self.frequencies.imag).max(initial=0.0) > 0:
            raise ValueError("frequencies must be real")


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "re", "im"])
            for t, v in zip(self.times, self.values):
                writer.writerow([repr(float(t)), repr(float(v.real)),
                                 repr(float(v.imag))])


def map_to_gaudin(params: CentralSpinParams):
    """(model, η) with g = -1/B, ε_0 = 0, ε_j = -1/A_j, H = (1/2) R_0."""
    if params.field_b == 0.0:
        raise ZeroField("B = 0 maps to infinite coupling")
    couplings = np.asarray(params.couplings)
    eps = np.concatenate(([0.0], -1.0 / couplings))
    try:
        model = new_model(eps, -1.0 / params.field_b)
    except DuplicateEpsilon as exc:
        raise DegenerateCouplings(str(exc)) from exc
    eta = np.zeros(model.num_spins)
    eta[0] = 0.5
    return model, eta


def _gaudin_occupation(params: CentralSpinParams, central_up: bool):
    sites = [b + 1 for b in params.bath_occupation.up_sites]
    if central_up:
        sites = [0] + sites
    return BasisOccupation(tuple(sites))


def build_spectral_table(params: CentralSpinParams, model: GaudinModel,
                         eta, lower_states, upper_states) -> SpectralTable:
    """Assemble amplitudes over (sector M+1) x (sector M) eigenstate pairs.

    lower_states / upper_states are (occupation, LambdaState) pairs for
    the sectors with M and M+1 up spins of the mapped model.  Each
    amplitude is

        conj(α) β · ⟨↑_0;occ|λ_n⟩ ⟨μ_n|S⁺_0|λ_m⟩ ⟨μ_m|occ⟩
        / (⟨μ_n|λ_n⟩ ⟨μ_m|λ_m⟩).
    """
    n = model.num_spins
    m_low = len(params.bath_occupation)
    if len(lower_states) != math.comb(n, m_low):
        raise IncompleteSector(
            f"sector {m_low} has {len(lower_states)} of {math.comb(n, m_low)} states")
    if len(upper_states) != math.comb(n, m_low + 1):
        raise IncompleteSector(
            f"sector {m_low + 1} has {len(upper_states)} of "
            f"{math.comb(n, m_low + 1)} states")

    occ_up = _gaudin_occupation(params, central_up=True)
    occ_low = _gaudin_occupation(params, central_up=False)
    occ_low_complement = occ_low.complement(n)
    up_idx = list(occ_up.up_sites)
    comp_idx = list(occ_low_complement.up_sites)

    upper = []
    for occ, state in upper_states:
        mu = transform_axis(model, state)
        energy = hamiltonian_energy(eta, charge_eigenvalues(model, state))
        proj = partition_overlap_det(model, occ_up, state.values[up_idx])
        upper.append((occ, state, mu, energy, norm_product(model, state, mu),
                      proj))
    lower = []
    for occ, state in lower_states:
        mu = transform_axis(model, state)
        energy = hamiltonian_energy(eta, charge_eigenvalues(model, state))
        proj = partition_overlap_det(model, occ_low_complement,
                                     mu.values[comp_idx])
        lower.append((occ, state, mu, energy, norm_product(model, state, mu),
                      proj))

    pref = np.conjugate(params.alpha) * params.beta
    amps, freqs, upper_ids, lower_ids = [], [], [], []
    for occ_n, _state_n, mu_n, energy_n, gram_n, proj_n in upper:
        for occ_m, state_m, _mu_m, energy_m, gram_m, proj_m in lower:
            ff = splus_form_factor(model, 0, mu_n, state_m)
            amps.append(pref * proj_n * ff * proj_m / (gram_n * gram_m))
            freqs.append(energy_n - energy_m)
            upper_ids.append(occupation_id(occ_n))
            lower_ids.append(occupation_id(occ_m))
    return SpectralTable(np.asarray(amps, dtype=complex),
                         np.asarray(freqs, dtype=float),
                         upper_ids, lower_ids, params.alpha, params.beta)


def coherence_factor(table: SpectralTable, times,
                     sampling=FullSampling()) -> TimeSeries:
    """Σ amplitude · e^{i (ω_n - ω_m) t} over the table, exact or sampled."""
    if len(table) == 0:
        raise EmptyTable("spectral table has no rows")
    times = np.asarray(times, dtype=float)
    if isinstance(sampling, MonteCarloSampling) and sampling.count < len(table):
        rng = np.random.default_rng(sampling.seed)
        weights = np.abs(table.amplitudes)
        total = weights.sum()
        if total == 0.0:
            return TimeSeries(times, np.zeros(times.size, dtype=complex))
        prob = weights / total
        draws = rng.choice(len(table), size=sampling.count, p=prob)
        amp = table.amplitudes[draws] / (prob[draws] * sampling.count)
        freq = table.frequencies[draws]
    else:
        amp = table.amplitudes
        freq = table.frequencies
    values = np.exp(1j * np.outer(times, freq)) @ amp
    return TimeSeries(times, values)


def sector_completeness(model: GaudinModel, states, occ: BasisOccupation) -> float:
    """Σ_m ⟨occ|λ_m⟩⟨μ_m|occ⟩ / ⟨μ_m|λ_m⟩ over one full sector; equals 1.

    `occ` lists the up sites (model indexing) of the probe product state.
    """
    occ_idx = list(occ.up_sites)
    comp = occ.complement(model.num_spins)
    comp_idx = list(comp.up_sites)
    total = 0.0
    for _occ_label, state in states:
        mu = transform_axis(model, state)
        left = partition_overlap_det(model, occ, state.values[occ_idx])
        right = partition_overlap_det(model, comp, mu.values[comp_idx])
        total += left * right / norm_product(model, state, mu)
    return float(total)


def run_dynamics(params: CentralSpinParams, times, sampling=FullSampling(),
                 cfg: ContinuationConfig | None = None,
                 workers: int | None = None) -> TimeSeries:
    """Map, solve both sectors, assemble the table, evaluate the series."""
    model, eta = map_to_gaudin(params)
    m_low = len(params.bath_occupation)
    solved = solve_all_sectors(model, cfg, sectors=(m_low, m_low + 1),
                               workers=workers)
    table = build_spectral_table(params, model, eta,
                                 solved.states[m_low],
                                 solved.states[m_low + 1])
    table.validate()
    return coherence_factor(table, times, sampling)


# -- parameter file -------------------------------------------------------


def _reject_constant(token):
    raise ValueError(f"non-finite JSON constant {token!r} rejected")


def load_params(path):
    """Read the dynamics input file: params, time grid, sampling mode."""
    with open(path) as fh:
        data = json.load(fh, parse_constant=_reject_constant)
    params = CentralSpinParams(
        field_b=float(data["B"]),
        couplings=tuple(data["A"]),
        alpha=complex(data["alpha"][0], data["alpha"][1]),
        beta=complex(data["beta"][0], data["beta"][1]),
        bath_occupation=BasisOccupation(tuple(data["occupation"])),
    )
    tspec = data["times"]
    times = np.linspace(float(tspec["start"]), float(tspec["stop"]),
                        int(tspec["count"]))
    raw = data.get("sampling", "full")
    if raw == "full" or raw == {"mode": "full"}:
        sampling = FullSampling()
    elif isinstance(raw, dict) and raw.get("mode") == "monte_carlo":
        sampling = MonteCarloSampling(count=int(raw["count"]),
                                      seed=int(raw.get("seed", 0)))
    else:
        raise ValueError(f"unknown sampling spec {raw!r}")
    return params, times, sampling
