"""Configuration space for the mean-field O(N) model.

A configuration is n unit vectors on S^{N-1} stored as one contiguous
(n_sites, dim) float64 buffer, with the total spin cached so single-site
updates are O(dim).  The complete-graph Hamiltonian collapses to
-|S_n|^2 / (2n), which is what makes the cache worth having.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

__all__ = ["ModelParams", "SpinConfiguration", "UNIT_NORM_TOL", "REFRESH_INTERVAL"]

UNIT_NORM_TOL = 1e-12
# Full recomputation of the cached total spin after this many incremental
# replacements, to cap floating-point drift.
REFRESH_INTERVAL = 2**16


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: sphere dimension N >= 2, inverse temperature, site count."""

    dim: int
    beta: float
    n_sites: int

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")

    @property
    def regime(self) -> str:
        if self.beta < self.dim:
            return "subcritical"
        if self.beta == self.dim:
            return "critical"
        return "supercritical"


class SpinConfiguration:
    """n unit spins with a cached total; mutated by at most one worker at a time."""

    __slots__ = ("spins", "total_spin", "_updates_since_refresh")

    def __init__(self, spins: np.ndarray, _validate: bool = True):
        spins = np.ascontiguousarray(spins, dtype=np.float64)
        if spins.ndim != 2 or spins.shape[0] < 1:
            raise ValueError(f"spins must be a (n_sites, dim) array, got {spins.shape}")
        if _validate:
            norms = np.linalg.norm(spins, axis=1)
            bad = np.abs(norms - 1.0) > UNIT_NORM_TOL
            if bad.any():
                raise ValueError(f"{bad.sum()} spin(s) are not unit length")
        self.spins = spins
        self.total_spin = spins.sum(axis=0)
        self._updates_since_refresh = 0

    @property
    def n_sites(self) -> int:
        return self.spins.shape[0]

    @property
    def dim(self) -> int:
        return self.spins.shape[1]

    @classmethod
    def random(cls, n_sites: int, dim: int, rng: np.random.Generator) -> "SpinConfiguration":
        """Uniform product configuration on (S^{dim-1})^n."""
        z = rng.standard_normal((n_sites, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return cls(z, _validate=False)

    @classmethod
    def aligned(cls, n_sites: int, dim: int, axis: int = 0) -> "SpinConfiguration":
        """All spins equal to the given coordinate unit vector (ground state)."""
        spins = np.zeros((n_sites, dim))
        spins[:, axis] = 1.0
        return cls(spins, _validate=False)

    def copy(self) -> "SpinConfiguration":
        dup = SpinConfiguration.__new__(SpinConfiguration)
        dup.spins = self.spins.copy()
        dup.total_spin = self.total_spin.copy()
        dup._updates_since_refresh = self._updates_since_refresh
        return dup

    def hamiltonian(self) -> float:
        """Complete-graph energy -(1/2n) sum_{i,j} <s_i, s_j> = -|S_n|^2 / (2n)."""
        s2 = float(self.total_spin @ self.total_spin)
        return -s2 / (2.0 * self.n_sites)

    def leave_one_out(self, site: int) -> np.ndarray:
        """Sum of all spins except the one at ``site``."""
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site {site} out of range for {self.n_sites} sites")
        return self.total_spin - self.spins[site]

    def replace_spin(self, site: int, new_spin: np.ndarray) -> None:
        """Replace one spin in place, updating the cached total incrementally."""
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site {site} out of range for {self.n_sites} sites")
        new_spin = np.asarray(new_spin, dtype=np.float64)
        nrm = float(np.linalg.norm(new_spin))
        if abs(nrm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"replacement spin has norm {nrm}")
        self.total_spin += new_spin - self.spins[site]
        self.spins[site] = new_spin
        self._updates_since_refresh += 1
        if self._updates_since_refresh >= REFRESH_INTERVAL:
            self.refresh_total()

    def refresh_total(self) -> None:
        self.total_spin = self.spins.sum(axis=0)
        self._updates_since_refresh = 0

    def validate(self) -> None:
        """Check the type invariants; raises on violation."""
        norms = np.linalg.norm(self.spins, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > UNIT_NORM_TOL:
            raise AssertionError(f"spin norm drift {worst} exceeds {UNIT_NORM_TOL}")
        drift = float(np.linalg.norm(self.total_spin - self.spins.sum(axis=0)))
        if drift > 1e-9 * self.n_sites:
            raise AssertionError(f"total spin cache drift {drift}")
        if np.linalg.norm(self.total_spin) > self.n_sites * (1.0 + 1e-12):
            raise AssertionError("total spin longer than n_sites")

    # -- checkpoint format: CSV with header site,x1,...,xN ------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ",".join(f"x{j + 1}" for j in range(self.dim))
        buf.write(f"site,{cols}\n")
        for i in range(self.n_sites):
            row = ",".join(repr(float(v)) for v in self.spins[i])
            buf.write(f"{i},{row}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, path) -> "SpinConfiguration":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if header[0] != "site" or len(header) < 2:
                raise ValueError(f"bad configuration header: {header}")
            dim = len(header) - 1
            rows = []
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != dim + 1:
                    raise ValueError(f"bad configuration row: {line!r}")
                rows.append([float(v) for v in parts[1:]])
        return cls(np.asarray(rows))
