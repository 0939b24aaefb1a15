"""Susceptance-matrix assembly, Kron reduction and impedance scaling.

The network is purely inductive.  With every branch reactance x_ij and
Thevenin reactance x_ti the bus susceptance matrix is

    B_ij = 1/x_ij            (i != j, branch present)
    B_ii = -(sum_j 1/x_ij + 1/x_ti)

so diagonals are negative, off-diagonals nonnegative, and -B is an
M-matrix whenever the grounded graph is connected.  The ground node is
implicit: Thevenin links only deepen diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .casefile import CaseFile
from .errors import GridStrengthError


@dataclass(frozen=True)
class SusceptanceMatrix:
    matrix: np.ndarray          # n x n, pu
    bus_order: tuple[str, ...]  # row i corresponds to bus_order[i]

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.bus_order):
            raise GridStrengthError("susceptance matrix shape does not match bus order")

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def index_of(self, bus: str) -> int:
        return self.bus_order.index(bus)


def build_susceptance(case: CaseFile) -> SusceptanceMatrix:
    order = tuple(b.id for b in case.buses)
    idx = {b: i for i, b in enumerate(order)}
    n = len(order)
    B = np.zeros((n, n))
    for br in case.branches:
        i, j = idx[br.from_bus], idx[br.to_bus]
        y = 1.0 / br.reactance_pu
        B[i, j] += y
        B[j, i] += y
        B[i, i] -= y
        B[j, j] -= y
    for ln in case.thevenin_links:
        i = idx[ln.bus]
        B[i, i] -= 1.0 / ln.reactance_pu
    return SusceptanceMatrix(matrix=B, bus_order=order)


def kron_reduce(B: SusceptanceMatrix, keep: set[str] | tuple[str, ...]) -> SusceptanceMatrix:
    """Eliminate all buses outside ``keep``: B_kk - B_ke B_ee^-1 B_ek."""
    keep_set = set(keep)
    unknown = keep_set - set(B.bus_order)
    if unknown:
        raise GridStrengthError(f"kron_reduce: unknown buses {sorted(unknown)}")
    keep_idx = [i for i, b in enumerate(B.bus_order) if b in keep_set]
    elim_idx = [i for i, b in enumerate(B.bus_order) if b not in keep_set]
    if not elim_idx:
        return B
    M = B.matrix
    Bkk = M[np.ix_(keep_idx, keep_idx)]
    Bke = M[np.ix_(keep_idx, elim_idx)]
    Bee = M[np.ix_(elim_idx, elim_idx)]
    try:
        X = np.linalg.solve(Bee, Bke.T)
    except np.linalg.LinAlgError:
        floating = [B.bus_order[i] for i in elim_idx]
        raise GridStrengthError(
            f"kron_reduce: singular internal block, buses {floating} float with no path to a source"
        ) from None
    red = Bkk - Bke @ X
    red = 0.5 * (red + red.T)  # exact symmetry, elimination is symmetric in theory
    return SusceptanceMatrix(matrix=red, bus_order=tuple(B.bus_order[i] for i in keep_idx))


def source_vector(case: CaseFile, B: SusceptanceMatrix) -> np.ndarray:
    """Per-bus equivalent source injection f_i = E_i / x_ti (0 where no link)."""
    f = np.zeros(B.order)
    for ln in case.thevenin_links:
        f[B.index_of(ln.bus)] += ln.emf_pu / ln.reactance_pu
    return f


@dataclass(frozen=True)
class ReducedNetwork:
    """Network seen from the converter buses after eliminating internal ones.

    ``f`` is the reduced equivalent source vector: f_red = f_c - B_ce B_ee^-1 f_e.
    The bus power expressions used by the power flow are

        P_i = sum_j B_ij U_i U_j sin(d_i - d_j) + f_i U_i sin(d_i)
        Q_i = -sum_j B_ij U_i U_j cos(d_i - d_j) - f_i U_i cos(d_i)

    with angles measured against the common source phase.
    """

    B: SusceptanceMatrix
    f: np.ndarray

    @property
    def order(self) -> int:
        return self.B.order

    @property
    def bus_order(self) -> tuple[str, ...]:
        return self.B.bus_order


def reduce_case(case: CaseFile) -> ReducedNetwork:
    full = build_susceptance(case)
    f_full = source_vector(case, full)
    keep = case.converter_buses()
    keep_idx = [i for i, b in enumerate(full.bus_order) if b in set(keep)]
    elim_idx = [i for i, b in enumerate(full.bus_order) if b not in set(keep)]
    red = kron_reduce(full, set(keep))
    if elim_idx:
        M = full.matrix
        Bce = M[np.ix_(keep_idx, elim_idx)]
        Bee = M[np.ix_(elim_idx, elim_idx)]
        f_red = f_full[keep_idx] - Bce @ np.linalg.solve(Bee, f_full[elim_idx])
    else:
        f_red = f_full[keep_idx]
    return ReducedNetwork(B=red, f=f_red)


def scale_impedance(case: CaseFile, s: float) -> CaseFile:
    """Multiply every branch and Thevenin reactance by s; nothing else changes."""
    if not s > 0:
        raise GridStrengthError(f"scale_impedance: scale must be positive, got {s}")
    branches = tuple(replace(br, reactance_pu=br.reactance_pu * s) for br in case.branches)
    links = tuple(replace(ln, reactance_pu=ln.reactance_pu * s) for ln in case.thevenin_links)
    return replace(case, branches=branches, thevenin_links=links)
