"""
Conservative finite-difference form of the radial Dirichlet Laplacian.

On interior nodes r_i the operator is

    (S u)_i = -[ r_{i+1/2}^(N-1) (u_{i+1} - u_i) / h_+  -  r_{i-1/2}^(N-1) (u_i - u_{i-1}) / h_- ]

with S symmetric, and -Delta_r u ~ W^{-1} S u where W = diag(r_i^(N-1) (h_- + h_+) / 2)
holds the radial quadrature weights. The ground-state solver, the residual
and the Crank-Nicolson scheme all share this operator, so a converged profile
is an exact discrete standing wave and the discrete mass sum(W |phi|^2) is
conserved by the time stepping.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from app.data.models import Mesh


@dataclass(frozen=True, eq=False)
class RadialOperator:
    dim: int
    mesh: Mesh
    weights: np.ndarray  # interior quadrature weights, length n - 2
    s_diag: np.ndarray
    s_off: np.ndarray  # symmetric off-diagonal, length n - 3
    edge_coupling: np.ndarray  # r_{j+1/2}^(N-1) / h_j for every interval j

    @property
    def interior(self) -> np.ndarray:
        return self.mesh.nodes[1:-1]

    def bands(self):
        """(sub, diag, sup) of -Delta_h = W^{-1} S on interior nodes."""
        w = self.weights
        return self.s_off / w[1:], self.s_diag / w, self.s_off / w[:-1]

    def apply_symmetric(self, values: np.ndarray) -> np.ndarray:
        """S u on interior nodes for a full-length vector with zero endpoints."""
        flux = self.edge_coupling * np.diff(values)
        return -(flux[1:] - flux[:-1])

    def apply(self, values: np.ndarray) -> np.ndarray:
        """-Delta_h u on interior nodes."""
        return self.apply_symmetric(values) / self.weights

    def dirichlet_form(self, f: np.ndarray, g: np.ndarray):
        """sum_j r_{j+1/2}^(N-1) (f_{j+1} - f_j) conj(g_{j+1} - g_j) / h_j."""
        return np.sum(self.edge_coupling * np.diff(f) * np.conj(np.diff(g)))

    def weighted_inner(self, f: np.ndarray, g: np.ndarray):
        """sum_i w_i f_i conj(g_i) over interior nodes."""
        return np.sum(self.weights * f[1:-1] * np.conj(g[1:-1]))

    def lowest_eigenvalue(self) -> float:
        """Smallest eigenvalue of -Delta_h, via the symmetric form W^(-1/2) S W^(-1/2)."""
        root_w = np.sqrt(self.weights)
        diag = self.s_diag / self.weights
        off = self.s_off / (root_w[1:] * root_w[:-1])
        values = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
        return float(values[0])


@lru_cache(maxsize=64)
def radial_operator(mesh: Mesh, dim: int) -> RadialOperator:
    r = mesh.nodes
    steps = np.diff(r)
    midpoints = 0.5 * (r[1:] + r[:-1])
    edge_coupling = midpoints ** (dim - 1) / steps
    weights = r[1:-1] ** (dim - 1) * 0.5 * (steps[1:] + steps[:-1])
    s_diag = edge_coupling[1:] + edge_coupling[:-1]
    s_off = -edge_coupling[1:-1]
    for array in (edge_coupling, weights, s_diag, s_off):
        array.setflags(write=False)
    return RadialOperator(
        dim=dim,
        mesh=mesh,
        weights=weights,
        s_diag=s_diag,
        s_off=s_off,
        edge_coupling=edge_coupling,
    )
