"""Scaled discrete Laplacian N^2 D^N and its exact flows.

D^N is the (N-1)x(N-1) tridiagonal matrix tridiag(1,-2,1) of the centered
second difference with homogeneous Dirichlet boundary conditions; in 2d the
operator is the Kronecker sum A (+) A of the per-axis 1d operator A.

The eigensystem is closed form: the orthonormal discrete sine basis
v_k(n) = sqrt(2h) sin(k pi n h) diagonalizes A with eigenvalues
mu_k = -4 N^2 sin^2(k pi / (2N)), all strictly negative. Three actions are
provided, each exact in exact arithmetic:

* matrix-vector product (stencil),
* heat semigroup e^{tau N^2 D^N} (spectral multipliers exp(tau mu_k)),
* implicit solve (I - tau N^2 D^N) x = b (banded Cholesky in 1d,
  spectral divisors in 2d).

The sine transform is applied either as an explicit orthonormal matrix
product (small grids) or via the FFT-based DST-I, which with 'ortho'
normalization is exactly that matrix and is its own inverse.
"""

from __future__ import annotations

import numpy as np
import scipy.fft
import scipy.linalg

from .mesh import Grid, GridField

# Above this per-axis size the FFT-based transform beats the dense matmul.
_MATMUL_MAX_N = 128

_DENSE_CAP = 4096


class PositivityDiagnosticsError(RuntimeError):
    """Semigroup output from a nonnegative field went negative beyond
    roundoff scale; indicates a genuine bug, not floating-point noise."""


def _check_same_grid(grid: Grid, v: GridField) -> None:
    if v.grid != grid:
        raise ValueError(f"grid mismatch: operator on {grid}, field on {v.grid}")


class HeatOperator:
    """Precomputed spectral data for N^2 D^N on a grid; immutable."""

    def __init__(self, grid: Grid):
        self.grid = grid
        n = grid.n_interior_per_axis
        k = np.arange(1, grid.N)
        self.eigenvalues = -4.0 * grid.N**2 * np.sin(k * np.pi / (2 * grid.N)) ** 2
        self.eigenvalues.setflags(write=False)
        if n <= _MATMUL_MAX_N:
            # Orthonormal sine matrix, symmetric and involutory.
            x = k * grid.h
            self._sine_matrix = np.sqrt(2.0 * grid.h) * np.sin(
                np.pi * np.outer(k, x)
            )
            self._sine_matrix.setflags(write=False)
        else:
            self._sine_matrix = None

    # -- sine transform on the trailing d axes of an array ---------------

    def sine_transform(self, arr: np.ndarray) -> np.ndarray:
        """Orthonormal DST-I along the trailing grid axes (own inverse)."""
        if self._sine_matrix is not None:
            S = self._sine_matrix
            out = arr @ S  # trailing axis; S is symmetric
            if self.grid.d == 2:
                out = S @ out  # axis -2, batched over leading axes
            return out
        if self.grid.d == 1:
            return scipy.fft.dst(arr, type=1, norm="ortho", axis=-1)
        return scipy.fft.dstn(arr, type=1, norm="ortho", axes=(-2, -1))

    # -- spectral multipliers ---------------------------------------------

    def semigroup_multipliers(self, tau: float) -> np.ndarray:
        """exp(tau mu) on the interior shape (outer product in 2d)."""
        m = np.exp(tau * self.eigenvalues)
        if self.grid.d == 2:
            m = np.outer(m, m)
        return m

    def implicit_divisors(self, tau: float) -> np.ndarray:
        """Eigenvalues of I - tau N^2 D^N, all >= 1."""
        if self.grid.d == 2:
            return 1.0 - tau * (
                self.eigenvalues[:, None] + self.eigenvalues[None, :]
            )
        return 1.0 - tau * self.eigenvalues

    def implicit_banded_factor(self, tau: float) -> np.ndarray:
        """Cholesky factor of the 1d matrix I - tau N^2 D^N in banded form."""
        if self.grid.d != 1:
            raise ValueError("banded factorization is a 1d path")
        n = self.grid.n_interior_per_axis
        c = tau * self.grid.N**2
        ab = np.zeros((2, n))
        ab[1, :] = 1.0 + 2.0 * c
        ab[0, 1:] = -c
        return scipy.linalg.cholesky_banded(ab)

    # -- array-level kernels (batched over leading axes) -------------------

    def laplacian_array(self, arr: np.ndarray) -> np.ndarray:
        """N^2 D^N applied along the trailing grid axes via the stencil,
        with zero Dirichlet neighbors outside the interior."""
        N2 = float(self.grid.N**2)
        out = (-2.0 * self.grid.d) * np.asarray(arr, dtype=np.float64)
        out[..., 1:] += arr[..., :-1]
        out[..., :-1] += arr[..., 1:]
        if self.grid.d == 2:
            out[..., 1:, :] += arr[..., :-1, :]
            out[..., :-1, :] += arr[..., 1:, :]
        return N2 * out

    def semigroup_array(
        self, arr: np.ndarray, multipliers: np.ndarray, clamp_nonneg: bool = True
    ) -> np.ndarray:
        """exp(tau N^2 D^N) applied along the trailing grid axes.

        For input slices that are entrywise nonnegative, roundoff-negative
        output entries above -1e-12 * sup|input| are clamped to zero (the
        semigroup kernel is provably nonnegative); a larger negative entry
        raises PositivityDiagnosticsError.
        """
        out = self.sine_transform(self.sine_transform(arr) * multipliers)
        if not clamp_nonneg:
            return out
        axes = tuple(range(arr.ndim - self.grid.d, arr.ndim))
        nonneg = np.all(arr >= 0.0, axis=axes, keepdims=True)
        if not nonneg.any():
            return out
        eps = 1e-12 * np.max(np.abs(arr), axis=axes, keepdims=True)
        bad = nonneg & (out <= -eps) & (eps > 0)
        if bad.any():
            raise PositivityDiagnosticsError(
                f"semigroup produced entry {out[bad].min()} from a "
                f"nonnegative field (clamp threshold {-eps.max()})"
            )
        np.copyto(out, 0.0, where=nonneg & (out < 0.0))
        return out

    def solve_implicit_array(self, tau: float, rhs: np.ndarray) -> np.ndarray:
        """(I - tau N^2 D^N)^{-1} rhs. One-shot path; step loops should
        factor once via implicit_banded_factor / implicit_divisors."""
        if self.grid.d == 1:
            cb = self.implicit_banded_factor(tau)
            flat = rhs.reshape(-1, rhs.shape[-1])
            x = scipy.linalg.cho_solve_banded((cb, False), flat.T).T
            return x.reshape(rhs.shape)
        div = self.implicit_divisors(tau)
        return self.sine_transform(self.sine_transform(rhs) / div)

    # -- GridField operations ----------------------------------------------

    def apply_laplacian(self, v: GridField) -> GridField:
        """N^2 D^N v."""
        _check_same_grid(self.grid, v)
        out = self.laplacian_array(v.values_nd())
        return GridField(self.grid, out.reshape(-1))

    def apply_semigroup(self, tau: float, v: GridField) -> GridField:
        """exp(tau N^2 D^N) v, computed spectrally."""
        _check_same_grid(self.grid, v)
        if tau < 0:
            raise ValueError(f"tau must be >= 0, got {tau}")
        if tau == 0:
            return v
        out = self.semigroup_array(v.values_nd(), self.semigroup_multipliers(tau))
        return GridField(self.grid, out.reshape(-1))

    def solve_implicit(self, tau: float, b: GridField) -> GridField:
        """The unique x with (I - tau N^2 D^N) x = b. Always solvable:
        the eigenvalues of the system matrix are all >= 1."""
        _check_same_grid(self.grid, b)
        if tau <= 0:
            raise ValueError(f"tau must be > 0, got {tau}")
        if self.grid.d == 1:
            cb = self.implicit_banded_factor(tau)
            x = scipy.linalg.cho_solve_banded((cb, False), b.values)
        else:
            div = self.implicit_divisors(tau)
            x = self.sine_transform(self.sine_transform(b.values_nd()) / div)
        return GridField(self.grid, x.reshape(-1))

    # -- dense diagnostic paths ---------------------------------------------

    def dense_matrix(self) -> np.ndarray:
        """Explicit dense N^2 D^N, for oracle tests at small N."""
        if self.grid.n_interior > _DENSE_CAP:
            raise ValueError(
                f"dense matrix capped at {_DENSE_CAP} interior points, "
                f"grid has {self.grid.n_interior}"
            )
        n = self.grid.n_interior_per_axis
        A = self.grid.N**2 * (
            np.diag(np.full(n, -2.0))
            + np.diag(np.ones(n - 1), 1)
            + np.diag(np.ones(n - 1), -1)
        )
        if self.grid.d == 1:
            return A
        eye = np.eye(n)
        return np.kron(A, eye) + np.kron(eye, A)

    def dense_semigroup(self, tau: float) -> np.ndarray:
        """Dense exp(tau N^2 D^N) with roundoff-negative entries zeroed;
        agrees with the spectral path to 1e-10 (alternative construction)."""
        if self.grid.n_interior_per_axis > 2**8:
            raise ValueError("dense semigroup capped at N = 2^8 per axis")
        E = scipy.linalg.expm(tau * self.dense_matrix())
        np.copyto(E, 0.0, where=E < 0.0)
        return E

    def eigenvector(self, k: int) -> GridField:
        """Orthonormal sine mode v_k(n) = sqrt(2h) sin(k pi n h), 1d only."""
        if self.grid.d != 1:
            raise ValueError("per-axis eigenvectors are 1d; take products in 2d")
        if not 1 <= k <= self.grid.N - 1:
            raise ValueError(f"mode index must be in 1..{self.grid.N - 1}")
        x = self.grid.axis_coords()
        return GridField(
            self.grid, np.sqrt(2.0 * self.grid.h) * np.sin(k * np.pi * x)
        )
