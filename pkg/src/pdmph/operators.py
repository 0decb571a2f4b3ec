"""Dense matrix realizations of the first- and second-order operators.

Conventions:
  D      = U d/dx + phi                 with phi = f + i g
  D~     = D - i a                      (gauge-shifted version, a real)
  D^     = -d/dx U + conj(phi)          (formal adjoint, built from its own
                                         differential expression, never by
                                         transposing a matrix)
  eta~   = -U^2 d2 - 2 K d1 + L         (metric; also available as the
                                         literal product D~^ D~)
  H'     = -U^2 d2 - 2 M1 d1 + N1 + V
  H'^    = -U^2 d2 - 2 M2 d1 + N2 + conj(V)

Adjoint matrices built this way agree with conjugate transposes only on the
interior window and only when applied to smooth vectors; that agreement is
itself one of the verified identities, so the two routes are kept strictly
separate.

For eigenproblems the operators are assembled on the interior block
(Dirichlet walls) with an odd-reflection closure, which keeps the
discretization 4th-order accurate for wall-vanishing modes and keeps real
symmetric problems exactly symmetric.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDomainError
from .grid import Grid, OperatorMatrix, cumint, diff_matrix
from .profiles import ProfileBundle


def _dscale(diag, M):
    """diag(diag) @ M without forming the diagonal matrix."""
    return diag[:, None] * M


@dataclass
class CoefficientSet:
    """First/zeroth-order coefficients of the metric, the Hamiltonian and its adjoint.

    With a real gauge the Hamiltonian coefficients and their adjoint
    counterparts coincide (M2 = M1, N2 = N1); the non-Hermiticity then lives
    entirely in the potential.
    """

    K: np.ndarray
    L: np.ndarray
    M1: np.ndarray
    N1: np.ndarray
    M2: np.ndarray
    N2: np.ndarray

    @classmethod
    def build(cls, f, fp, g, gp, a, ap, bundle: ProfileBundle):
        U, Up = bundle.U, bundle.Up
        G = g - a
        Gp = gp - ap
        K = U * Up + 1j * U * G
        L = (f**2 + G**2 - (Up * f + U * fp) - 1j * (Up * G + U * Gp))
        A = a + 0j
        M1 = U * Up - 1j * U * A
        N1 = 1j * (Up * A + U * ap) + A * A
        Ac = np.conj(A)
        M2 = U * Up - 1j * U * Ac
        N2 = 1j * (Up * Ac + U * ap) + Ac * Ac
        return cls(K, L, M1, N1, M2, N2)


def build_d(phi, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """First-order operator U d/dx + phi."""
    D1 = diff_matrix(grid, 1)
    mat = _dscale(bundle.U + 0j, D1.mat)
    np.fill_diagonal(mat, mat.diagonal() + phi)
    return OperatorMatrix(grid, mat, kind="D")


def build_d_dagger(phi, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """Formal adjoint -d/dx U + conj(phi), expanded as -U d/dx - U' + conj(phi)."""
    D1 = diff_matrix(grid, 1)
    mat = -_dscale(bundle.U + 0j, D1.mat)
    np.fill_diagonal(mat, mat.diagonal() - bundle.Up + np.conj(phi))
    return OperatorMatrix(grid, mat, kind="D_dagger")


def build_d_tilde(phi, a, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """Gauge-shifted operator D - i a; the shift is exact at matrix level."""
    op = build_d(phi, bundle, grid)
    np.fill_diagonal(op.mat, op.mat.diagonal() - 1j * a)
    op.kind = "D_tilde"
    return op


def build_d_tilde_dagger(phi, a, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """Adjoint of the gauge-shifted operator: D^ + i conj(a)."""
    op = build_d_dagger(phi, bundle, grid)
    np.fill_diagonal(op.mat, op.mat.diagonal() + 1j * np.conj(a))
    op.kind = "D_tilde_dagger"
    return op


def build_eta_tilde(coeffs: CoefficientSet, bundle: ProfileBundle, grid: Grid,
                    mode="direct", phi=None, a=None) -> OperatorMatrix:
    """Metric operator, either assembled from K and L or as the product D~^ D~.

    The two constructions agree on smooth vectors over the interior window
    at the stencil order; entrywise they differ (the product has the wider
    stencil), so agreement is always measured through probe actions.
    """
    if mode == "direct":
        D1 = diff_matrix(grid, 1)
        D2 = diff_matrix(grid, 2)
        mat = -_dscale(bundle.U**2 + 0j, D2.mat) - 2.0 * _dscale(coeffs.K, D1.mat)
        np.fill_diagonal(mat, mat.diagonal() + coeffs.L)
        return OperatorMatrix(grid, mat, kind="eta_tilde")
    if mode == "product":
        if phi is None or a is None:
            raise InvalidDomainError("product mode needs phi and a")
        dt = build_d_tilde(phi, a, bundle, grid)
        dtd = build_d_tilde_dagger(phi, a, bundle, grid)
        return OperatorMatrix(grid, dtd.mat @ dt.mat, kind="eta_tilde_product")
    raise InvalidDomainError(f"unknown eta_tilde mode {mode!r}")


def build_h_prime(V, a, ap, bundle: ProfileBundle, grid: Grid,
                  coeffs: CoefficientSet = None) -> OperatorMatrix:
    """Gauged Hamiltonian -U^2 d2 - 2 M1 d1 + N1 + V."""
    if coeffs is None:
        z = np.zeros(grid.n)
        coeffs = CoefficientSet.build(z, z, z, z, a, ap, bundle)
    D1 = diff_matrix(grid, 1)
    D2 = diff_matrix(grid, 2)
    mat = -_dscale(bundle.U**2 + 0j, D2.mat) - 2.0 * _dscale(coeffs.M1, D1.mat)
    np.fill_diagonal(mat, mat.diagonal() + coeffs.N1 + V)
    return OperatorMatrix(grid, mat, kind="H_prime")


def build_h_prime_dagger(V, a, ap, bundle: ProfileBundle, grid: Grid,
                         coeffs: CoefficientSet = None) -> OperatorMatrix:
    """Adjoint Hamiltonian -U^2 d2 - 2 M2 d1 + N2 + conj(V)."""
    if coeffs is None:
        z = np.zeros(grid.n)
        coeffs = CoefficientSet.build(z, z, z, z, a, ap, bundle)
    D1 = diff_matrix(grid, 1)
    D2 = diff_matrix(grid, 2)
    mat = -_dscale(bundle.U**2 + 0j, D2.mat) - 2.0 * _dscale(coeffs.M2, D1.mat)
    np.fill_diagonal(mat, mat.diagonal() + coeffs.N2 + np.conj(V))
    return OperatorMatrix(grid, mat, kind="H_prime_dagger")


def build_parity(grid: Grid) -> OperatorMatrix:
    """Index-reversal permutation; needs a symmetric grid with a node at 0."""
    if not grid.parity_capable:
        raise InvalidDomainError(
            "parity operator needs xmin = -xmax and odd n (a node exactly at 0)")
    mat = np.eye(grid.n)[::-1].copy()
    return OperatorMatrix(grid, mat, kind="parity", boundary="exact", pad=0)


def build_eta_parity(a, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """Parity-based metric exp[2i int a/U] P, phase anchored at the center node.

    Hermitian exactly when both a and U are even; the Hermiticity defect for
    uneven inputs is measured entrywise (the matrix has one entry per row, no
    stencil is involved).
    """
    P = build_parity(grid)
    phase = 2.0 * cumint(a / bundle.U, grid, grid.index_nearest(0.0))
    mat = np.exp(1j * phase)[:, None] * P.mat
    return OperatorMatrix(grid, mat, kind="eta_parity", boundary="exact", pad=0)


def dirichlet_block(grid: Grid, order: int) -> np.ndarray:
    """Interior-block derivative matrix with odd reflection through the walls.

    Dirichlet eigenmodes vanish linearly at the walls, so the odd extension
    is smooth to the order of the stencil; the closure keeps 4th-order
    eigenvalue accuracy and keeps the pure second-derivative block exactly
    symmetric.
    """
    n, h = grid.n, grid.h
    m = n - 2
    if order == 1:
        c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    elif order == 2:
        c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    else:
        raise InvalidDomainError(f"derivative order must be 1 or 2, got {order}")
    D = np.zeros((m, m))
    idx = np.arange(m)
    for k, off in enumerate(range(-2, 3)):
        j = idx + off
        ok = (j >= 0) & (j < m)
        D[idx[ok], j[ok]] += c[k]
    # odd images: node -1 mirrors interior node 0, node n mirrors node m-1
    D[0, 0] -= c[0]
    D[m - 1, m - 1] -= c[4]
    return D


def build_h_prime_block(V, a, ap, bundle: ProfileBundle, grid: Grid) -> OperatorMatrix:
    """Dirichlet interior-block Hamiltonian for dense eigendecomposition."""
    z = np.zeros(grid.n)
    coeffs = CoefficientSet.build(z, z, z, z, a, ap, bundle)
    D1 = dirichlet_block(grid, 1)
    D2 = dirichlet_block(grid, 2)
    s = slice(1, grid.n - 1)
    mat = -_dscale(bundle.U[s]**2 + 0j, D2) - 2.0 * _dscale(coeffs.M1[s], D1)
    np.fill_diagonal(mat, mat.diagonal() + coeffs.N1[s] + V[s])
    return OperatorMatrix(grid, mat, kind="H_prime_block", boundary="dirichlet-block", pad=0)


def build_eta_tilde_block(coeffs: CoefficientSet, bundle: ProfileBundle,
                          grid: Grid) -> OperatorMatrix:
    """Dirichlet interior-block metric, for eta-weighted inner products."""
    D1 = dirichlet_block(grid, 1)
    D2 = dirichlet_block(grid, 2)
    s = slice(1, grid.n - 1)
    mat = -_dscale(bundle.U[s]**2 + 0j, D2) - 2.0 * _dscale(coeffs.K[s], D1)
    np.fill_diagonal(mat, mat.diagonal() + coeffs.L[s])
    return OperatorMatrix(grid, mat, kind="eta_tilde_block", boundary="dirichlet-block", pad=0)


def default_probes(grid: Grid, count=8):
    """Smooth probe vectors: low-frequency sine/cosine pairs and Gaussian bumps."""
    s = (grid.x - grid.xmin) / (grid.xmax - grid.xmin)
    probes = []
    k = 1
    while len(probes) < count:
        probes.append(np.sin(2.0 * np.pi * k * s + 0.3 * k))
        probes.append(np.cos(2.0 * np.pi * k * s - 0.2 * k))
        k += 1
    for c, wdt in ((0.35, 0.10), (0.62, 0.14)):
        probes.append(np.exp(-((s - c) / wdt) ** 2))
    return probes[:max(count, 8)]


def tau_similarity_residual(h_prime: OperatorMatrix, h_prime_dagger: OperatorMatrix,
                            tau_phase, probes=None, pad=8, xmargin=0.0):
    """Residual of the antilinear similarity between H' and its adjoint.

    The antilinear map T e^{i alpha} conjugates matrix entries inside the
    phase sandwich, so the similarity image is conj(E H' E^{-1}) with
    E = diag(e^{i alpha}).  The residual is measured through probe actions
    on the interior window, relative to the adjoint action scale; for a
    vanishing phase the image and the adjoint matrix coincide entrywise and
    the residual is exactly zero.
    """
    grid = h_prime.grid
    E = np.exp(1j * tau_phase)
    image = np.conj(E[:, None] * h_prime.mat * (1.0 / E)[None, :])
    if probes is None:
        probes = default_probes(grid)
    w = grid.interior_mask(pad, xmargin)
    worst = 0.0
    scale = 0.0
    for v in probes:
        rv = image @ v - h_prime_dagger.mat @ v
        hv = h_prime_dagger.mat @ v
        worst = max(worst, np.abs(rv[w]).max())
        scale = max(scale, np.abs(hv[w]).max())
    return worst / max(scale, 1e-300)


MATRIX_MAGIC = b"PDMPHMAT"


def export_matrix(op: OperatorMatrix, path):
    """Dense binary export: 8-byte magic, little-endian int64 n, then row-major
    complex entries as (real, imag) float64 pairs."""
    mat = np.ascontiguousarray(op.mat, dtype=complex)
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<q", mat.shape[0]))
        interleaved = np.empty((mat.shape[0], mat.shape[1], 2))
        interleaved[..., 0] = mat.real
        interleaved[..., 1] = mat.imag
        fh.write(interleaved.astype("<f8").tobytes())


def import_matrix(path):
    """Read a matrix written by :func:`export_matrix`; returns the complex array."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MATRIX_MAGIC:
            raise InvalidDomainError(f"{path} is not a matrix export (bad magic)")
        (n,) = struct.unpack("<q", fh.read(8))
        raw = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n, 2)
        return raw[..., 0] + 1j * raw[..., 1]
