"""Brute-force ground truth: the counting-field Liouvillian in a truncated
two-mode Fock space.

The density operator is vectorized by column stacking (numpy order="F"), so
vec(A rho B) = kron(B.T, A) vec(rho) and the trace functional is the
conjugated identity vector.  The rotating frame removes the dc-bias phase:
H = g(ac^dag ah + ah^dag ac), I = -i g(ac^dag ah - ah^dag ac), and the
dissipators carry the counting phases e^{+i chi} on emission and e^{-i chi}
on absorption, so positive q counts photons entering the system.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cgf_analytic import CountingPoint
from .errors import ConvergenceError, ResourceLimitError
from .model import EngineParams, require_valid

# Dense full-spectrum solves are only allowed up to this superoperator size.
DENSE_SPECTRUM_CAP = 10_000
# Hard cap on the superoperator dimension for any build.
MAX_SUPEROP_DIM = 200_000


@dataclass
class FockLiouvillian:
    """Sparse counting-field Liouvillian at one counting point."""

    n_max: int
    dim: int                      # Hilbert-space dimension (n_max+1)^2
    matrix: sp.csc_matrix         # superoperator, dim^2 x dim^2
    chi_h: complex
    chi_c: complex
    lam: complex
    gamma: float
    params: EngineParams = field(repr=False)

    @property
    def superop_dim(self) -> int:
        return self.dim * self.dim


def _mode_operators(n_max: int):
    d = n_max + 1
    a1 = sp.diags(np.sqrt(np.arange(1, d)), 1, format="csr")
    eye = sp.identity(d, format="csr")
    a_h = sp.kron(a1, eye, format="csr")   # ordering |n_h, n_c>
    a_c = sp.kron(eye, a1, format="csr")
    return a_h, a_c


def trace_vector(dim: int) -> np.ndarray:
    """Row functional extracting Tr(rho) from vec(rho) (column stacking)."""
    return np.identity(dim).reshape(-1, order="F").astype(complex)


def build_liouvillian(params: EngineParams, point: CountingPoint | None = None,
                      *, chi_h: complex | None = None, chi_c: complex | None = None,
                      lam: complex | None = None, gamma: float | None = None,
                      n_max: int = 12) -> FockLiouvillian:
    """Assemble the counting-field superoperator.

    Either pass a CountingPoint (single-field gauge: chi_h = chi, chi_c = 0)
    or separate chi_h/chi_c (plus optional lam, gamma) for gauge-invariance
    checks.
    """
    require_valid(params)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if point is not None and any(v is not None for v in (chi_h, chi_c, lam, gamma)):
        raise ValueError("pass either a CountingPoint or explicit fields, not both")
    if point is not None:
        chi_h, chi_c, lam, gamma = point.chi, 0.0, point.lam, point.gamma
    else:
        chi_h = 0.0 if chi_h is None else chi_h
        chi_c = 0.0 if chi_c is None else chi_c
        lam = 0.0 if lam is None else lam
        gamma = 0.0 if gamma is None else gamma

    dim = (n_max + 1) ** 2
    if dim * dim > MAX_SUPEROP_DIM**2 or dim > MAX_SUPEROP_DIM:
        raise ResourceLimitError(
            f"superoperator dimension {dim}^2 exceeds the cap {MAX_SUPEROP_DIM}^2")

    a_h, a_c = _mode_operators(n_max)
    g = params.g
    H = g * (a_c.conj().T @ a_h + a_h.conj().T @ a_c)
    I_op = -1j * g * (a_c.conj().T @ a_h - a_h.conj().T @ a_c)
    eye = sp.identity(dim, format="csr")

    H_tot = (H + gamma * I_op).tocsr()
    L = -1j * (sp.kron(eye, H_tot) - sp.kron(H_tot.T, eye))
    L = L - 1j * (lam / 2.0) * (sp.kron(eye, I_op) + sp.kron(I_op.T, eye))

    for a_op, kappa, nb, chi in ((a_h, params.kappa_h, params.nb_h, chi_h),
                                 (a_c, params.kappa_c, params.nb_c, chi_c)):
        ad = a_op.conj().T.tocsr()
        n_op = (ad @ a_op).tocsr()
        nn_op = (a_op @ ad).tocsr()
        L = L + kappa * (nb + 1.0) * (
            np.exp(1j * chi) * sp.kron(a_op.conj(), a_op)
            - 0.5 * (sp.kron(eye, n_op) + sp.kron(n_op.T, eye)))
        L = L + kappa * nb * (
            np.exp(-1j * chi) * sp.kron(ad.conj(), ad)
            - 0.5 * (sp.kron(eye, nn_op) + sp.kron(nn_op.T, eye)))

    return FockLiouvillian(n_max=n_max, dim=dim, matrix=L.tocsc(),
                           chi_h=complex(chi_h), chi_c=complex(chi_c),
                           lam=complex(lam), gamma=float(gamma), params=params)


def trace_conservation_residual(liou: FockLiouvillian) -> float:
    """|tr^T L| at zero counting fields; < 1e-12 by construction."""
    tr = trace_vector(liou.dim)
    return float(np.abs(tr.conj() @ liou.matrix).max())


def thermal_product_vec(params: EngineParams, n_max: int) -> np.ndarray:
    """vec of the normalized two-mode thermal product state (column stacking)."""
    d = n_max + 1
    def pops(nb):
        if nb == 0:
            p = np.zeros(d)
            p[0] = 1.0
            return p
        p = (nb / (nb + 1.0)) ** np.arange(d)
        return p / p.sum()

    rho = np.kron(np.diag(pops(params.nb_h)), np.diag(pops(params.nb_c)))
    return rho.reshape(-1, order="F").astype(complex)


def dominant_eigenvalue(liou: FockLiouvillian, *, k: int = 4, tol: float = 1e-12,
                        v0: np.ndarray | None = None) -> complex:
    """Eigenvalue of the Liouvillian with the largest real part.

    Shift-invert Arnoldi targeting a real shift to the right of the spectrum,
    falling back to plain largest-real-part Arnoldi, then to a dense solve
    for small problems.  Zero counting fields give 0 within 1e-10.
    """
    L = liou.matrix
    n = L.shape[0]
    if v0 is None:
        v0 = thermal_product_vec(liou.params, liou.n_max)
    shift = 1.0 * max(liou.params.kappa_h, liou.params.kappa_c, liou.params.g)
    k_eff = min(k, n - 2)
    failures = []
    for method in ("shift-invert", "largest-real"):
        try:
            if method == "shift-invert":
                vals = spla.eigs(L, k=k_eff, sigma=shift, which="LM", v0=v0,
                                 tol=tol, maxiter=5000, return_eigenvectors=False)
            else:
                vals = spla.eigs(L, k=k_eff, which="LR", v0=v0,
                                 tol=tol, maxiter=20000, return_eigenvectors=False)
            return complex(vals[np.argmax(vals.real)])
        except Exception as exc:  # ArpackNoConvergence, singular factorization
            failures.append(f"{method}: {exc!r}")
    if n <= DENSE_SPECTRUM_CAP:
        vals = la.eigvals(L.toarray())
        return complex(vals[np.argmax(vals.real)])
    raise ConvergenceError(
        "dominant-eigenvalue solvers failed and the problem is too large for a "
        "dense fallback: " + " | ".join(failures))


def eigenvalue_multiset(liou: FockLiouvillian) -> np.ndarray:
    """Full spectrum (dense); guarded by the dense-solve cap."""
    n = liou.superop_dim
    if n > DENSE_SPECTRUM_CAP:
        raise ResourceLimitError(
            f"full spectrum needs a dense {n}x{n} solve; cap is {DENSE_SPECTRUM_CAP}")
    return la.eigvals(liou.matrix.toarray())


def evolve_trace(liou: FockLiouvillian, rho0_vec: np.ndarray, t: float,
                 check_state: bool = True) -> complex:
    """ln Tr rho(t) for the counting-field evolution from vec(rho0).

    rho0 must be a valid state (trace 1, Hermitian, PSD within 1e-12).
    """
    rho0 = np.asarray(rho0_vec, dtype=complex)
    if check_state:
        mat = rho0.reshape((liou.dim, liou.dim), order="F")
        if abs(np.trace(mat) - 1.0) > 1e-12:
            raise ValueError("initial state trace differs from 1")
        if np.abs(mat - mat.conj().T).max() > 1e-12:
            raise ValueError("initial state is not Hermitian")
        evals = la.eigvalsh(mat)
        if evals.min() < -1e-12:
            raise ValueError("initial state is not positive semidefinite")
    v = spla.expm_multiply(liou.matrix * t, rho0)
    tr = trace_vector(liou.dim).conj() @ v
    return complex(np.log(tr))


def dump_triplets(liou: FockLiouvillian, path) -> None:
    """Write the sparse matrix as text triplets: row col re im (one per line)."""
    coo = liou.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# counting-field Liouvillian, n_max={liou.n_max}, "
                 f"dim={liou.dim}, nnz={coo.nnz}\n")
        fh.write(f"# chi_h={liou.chi_h} chi_c={liou.chi_c} lam={liou.lam} "
                 f"gamma={liou.gamma}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
