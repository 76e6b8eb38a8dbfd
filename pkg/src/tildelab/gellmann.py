"""Generalized Gell-Mann generators normalized to Tr(h_j h_k) = d delta_jk.

Single-index numbering: h_0 = 1, h_{l^2+2k} = x_kl, h_{l^2+2k+1} = y_kl,
h_{l^2+2l} = z_l for 0 <= k < l < d.  For d = 2 this gives the Pauli matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BadDimension, ShapeMismatch
from .qstate import PureState, SeedLike, _rng

MAX_LOCAL_DIM = 64


def x_index(k: int, l: int) -> int:
    return l * l + 2 * k


def y_index(k: int, l: int) -> int:
    return l * l + 2 * k + 1


def z_index(l: int) -> int:
    return l * l + 2 * l


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    d: int
    h: np.ndarray  # shape (d*d, d, d), read-only

    def x(self, k: int, l: int) -> np.ndarray:
        return self.h[x_index(k, l)]

    def y(self, k: int, l: int) -> np.ndarray:
        return self.h[y_index(k, l)]

    def z(self, l: int) -> np.ndarray:
        return self.h[z_index(l)]

    def pairs(self) -> list[tuple[int, int]]:
        """(k, l) with k < l, k-major order."""
        return [(k, l) for k in range(self.d - 1) for l in range(k + 1, self.d)]

    def antisymmetric(self) -> np.ndarray:
        """Stack of all y_kl in ``pairs()`` order."""
        return np.stack([self.y(k, l) for k, l in self.pairs()])

    def __len__(self):
        return self.d * self.d


def _generators(d: int) -> np.ndarray:
    h = np.zeros((d * d, d, d), dtype=np.complex128)
    h[0] = np.eye(d)
    c = np.sqrt(d / 2)
    for l in range(1, d):
        for k in range(l):
            h[x_index(k, l), k, l] = c
            h[x_index(k, l), l, k] = c
            h[y_index(k, l), k, l] = -1j * c
            h[y_index(k, l), l, k] = 1j * c
        zl = np.zeros(d)
        zl[:l] = 1
        zl[l] = -l
        h[z_index(l)] = np.sqrt(d / (l * (l + 1))) * np.diag(zl)
    return h


@lru_cache(maxsize=None)
def build_basis(d: int) -> GellMannBasis:
    if not isinstance(d, (int, np.integer)) or d < 2 or d > MAX_LOCAL_DIM:
        raise BadDimension(f"local dimension must be in 2..{MAX_LOCAL_DIM}, got {d}")
    h = _generators(int(d))
    h.setflags(write=False)
    return GellMannBasis(int(d), h)


def swap_operator(d: int) -> np.ndarray:
    """sum_jk |jk><kj| on C^d (x) C^d."""
    s = np.zeros((d * d, d * d))
    for j in range(d):
        for k in range(d):
            s[j * d + k, k * d + j] = 1
    return s


def swap_from_generators(basis: GellMannBasis) -> np.ndarray:
    h = basis.h
    return np.einsum("jab,jcd->acbd", h, h).reshape(basis.d ** 2, -1) / basis.d


def swap_t1_from_generators(basis: GellMannBasis) -> np.ndarray:
    """(1/d) sum_j h_j^T (x) h_j."""
    h = basis.h
    return np.einsum("jba,jcd->acbd", h, h).reshape(basis.d ** 2, -1) / basis.d


def maximally_entangled(d: int) -> PureState:
    amp = np.zeros(d * d, dtype=complex)
    amp[[j * d + j for j in range(d)]] = 1 / np.sqrt(d)
    return PureState((d, d), amp)


def partial_transpose_first(m: np.ndarray, d: int) -> np.ndarray:
    """Transpose of the first tensor factor of an operator on C^d (x) C^d."""
    return m.reshape(d, d, d, d).transpose(2, 1, 0, 3).reshape(d * d, d * d)


def partial_trace_first(m: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("abad->bd", m.reshape(d, d, d, d))


def _check_square(a, d):
    a = np.asarray(a)
    if a.shape != (d, d):
        raise ShapeMismatch(f"expected a {d}x{d} matrix, got {a.shape}")
    return a


def trace_identity(a, basis: GellMannBasis) -> np.ndarray:
    """(1/d) sum_k h_k A h_k, which equals Tr(A) * 1."""
    a = _check_square(a, basis.d)
    return np.einsum("kab,bc,kcd->ad", basis.h, a, basis.h) / basis.d


def transpose_identity(a, basis: GellMannBasis) -> np.ndarray:
    """(1/d) sum_k h_k^T A h_k, which equals A^T."""
    a = _check_square(a, basis.d)
    return np.einsum("kba,bc,kcd->ad", basis.h, a, basis.h) / basis.d


def expand(a, basis: GellMannBasis) -> np.ndarray:
    """Coefficients Tr(h_j A); A = (1/d) sum_j coef_j h_j."""
    a = _check_square(a, basis.d)
    return np.einsum("jab,ba->j", basis.h, a)


def perturbed_basis(d: int, eps: float = 1e-3) -> GellMannBasis:
    """A deliberately mis-normalized basis, for negative-control runs."""
    h = _generators(d)
    h[-1] *= 1 + eps
    h.setflags(write=False)
    return GellMannBasis(d, h)


def identity_residuals(d: int, n_random: int = 100, seed: SeedLike = 0,
                       basis: GellMannBasis | None = None) -> dict[str, float]:
    """Max residual of every generator identity for dimension ``d``.

    Random matrices are complex Gaussian; the returned dict maps a check name
    to the largest absolute entrywise deviation seen.
    """
    b = build_basis(d) if basis is None else basis
    rng = _rng(seed)
    h = b.h
    gram = np.einsum("jab,kba->jk", h, h)
    res = {
        "normalization": np.abs(gram - d * np.eye(d * d)).max(),
        "hermitian": max(np.abs(g - g.conj().T).max() for g in h),
        "traceless": max(abs(np.trace(g)) for g in h[1:]),
    }
    sign = np.array([-1.0 if i in {y_index(k, l) for k, l in b.pairs()} else 1.0
                     for i in range(d * d)])
    res["transpose_signs"] = np.abs(h.transpose(0, 2, 1) - sign[:, None, None] * h).max()
    swap = swap_operator(d)
    res["swap_completeness"] = np.abs(swap_from_generators(b) - swap).max()
    phi = maximally_entangled(d).amp
    bell = d * np.outer(phi, phi.conj())
    res["bell_swap"] = np.abs(partial_transpose_first(swap, d) - bell).max()
    res["bell_swap_generators"] = np.abs(swap_t1_from_generators(b) - bell).max()
    tr = tp = sw = ba = ex = 0.0
    eye = np.eye(d)
    for _ in range(n_random):
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        tr = max(tr, np.abs(trace_identity(a, b) - np.trace(a) * eye).max())
        tp = max(tp, np.abs(transpose_identity(a, b) - a.T).max())
        sw = max(sw, np.abs(swap @ np.kron(a, eye) @ swap - np.kron(eye, a)).max())
        ba = max(ba, np.abs(partial_trace_first(bell @ np.kron(a, eye), d) - a.T).max())
        herm = (a + a.conj().T) / 2
        ex = max(ex, np.abs(np.einsum("j,jab->ab", expand(herm, b), h) / d - herm).max())
    res.update(trace_identity=tr, transpose_identity=tp, swap_conjugation=sw,
               bell_partial_trace=ba, completeness_expansion=ex)
    return {k: float(v) for k, v in res.items()}
