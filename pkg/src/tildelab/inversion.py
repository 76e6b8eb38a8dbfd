"""Universal state inversion in four equivalent forms, plus Bloch coefficients.

* product form: apply ``O -> Tr_X(O) (x) 1_X - O`` party by party;
* subset form: alternating sum of reduced operators over all subsets;
* generator form: ``(2^N / d_tot) sum_y  y rho* y`` over tensor products of the
  antisymmetric generators (antilinear, so valid for non-Hermitian input);
* Bloch form: reweight the Bloch terms by ``(d-1)^(N-q) (-1)^q``.

The inverted operator is never renormalized; its trace is prod_k (d_k - 1).
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ShapeMismatch, UnequalDims
from .gellmann import build_basis
from .qstate import (DensityOperator, HilbertDims, StateLike, as_density, as_dims,
                     embed, partial_trace, popcount)

METHODS = ("product", "subsets", "generators", "bloch")


def invert_single(o, hermitian: bool = True) -> np.ndarray:
    """Single-system inverter: Tr(O) 1 - O, or Tr(O^dag) 1 - O^dag off the Hermitian path."""
    o = np.asarray(o)
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        raise ShapeMismatch(f"inverter needs a square matrix, got shape {o.shape}")
    if not hermitian:
        o = o.conj().T
    return np.trace(o) * np.eye(o.shape[0]) - o


# ----------------------------------------------------------------- raw kernels

def _product(mat: np.ndarray, dims: HilbertDims) -> np.ndarray:
    n = dims.n
    t = np.array(mat, dtype=np.complex128).reshape(dims.dims * 2)
    for k in range(n):
        tr = np.trace(t, axis1=k, axis2=n + k)
        t = -t
        for a in range(dims[k]):
            idx = [slice(None)] * (2 * n)
            idx[k] = a
            idx[n + k] = a
            t[tuple(idx)] += tr
    return t.reshape(mat.shape)


def _subsets(mat: np.ndarray, dims: HilbertDims) -> np.ndarray:
    n = dims.n
    op = DensityOperator(dims, mat, normalized=False)
    out = np.trace(mat) * np.eye(dims.total_dim, dtype=np.complex128)
    for a in range(1, 1 << n):
        red = partial_trace(op, a).mat
        out += (-1) ** popcount(a) * embed(red, dims, a)
    return out


def generator_terms(dims: HilbertDims) -> list[np.ndarray]:
    """All tensor products y_{k1 l1} (x) ... (x) y_{kN lN}, party-1-major order."""
    per_party = [build_basis(d).antisymmetric() for d in dims]
    terms = []
    for combo in itertools.product(*per_party):
        y = combo[0]
        for f in combo[1:]:
            y = np.kron(y, f)
        terms.append(y)
    return terms


def pairwise_sum(items: list):
    """Fixed-order pairwise reduction; bit-stable for a given item order."""
    items = list(items)
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _generators(mat: np.ndarray, dims: HilbertDims, workers: int = 1) -> np.ndarray:
    conj = np.conj(mat)
    terms = generator_terms(dims)

    def one(y):
        return y @ conj @ y

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(one, terms))
    else:
        parts = [one(y) for y in terms]
    return (2 ** dims.n / dims.total_dim) * pairwise_sum(parts)


def tilde_matrix(mat, dims, method: str = "product", hermitian: bool = True) -> np.ndarray:
    """Invert a raw operator on ``dims``.

    Off the Hermitian path the product and subset forms act on ``mat^dag``,
    which is what the antilinear generator form does implicitly.
    """
    dims = as_dims(dims)
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (dims.total_dim, dims.total_dim):
        raise ShapeMismatch(f"operator shape {mat.shape} does not match dims {dims.dims}")
    if method == "generators":
        return _generators(mat, dims)
    if not hermitian:
        mat = mat.conj().T
    if method == "product":
        return _product(mat, dims)
    if method == "subsets":
        return _subsets(mat, dims)
    if method == "bloch":
        return invert_bloch(bloch_decompose(DensityOperator(dims, mat, normalized=False))).mat
    raise ValueError(f"unknown method {method!r}")


# ----------------------------------------------------------------- public forms

def invert_product(rho: StateLike) -> DensityOperator:
    rho = as_density(rho)
    return DensityOperator(rho.dims, _product(rho.mat, rho.dims), normalized=False)


def invert_subsets(rho: StateLike) -> DensityOperator:
    rho = as_density(rho)
    return DensityOperator(rho.dims, _subsets(rho.mat, rho.dims), normalized=False)


def invert_generators(rho: StateLike, workers: int = 1) -> DensityOperator:
    rho = as_density(rho)
    return DensityOperator(rho.dims, _generators(rho.mat, rho.dims, workers), normalized=False)


def invert(rho: StateLike, method: str = "product") -> DensityOperator:
    rho = as_density(rho)
    if method == "bloch":
        return invert_bloch(bloch_decompose(rho))
    fn = {"product": invert_product, "subsets": invert_subsets,
          "generators": invert_generators}.get(method)
    if fn is None:
        raise ValueError(f"unknown method {method!r}")
    return fn(rho)


def tr_rho_rhotilde(rho: StateLike) -> float:
    """Tr(rho rho~), a non-negative local-unitary invariant."""
    rho = as_density(rho)
    t = _product(rho.mat, rho.dims)
    val = np.einsum("ij,ji->", rho.mat, t)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ConsistencyError(f"Tr(rho rho~) has imaginary part {val.imag:.3g}")
    return float(val.real)


def method_residuals(rho: StateLike) -> dict[str, float]:
    """Max entrywise deviation of each inversion form from the product form."""
    rho = as_density(rho)
    ref = invert_product(rho).mat
    out = {}
    for m in METHODS[1:]:
        if m == "bloch" and len(set(rho.dims)) != 1:
            continue
        out[m] = float(np.abs(invert(rho, m).mat - ref).max())
    return out


# ----------------------------------------------------------------- Bloch form

@dataclass(frozen=True, eq=False)
class BlochDecomposition:
    """r_{j1..jN} = Tr(rho g_{j1} (x) ... (x) g_{jN}); rho = (1/d_tot) sum r g...g."""
    dims: HilbertDims
    r: np.ndarray  # shape (d_1^2, ..., d_N^2)

    @property
    def equal_dims(self) -> bool:
        return len(set(self.dims)) == 1

    def nontrivial_count(self) -> np.ndarray:
        """Number of non-identity generators for every multi-index."""
        grids = np.meshgrid(*[np.arange(d * d) for d in self.dims], indexing="ij")
        return sum((g != 0).astype(int) for g in grids)

    def is_real(self, tol: float = 1e-10) -> bool:
        return bool(np.abs(self.r.imag).max() <= tol)

    def _build(self, coeffs) -> np.ndarray:
        t = np.asarray(coeffs, dtype=np.complex128)
        n = self.dims.n
        # contract one generator index at a time: (j1..jN) -> (a1 b1 ... aN bN)
        out = t
        for k, d in enumerate(self.dims):
            h = build_basis(d).h
            out = np.tensordot(out, h, axes=([0], [0]))
        # axes now (a1, b1, a2, b2, ...)
        perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
        return out.transpose(perm).reshape(self.dims.total_dim, self.dims.total_dim)

    def reconstruct(self) -> np.ndarray:
        return self._build(self.r) / self.dims.total_dim

    def group(self, q: int) -> np.ndarray:
        """P_q: the sum of terms with exactly q nontrivial generators (no 1/d_tot)."""
        if not self.equal_dims:
            raise UnequalDims("grouping by generator count needs equal local dimensions")
        return self._build(np.where(self.nontrivial_count() == q, self.r, 0))


def bloch_decompose(rho: StateLike) -> BlochDecomposition:
    rho = as_density(rho)
    dims = rho.dims
    n = dims.n
    t = rho.mat.reshape(dims.dims * 2)
    # r_j = sum_{a,b} rho[a,b] prod_k g_{j_k}[b_k, a_k]
    for k, d in enumerate(dims):
        h = build_basis(d).h
        # contract current leading (a_k, b_k) pair with h[j, b, a]
        t = np.tensordot(t, h, axes=([0, n - k], [2, 1]))
    return BlochDecomposition(dims, t)


def invert_bloch(b: BlochDecomposition) -> DensityOperator:
    if not b.equal_dims:
        raise UnequalDims("Bloch-form inversion needs equal local dimensions")
    d = b.dims[0]
    n = b.dims.n
    acc = sum((-1) ** q * (d - 1) ** (n - q) * b.group(q) for q in range(n + 1))
    return DensityOperator(b.dims, acc / d ** n, normalized=False)


def tilde_trace_expected(dims) -> int:
    return int(np.prod([d - 1 for d in as_dims(dims)]))
