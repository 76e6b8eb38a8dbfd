"""State containers, partial traces, linear entropy and random states.

Index convention: party 1 is the most significant digit of the computational
index, ``index = sum_k j_k * prod_{m>k} d_m``.  Subsets of parties are plain
integers (bit k-1 set means party k is in the subset).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels
from .errors import BadDimension, EmptySubset, PureStateRequired, ShapeMismatch, TooManyParties

MAX_TOTAL_DIM = 4096
MAX_PARTIES = 16

SeedLike = Union[int, None, np.random.Generator]


def default_tol(total_dim: int) -> float:
    return 1e-10 if total_dim <= 256 else 1e-9


@dataclass(frozen=True)
class HilbertDims:
    dims: tuple

    def __init__(self, dims):
        if isinstance(dims, HilbertDims):
            dims = dims.dims
        dims = tuple(int(d) for d in np.atleast_1d(dims))
        object.__setattr__(self, "dims", dims)
        if len(dims) < 1:
            raise BadDimension("need at least one party")
        if len(dims) > MAX_PARTIES:
            raise TooManyParties(f"{len(dims)} parties, at most {MAX_PARTIES} supported")
        if any(d < 2 for d in dims):
            raise BadDimension(f"every local dimension must be >= 2, got {dims}")
        if self.total_dim > MAX_TOTAL_DIM:
            raise TooManyParties(f"total dimension {self.total_dim} exceeds {MAX_TOTAL_DIM}")

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def sub(self, mask: int) -> "HilbertDims":
        return HilbertDims([self.dims[k] for k in parties(mask, self.n)])

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, k):
        return self.dims[k]


def as_dims(dims) -> HilbertDims:
    return dims if isinstance(dims, HilbertDims) else HilbertDims(dims)


# ------------------------------------------------------------------ subsets

def subsets(n: int) -> list[int]:
    """All nonempty subset masks of ``n`` parties in increasing order."""
    if not 1 <= n <= MAX_PARTIES:
        raise TooManyParties(f"party count {n} outside 1..{MAX_PARTIES}")
    return list(range(1, 1 << n))


def parties(mask: int, n: int) -> list[int]:
    """0-based party indices contained in ``mask``."""
    return [k for k in range(n) if mask >> k & 1]


def mask_of(party_labels: Iterable[int]) -> int:
    """Mask from 1-based party labels, e.g. ``mask_of([1, 3]) == 0b101``."""
    m = 0
    for p in party_labels:
        if p < 1:
            raise ValueError(f"party labels are 1-based, got {p}")
        m |= 1 << (p - 1)
    return m


def complement(mask: int, n: int) -> int:
    return ((1 << n) - 1) ^ mask


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_label(mask: int, n: int) -> str:
    return "".join(str(k + 1) for k in parties(mask, n))


# ------------------------------------------------------------------ containers

def _readonly(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    dims: HilbertDims
    amp: np.ndarray

    def __init__(self, dims, amp):
        dims = as_dims(dims)
        amp = _readonly(np.ravel(amp))
        if amp.shape != (dims.total_dim,):
            raise ShapeMismatch(f"expected {dims.total_dim} amplitudes, got {amp.shape[0]}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amp", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def normalized(self) -> "PureState":
        return PureState(self.dims, self.amp / self.norm)

    def tensor(self) -> np.ndarray:
        return self.amp.reshape(self.dims.dims)

    @classmethod
    def from_tensor(cls, t) -> "PureState":
        t = np.asarray(t)
        return cls(t.shape, t.reshape(-1))

    def projector(self) -> "DensityOperator":
        return DensityOperator(self.dims, np.outer(self.amp, self.amp.conj()),
                               normalized=abs(self.norm - 1) < 1e-10)

    def kron(self, other: "PureState") -> "PureState":
        return PureState(self.dims.dims + other.dims.dims, np.kron(self.amp, other.amp))


@dataclass(frozen=True)
class DensityOperator:
    dims: HilbertDims
    mat: np.ndarray
    normalized: bool = True

    def __init__(self, dims, mat, normalized=True):
        dims = as_dims(dims)
        mat = _readonly(mat)
        n = dims.total_dim
        if mat.shape != (n, n):
            raise ShapeMismatch(f"expected a {n}x{n} matrix, got shape {mat.shape}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "normalized", bool(normalized))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.mat, self.mat).real)

    def check_physical(self, tol: float | None = None) -> None:
        """Raise ``ValueError`` unless Hermitian, PSD and (if flagged) unit trace."""
        tol = default_tol(self.dims.total_dim) if tol is None else tol
        herm = np.abs(self.mat - self.mat.conj().T).max()
        if herm > tol:
            raise ValueError(f"not Hermitian (residual {herm:.3g})")
        lo = np.linalg.eigvalsh(self.mat).min()
        if lo < -tol:
            raise ValueError(f"not positive semidefinite (min eigenvalue {lo:.3g})")
        if self.normalized and abs(self.trace - 1) > tol:
            raise ValueError(f"trace {self.trace:.6g} differs from 1")


StateLike = Union[PureState, DensityOperator]


def as_density(state: StateLike) -> DensityOperator:
    if isinstance(state, PureState):
        return state.projector()
    return state


def as_pure(state: StateLike, tol: float = 1e-10) -> PureState:
    """Extract the state vector of a pure input, or raise ``PureStateRequired``."""
    if isinstance(state, PureState):
        return state
    w, v = np.linalg.eigh(state.mat)
    if abs(w[-1] - state.trace.real) > tol * max(1.0, abs(state.trace)):
        raise PureStateRequired("input is a mixed state")
    return PureState(state.dims, v[:, -1] * np.sqrt(w[-1]))


# ------------------------------------------------------------------ operations

def partial_trace(state: StateLike, keep: int) -> DensityOperator:
    """Reduced operator on the parties in ``keep``; party order is preserved."""
    dims = state.dims
    if keep <= 0:
        raise EmptySubset("cannot keep an empty set of parties")
    if keep > dims.full_mask:
        raise ValueError(f"mask {keep:#b} names parties beyond {dims.n}")
    sub = dims.sub(keep)
    normalized = getattr(state, "normalized", True)
    if isinstance(state, PureState):
        if keep == dims.full_mask:
            return state.projector()
        keep_p = parties(keep, dims.n)
        rest = [k for k in range(dims.n) if k not in keep_p]
        m = state.tensor().transpose(keep_p + rest).reshape(sub.total_dim, -1)
        return DensityOperator(sub, m @ m.conj().T, normalized=abs(state.norm - 1) < 1e-10)
    if keep == dims.full_mask:
        return state
    return DensityOperator(sub, _kernels.partial_trace(state.mat, dims.dims, keep), normalized)


def linear_entropy(rho) -> float:
    """tau = 2 (1 - Tr rho^2)."""
    m = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"linear entropy needs a square matrix, got shape {m.shape}")
    return 2.0 * (1.0 - float(np.einsum("ij,ji->", m, m).real))


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_pure(dims, seed: SeedLike = None) -> PureState:
    """Haar-random pure state: normalized vector of i.i.d. complex Gaussians."""
    dims = as_dims(dims)
    rng = _rng(seed)
    n = dims.total_dim
    amp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(dims, amp / np.linalg.norm(amp))


def random_mixed(dims, rank: int, seed: SeedLike = None) -> DensityOperator:
    """Marginal of a Haar-random pure state on ``dims`` (x) ancilla of size ``rank``."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    dims = as_dims(dims)
    rng = _rng(seed)
    n = dims.total_dim
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    g /= np.linalg.norm(g)
    rho = g @ g.conj().T
    return DensityOperator(dims, (rho + rho.conj().T) / 2)


def random_unitary(d: int, seed: SeedLike = None) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_local_unitary(dims, seed: SeedLike = None) -> np.ndarray:
    dims = as_dims(dims)
    rng = _rng(seed)
    u = np.eye(1, dtype=complex)
    for d in dims:
        u = np.kron(u, random_unitary(d, rng))
    return u


def random_hermitian(d: int, seed: SeedLike = None) -> np.ndarray:
    rng = _rng(seed)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def embed(op, dims, mask: int) -> np.ndarray:
    """Full-space matrix acting as ``op`` on the parties in ``mask``, identity elsewhere."""
    dims = as_dims(dims)
    keep = parties(mask, dims.n)
    rest = [k for k in range(dims.n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    op = np.asarray(op)
    if op.shape != (dk, dk):
        raise ShapeMismatch(f"operator on parties {[k + 1 for k in keep]} must be {dk}x{dk}")
    dr = int(np.prod([dims[k] for k in rest])) if rest else 1
    big = np.kron(op, np.eye(dr)).reshape([dims[k] for k in keep + rest] * 2)
    order = keep + rest
    inv = [order.index(k) for k in range(dims.n)]
    n = dims.n
    return big.transpose(inv + [n + i for i in inv]).reshape(dims.total_dim, dims.total_dim)


def ghz(dims) -> PureState:
    """(1/sqrt d) sum_j |j...j> for equal local dimensions d."""
    dims = as_dims(dims)
    d = dims[0]
    t = np.zeros(dims.dims, dtype=complex)
    for j in range(d):
        t[(j,) * dims.n] = 1
    return PureState.from_tensor(t / np.sqrt(d))


def basis_state(dims, digits: Sequence[int]) -> PureState:
    dims = as_dims(dims)
    t = np.zeros(dims.dims, dtype=complex)
    t[tuple(digits)] = 1
    return PureState.from_tensor(t)
