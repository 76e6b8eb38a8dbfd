"""Monotonicity of the distributed concurrence under two-outcome local channels.

Channels act on party 1 only and are diagonal in its Schmidt basis:
A1 = diag(sqrt(D_j)), A2 = diag(sqrt(1 - D_j)).  Writing the state as
psi = sum_j |e_j> (x) |f_j>, every quantity reduces to the slice
F_{kjjk} = <f_k| (|f_j><f_j|)~ |f_k> of the F tensor and the channel diagonal D.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .correlation import cd_generators
from .errors import ConsistencyError, ShapeMismatch
from .inversion import _product, tilde_matrix
from .qstate import HilbertDims, PureState, SeedLike, _rng, as_dims, as_pure, random_pure

VIOLATION_TOL = 1e-8
ROUTE_TOL = 1e-9


# ------------------------------------------------------------ Schmidt data

@dataclass(frozen=True, eq=False)
class SchmidtFirstParty:
    lambdas: np.ndarray  # descending, sums to 1
    basis: np.ndarray  # columns e_j in the computational basis of party 1
    fbar: np.ndarray  # rows: orthonormal vectors on parties 2..N (zero rows if lambda_j = 0)
    rest: HilbertDims

    @property
    def f(self) -> np.ndarray:
        """Subnormalized vectors f_j = sqrt(lambda_j) fbar_j."""
        return np.sqrt(self.lambdas)[:, None] * self.fbar

    def reconstruct(self) -> np.ndarray:
        return np.einsum("aj,jb->ab", self.basis, self.f).reshape(-1)


def schmidt_first_party(psi, diag_tol: float = 1e-12) -> SchmidtFirstParty:
    """psi = sum_j sqrt(lambda_j) |e_j>|fbar_j> with lambda descending.

    If the first-party marginal is already diagonal the computational basis is
    kept (stable sort by weight), so degenerate spectra get a canonical basis.
    """
    psi = as_pure(psi)
    d1 = psi.dims[0]
    rest = HilbertDims(psi.dims.dims[1:])
    m = psi.amp.reshape(d1, -1)
    rho1 = m @ m.conj().T
    off = rho1 - np.diag(np.diag(rho1))
    if np.abs(off).max() <= diag_tol:
        lam = np.diag(rho1).real.clip(min=0)
        order = np.argsort(-lam, kind="stable")
        basis = np.eye(d1, dtype=complex)[:, order]
        lam = lam[order]
        rows = m[order]
    else:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        lam = np.zeros(d1)
        lam[: s.size] = s ** 2
        basis = u if u.shape[1] == d1 else np.linalg.qr(
            np.hstack([u, np.eye(d1)]))[0][:, :d1]
        rows = basis.conj().T @ m
    norms = np.sqrt(lam)
    fbar = np.zeros_like(rows)
    nz = norms > 1e-14
    fbar[nz] = rows[nz] / norms[nz, None]
    tot = lam.sum()
    return SchmidtFirstParty(lam / tot if tot > 0 else lam, basis, fbar, rest)


# ------------------------------------------------------------ channels

@dataclass(frozen=True, eq=False)
class TwoOutcomeChannel:
    d1: int
    D: np.ndarray

    def __init__(self, D):
        D = np.asarray(D, dtype=float).ravel()
        if np.any(D < 0) or np.any(D > 1):
            raise ValueError("channel diagonal must lie in [0, 1]")
        object.__setattr__(self, "d1", D.size)
        object.__setattr__(self, "D", D)

    def kraus(self, basis=None) -> tuple[np.ndarray, np.ndarray]:
        """Kraus pair in the computational basis; ``basis`` columns are the e_j."""
        a1 = np.diag(np.sqrt(self.D))
        a2 = np.diag(np.sqrt(1.0 - self.D))
        if basis is None:
            return a1.astype(complex), a2.astype(complex)
        u = np.asarray(basis)
        return u @ a1 @ u.conj().T, u @ a2 @ u.conj().T

    def completeness_residual(self, basis=None) -> float:
        a1, a2 = self.kraus(basis)
        return float(np.abs(a1.conj().T @ a1 + a2.conj().T @ a2 - np.eye(self.d1)).max())


# ------------------------------------------------------------ F tensor

@dataclass(frozen=True, eq=False)
class FTensor:
    values: np.ndarray  # F[k, l, m, j]

    @property
    def diagonal(self) -> np.ndarray:
        """M[k, j] = F_{kjjk}."""
        r = self.values.shape[0]
        idx = np.arange(r)
        return self.values[idx[:, None], idx[None, :], idx[None, :], idx[:, None]].real

    def symmetry_residual(self) -> float:
        """max |F_klmj - F_lkjm|."""
        return float(np.abs(self.values - self.values.transpose(1, 0, 3, 2)).max())

    def antisymmetry_residual(self) -> float:
        """max |F_klmj + F_lkmj|."""
        return float(np.abs(self.values + self.values.transpose(1, 0, 2, 3)).max())


def _check_fvecs(fvecs, dims):
    dims = as_dims(dims)
    f = np.atleast_2d(np.asarray(fvecs, dtype=complex))
    if f.shape[1] != dims.total_dim:
        raise ShapeMismatch(f"vectors of length {f.shape[1]} do not live on dims {dims.dims}")
    return f, dims


def f_tensor(fvecs, dims) -> FTensor:
    """F_klmj = <f_k| (|f_l><f_m|)~ |f_j>, inverting each non-Hermitian |f_l><f_m|
    with the antilinear generator form."""
    f, dims = _check_fvecs(fvecs, dims)
    r = f.shape[0]
    out = np.empty((r, r, r, r), dtype=complex)
    for l in range(r):
        for m in range(r):
            t = tilde_matrix(np.outer(f[l], f[m].conj()), dims, method="generators")
            out[:, l, m, :] = f.conj() @ t @ f.T
    return FTensor(out)


def f_diagonal(fvecs, dims) -> np.ndarray:
    """M[k, j] = F_{kjjk}, from r Hermitian product-form inversions."""
    f, dims = _check_fvecs(fvecs, dims)
    r = f.shape[0]
    out = np.empty((r, r))
    for j in range(r):
        t = _product(np.outer(f[j], f[j].conj()), dims)
        out[:, j] = np.einsum("ka,ab,kb->k", f.conj(), t, f).real
    return out


# ------------------------------------------------------------ verdicts

@dataclass
class MonotoneVerdict:
    target: str
    lhs: float
    rhs: float
    deficit: float
    violated: bool
    p1: float
    p2: float
    branch_cd: tuple  # C_D of the normalized post-measurement states
    route_residual: float = 0.0
    f_route: dict = field(default_factory=dict)


def _branch(psi: PureState, op: np.ndarray):
    d1 = psi.dims[0]
    v = (op @ psi.amp.reshape(d1, -1)).reshape(-1)
    p = float(np.vdot(v, v).real)
    if p <= 0:
        return p, 0.0
    return p, cd_generators(PureState(psi.dims, v / np.sqrt(p)))


def _evaluate(psi, ch: TwoOutcomeChannel, square: bool, tol: float, check_routes: bool):
    psi = as_pure(psi)
    if ch.d1 != psi.dims[0]:
        raise ShapeMismatch(f"channel acts on dimension {ch.d1}, party 1 has {psi.dims[0]}")
    sch = schmidt_first_party(psi)
    a1, a2 = ch.kraus(sch.basis)
    p1, c1 = _branch(psi, a1)
    p2, c2 = _branch(psi, a2)
    c0 = cd_generators(psi)
    cd2 = c0 * c0
    if square:
        lhs = cd2
        rhs = (p1 * c1 ** 2 if p1 > 0 else 0.0) + (p2 * c2 ** 2 if p2 > 0 else 0.0)
    else:
        lhs = c0
        rhs = p1 * c1 + p2 * c2
    deficit = lhs - rhs

    # same quantities from F_{kjjk} and D; compared under the square roots.
    # The reduction to F_{kjjk} needs F antisymmetric, i.e. an even party count;
    # for odd N every C_D vanishes and there is nothing to cross-check.
    route = {}
    resid = 0.0
    if check_routes and psi.dims.n % 2 == 0:
        fd = f_diagonal(sch.f, sch.rest)
        D = ch.D
        tot = 2 * fd.sum()
        b1 = 2 * np.einsum("kj,j,k->", fd, D, D)
        b2 = 2 * np.einsum("kj,j,k->", fd, 1 - D, 1 - D)
        q1 = float(sch.lambdas @ D)
        direct = np.array([cd2, p1 * p1 * c1 ** 2, p2 * p2 * c2 ** 2])
        resid = float(np.abs(direct - np.array([tot, b1, b2])).max())
        resid = max(resid, abs(q1 - p1))
        if resid > ROUTE_TOL:
            raise ConsistencyError(f"direct and F-tensor routes disagree by {resid:.3g}")
        if square:
            f_rhs = (b1 / q1 if q1 > 0 else 0.0) + (b2 / (1 - q1) if q1 < 1 else 0.0)
            route = dict(lhs=float(tot), rhs=float(f_rhs))
        else:
            f_rhs = np.sqrt(max(b1, 0.0)) + np.sqrt(max(b2, 0.0))
            route = dict(lhs=float(np.sqrt(max(tot, 0.0))), rhs=float(f_rhs))
        route["weights_sum"] = float(fd.sum())
    return MonotoneVerdict("cd2" if square else "cd", float(lhs), float(rhs), float(deficit),
                           bool(deficit < -tol), p1, p2, (c1, c2), resid, route)


def monotone_deficit_cd(psi, ch: TwoOutcomeChannel, tol: float = VIOLATION_TOL,
                        check_routes: bool = True) -> MonotoneVerdict:
    """C_D(psi) - [p1 C_D(psi_1) + p2 C_D(psi_2)] for the normalized branches psi_i."""
    return _evaluate(psi, ch, False, tol, check_routes)


def monotone_deficit_cd2(psi, ch: TwoOutcomeChannel, tol: float = VIOLATION_TOL,
                         check_routes: bool = True) -> MonotoneVerdict:
    """C_D^2(psi) - [p1 C_D^2(psi_1) + p2 C_D^2(psi_2)]."""
    return _evaluate(psi, ch, True, tol, check_routes)


# ------------------------------------------------------------ weight-form check

def mon3_check(w, D) -> float:
    """(sum_jk w_jk D_j)^2 - sum_jk w_jk D_j D_k; negative means violation."""
    w = np.asarray(w, dtype=float)
    D = np.asarray(D, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] != D.size:
        raise ShapeMismatch("weights must be r x r with r = len(D)")
    if np.abs(w - w.T).max() > 1e-12:
        raise ValueError("weight matrix must be symmetric")
    if abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return float(_kernels.mon3_margins(w[None], D[None])[0])


def mon3_margins(w, D) -> np.ndarray:
    """Batched ``mon3_check`` without validation; shapes (B, r, r) and (B, r)."""
    return _kernels.mon3_margins(np.ascontiguousarray(w, dtype=float),
                                 np.ascontiguousarray(D, dtype=float))


def random_weights(r: int, size: int, seed: SeedLike = None, alpha: float = 1.0) -> np.ndarray:
    """Symmetric non-negative zero-diagonal weights summing to 1 (Dirichlet on pairs)."""
    rng = _rng(seed)
    iu = np.triu_indices(r, 1)
    x = rng.dirichlet(np.full(len(iu[0]), alpha), size=size) / 2
    w = np.zeros((size, r, r))
    w[:, iu[0], iu[1]] = x
    w[:, iu[1], iu[0]] = x
    return w


# ------------------------------------------------------------ counterexamples

def builtin_counterexample() -> tuple[PureState, TwoOutcomeChannel]:
    """Four-party (4, 2, 2, 2) state and projective channel violating both conditions."""
    t = np.zeros((4, 2, 2, 2))
    for digits, sign in [("0000", 1), ("0011", 1), ("1100", 1), ("1111", 1),
                         ("2000", 1), ("2011", -1), ("3100", -1), ("3111", 1)]:
        t[tuple(int(c) for c in digits)] = sign
    psi = PureState.from_tensor(t / np.sqrt(8))
    return psi, TwoOutcomeChannel([1, 1, 0, 0])


def extremal_fbar(d1: int, env_dims, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal environment vectors with spread-out F-bar entries.

    A random psi_1 on an odd number of environment parties is a null vector of
    its own inverted projector.  It is joined by eigenvectors of that operator
    at evenly spaced ranks of its nonzero spectrum (min, ..., max).
    Returns (fbar rows, Fbar_{kjjk} matrix, chosen eigenvalues).
    """
    env = as_dims(env_dims)
    psi1 = random_pure(env, rng).amp
    pt = _product(np.outer(psi1, psi1.conj()), env)
    w, v = np.linalg.eigh((pt + pt.conj().T) / 2)
    nz = np.flatnonzero(w > 1e-10 * max(1.0, w.max()))
    if nz.size < d1 - 1:
        raise ValueError(f"environment {env.dims} offers only {nz.size} nonzero eigenvalues; "
                         f"need {d1 - 1}")
    pick = nz[np.round(np.linspace(0, nz.size - 1, d1 - 1)).astype(int)]
    fbar = np.vstack([psi1[None], v[:, pick].T])
    return fbar, f_diagonal(fbar, env), w[pick]


@dataclass
class SearchResult:
    d1: int
    target: str
    margin: float
    trial: int
    lambdas: np.ndarray
    D: np.ndarray
    fbar: np.ndarray
    fbar_matrix: np.ndarray
    env_dims: tuple
    trials: int
    workers: int
    seed: int

    @property
    def violated(self) -> bool:
        return self.margin < -VIOLATION_TOL

    def state(self) -> PureState:
        """psi = sum_j sqrt(lambda_j) |j> (x) |fbar_j> with lambda sorted descending."""
        amp = np.einsum("j,jb->jb", np.sqrt(self.lambdas), self.fbar).reshape(-1)
        return PureState((self.d1,) + tuple(self.env_dims), amp / np.linalg.norm(amp))

    def channel(self) -> TwoOutcomeChannel:
        return TwoOutcomeChannel(self.D)


def _worker(d1, square, n_trials, offset, seq, env_dims, block, refine):
    rng = np.random.default_rng(seq)
    best = (np.inf, -1, None, None, None, None)
    done = 0
    while done < n_trials:
        nb = min(block, n_trials - done)
        fbar, fmat, _ = extremal_fbar(d1, env_dims, rng)
        lam = rng.dirichlet(np.ones(d1), size=nb)
        dv = rng.random((nb, d1))
        m = _kernels.search_margins(fmat, lam, dv, square)
        i = int(np.argmin(m))
        if m[i] < best[0]:
            best = (float(m[i]), offset + done + i, lam[i].copy(), dv[i].copy(), fbar, fmat)
        done += nb
    margin, trial, lam, dv, fbar, fmat = best
    # coordinate perturbation with step halving around the best draw
    step = 0.25
    for _ in range(refine):
        cand_l = np.abs(lam + step * rng.standard_normal((32, d1)))
        cand_l /= cand_l.sum(axis=1, keepdims=True)
        cand_d = np.clip(dv + step * rng.standard_normal((32, d1)), 0.0, 1.0)
        m = _kernels.search_margins(fmat, cand_l, cand_d, square)
        i = int(np.argmin(m))
        if m[i] < margin:
            margin, lam, dv = float(m[i]), cand_l[i], cand_d[i]
        else:
            step *= 0.5
            if step < 1e-6:
                step = 0.25
    return margin, trial, lam, dv, fbar, fmat


def search_violation(d1: int, target: str = "cd", trials: int = 100_000, seed: int = 0,
                     workers: int = 1, env_dims=(3, 3, 3), block: int = 1000,
                     refine: int = 200) -> SearchResult:
    """Random search for (lambda, D) violating the C_D ("cd") or C_D^2 ("cd2") condition.

    Each worker uses its own stream spawned from ``seed``; the best result is
    chosen by (margin, trial index), so output is reproducible for a fixed
    worker count.
    """
    if d1 < 3:
        raise ValueError("search needs d1 >= 3")
    if target not in ("cd", "cd2"):
        raise ValueError(f"target must be 'cd' or 'cd2', got {target!r}")
    if as_dims(env_dims).n % 2 == 0:
        raise ValueError("environment must have an odd number of parties")
    square = target == "cd2"
    seqs = np.random.SeedSequence(seed).spawn(workers)
    shares = [trials // workers + (1 if w < trials % workers else 0) for w in range(workers)]
    offsets = np.concatenate([[0], np.cumsum(shares)[:-1]]).astype(int)
    args = [(d1, square, shares[w], int(offsets[w]), seqs[w], env_dims, block, refine)
            for w in range(workers)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda a: _worker(*a), args))
    else:
        results = [_worker(*args[0])]
    margin, trial, lam, dv, fbar, fmat = min(results, key=lambda r: (r[0], r[1]))
    order = np.argsort(-lam, kind="stable")
    return SearchResult(d1, target, margin, trial, lam[order], dv[order], fbar[order],
                        fmat[np.ix_(order, order)], tuple(env_dims), trials, workers, seed)
