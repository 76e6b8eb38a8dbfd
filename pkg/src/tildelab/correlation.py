"""Concurrence-type invariants, the linear-entropy ledger and the relations between them."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConsistencyError, NotHermitian, PureStateRequired, ShapeMismatch
from .gellmann import build_basis
from .inversion import _product, tr_rho_rhotilde
from .qstate import (DensityOperator, PureState, StateLike, as_density, as_pure, complement,
                     default_tol, embed, linear_entropy, partial_trace, popcount, subsets)


def _pure(psi: StateLike) -> PureState:
    try:
        return as_pure(psi)
    except PureStateRequired:
        raise PureStateRequired("a pure state is required") from None


def concurrence_bipartite(psi: StateLike, split: int) -> float:
    """sqrt(2 - Tr rho_A^2 - Tr rho_Abar^2) for the bipartition ``split | rest``."""
    psi = _pure(psi)
    n = psi.dims.n
    if not 0 < split < psi.dims.full_mask:
        raise ValueError(f"split {split:#b} is not a proper nonempty subset")
    pa = partial_trace(psi, split).purity()
    pb = partial_trace(psi, complement(split, n)).purity()
    return float(np.sqrt(max(0.0, 2.0 - pa - pb)))


# ------------------------------------------------------------ distributed concurrence

def cd_squared_trace(psi: PureState) -> float:
    """<psi| Pi~ |psi> with Pi~ from the product-form inverter (homogeneous of degree 4)."""
    amp = psi.amp
    t = _product(np.outer(amp, amp.conj()), psi.dims)
    return float(np.vdot(amp, t @ amp).real)


def _apply_local(t: np.ndarray, op: np.ndarray, k: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, t, axes=([1], [k])), 0, k)


_BATCH_LIMIT = 1 << 22


def generator_overlaps(psi: PureState) -> np.ndarray:
    """s_y = <psi*| y |psi> for every tensor product y of antisymmetric generators.

    Parties at the end are handled as a batch; leading parties are looped over
    when the batch would get too large.
    """
    dims = psi.dims
    stacks = [build_basis(d).antisymmetric() for d in dims]
    n = dims.n
    split = n
    size = dims.total_dim
    while split > 0 and size * len(stacks[split - 1]) <= _BATCH_LIMIT:
        split -= 1
        size *= len(stacks[split])
    t = psi.tensor()
    out = []
    for combo in itertools.product(*stacks[:split]):
        v = t
        for k, y in enumerate(combo):
            v = _apply_local(v, y, k)
        # batch axes for parties split..n-1 are prepended one by one
        for k in range(split, n):
            nb = k - split
            r = np.tensordot(stacks[k], v, axes=([2], [nb + k]))  # (m, d_k, batch, rest)
            v = np.moveaxis(np.moveaxis(r, 1, 1 + nb + k), 0, nb)
        out.append(np.tensordot(v, t, axes=(list(range(n - split, 2 * n - split)),
                                            list(range(n)))).reshape(-1))
    return np.concatenate(out)


def cd_squared_generators(psi: PureState) -> float:
    """(-1)^N (2^N/d_tot) sum_y |<psi*| y |psi>|^2."""
    dims = psi.dims
    s = generator_overlaps(psi)
    return float((-1) ** dims.n * 2 ** dims.n / dims.total_dim * np.vdot(s, s).real)


def cd_generators(psi: PureState) -> float:
    """C_D as sqrt(2^N/d_tot) times the norm of the overlap vector.

    Unlike the square root of the trace form this is accurate to rounding
    level near C_D = 0.  For odd N every overlap vanishes (an odd tensor
    product of antisymmetric matrices is antisymmetric), so the value is the
    rounding residue.
    """
    s = generator_overlaps(psi)
    return float(np.sqrt(2 ** psi.dims.n / psi.dims.total_dim) * np.linalg.norm(s))


def distributed_concurrence(psi: StateLike, tol: float | None = None) -> float:
    """C_D from the generator sum, cross-checked against Tr(Pi Pi~).

    Raises ``ConsistencyError`` if the two forms of C_D^2 disagree by more
    than ``tol`` (relative to the fourth power of the norm of ``psi``).
    """
    psi = _pure(psi)
    tol = default_tol(psi.dims.total_dim) if tol is None else tol
    a = cd_squared_trace(psi)
    b = cd_squared_generators(psi)
    scale = max(1.0, psi.norm ** 4)
    if abs(a - b) > tol * scale:
        raise ConsistencyError(f"C_D^2 trace form {a!r} vs generator form {b!r}")
    return cd_generators(psi)


def projector_identity_residual(psi: StateLike) -> float:
    """max |Pi Pi~ Pi - C_D^2 Pi|."""
    psi = _pure(psi)
    p = np.outer(psi.amp, psi.amp.conj())
    pt = _product(p, psi.dims)
    return float(np.abs(p @ pt @ p - cd_squared_trace(psi) * p).max())


# ------------------------------------------------------------ entropy ledger

@dataclass(frozen=True)
class EntropyLedger:
    dims: tuple
    entries: dict  # subset mask -> tau_A
    tr_rho_rhotilde: float

    @property
    def n(self) -> int:
        return len(self.dims)

    def tau(self, mask: int) -> float:
        return self.entries[mask]

    def alternating_sum(self, proper_only: bool = False) -> float:
        full = (1 << self.n) - 1
        return float(sum((-1) ** (popcount(m) + 1) * t for m, t in self.entries.items()
                         if not (proper_only and m == full)))

    def ordered(self) -> list[int]:
        return sorted(self.entries, key=lambda m: (popcount(m), m))


def entropy_ledger(rho: StateLike, workers: int = 1) -> EntropyLedger:
    """tau_A = 2(1 - Tr rho_A^2) for every nonempty subset, plus Tr(rho rho~)."""
    n = rho.dims.n
    masks = subsets(n)

    def one(m):
        return linear_entropy(partial_trace(rho, m))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            taus = list(ex.map(one, masks))
    else:
        taus = [one(m) for m in masks]
    return EntropyLedger(rho.dims.dims, dict(zip(masks, taus)), tr_rho_rhotilde(rho))


class MixedEquality(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def verify_mixed_equality(rho: StateLike, ledger: EntropyLedger | None = None) -> MixedEquality:
    """lhs = 2 Tr(rho rho~), rhs = sum_{A nonempty} (-1)^{|A|+1} tau_A."""
    led = entropy_ledger(rho) if ledger is None else ledger
    lhs = 2.0 * led.tr_rho_rhotilde
    rhs = led.alternating_sum()
    return MixedEquality(lhs, rhs, abs(lhs - rhs))


@dataclass
class MonogamyReport:
    cd_squared: float
    alternating_sum: float
    concurrence_sum: float
    residual: float
    table: list = field(default_factory=list)  # (mask, |A|, tau_A, sign)

    @property
    def cd(self) -> float:
        return float(np.sqrt(max(self.cd_squared, 0.0)))


def monogamy_report(psi: StateLike) -> MonogamyReport:
    """Both sides of 2 C_D^2 = sum_{0<|A|<N} (-1)^{|A|+1} C^2_{A|Abar} for a pure state."""
    psi = _pure(psi)
    cd = distributed_concurrence(psi)
    led = entropy_ledger(psi)
    n = psi.dims.n
    full = psi.dims.full_mask
    table = [(m, popcount(m), led.tau(m), (-1) ** (popcount(m) + 1)) for m in led.ordered()]
    conc = 0.0
    for m in led.ordered():
        if m == full:
            continue
        c2 = 0.5 * (led.tau(m) + led.tau(complement(m, n)))
        conc += (-1) ** (popcount(m) + 1) * c2
    alt = led.alternating_sum()
    return MonogamyReport(cd * cd, alt, conc, abs(2 * cd * cd - alt), table)


def three_party_inequality(rho: StateLike) -> float:
    """(tau_A + tau_B + tau_C + tau_ABC) - (tau_AB + tau_AC + tau_BC); never negative."""
    if rho.dims.n != 3:
        raise ValueError(f"three-party inequality needs exactly 3 parties, got {rho.dims.n}")
    t = {m: linear_entropy(partial_trace(rho, m)) for m in range(1, 8)}
    return (t[1] + t[2] + t[4] + t[7]) - (t[3] + t[5] + t[6])


# ------------------------------------------------------------ conservation laws

def conserved_subsets(n: int, s: int) -> list[int]:
    """Nonempty subsets that contain all of ``s`` or none of it."""
    return [a for a in subsets(n) if a & s == s or a & s == 0]


def conservation_combination(rho, s: int) -> float:
    """sum over A with S subset of A or S disjoint from A of (-1)^{|A|} tau_A.

    ``rho`` may be a state or a precomputed ``EntropyLedger``.
    """
    if s <= 0:
        raise ValueError("subset S must be nonempty")
    if isinstance(rho, EntropyLedger):
        n = rho.n
        return float(sum((-1) ** popcount(a) * rho.tau(a) for a in conserved_subsets(n, s)))
    n = rho.dims.n
    return float(sum((-1) ** popcount(a) * linear_entropy(partial_trace(rho, a))
                     for a in conserved_subsets(n, s)))


def subsystem_unitary(h, t: float) -> np.ndarray:
    """exp(-i H t) for Hermitian H via eigendecomposition."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeMismatch(f"Hamiltonian must be square, got {h.shape}")
    if np.abs(h - h.conj().T).max() > 1e-12 * max(1.0, np.abs(h).max()):
        raise NotHermitian("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve_subsystem(rho: StateLike, s: int, h, t: float) -> DensityOperator:
    """U rho U^dag with U = exp(-i H t) acting on the parties in ``s``."""
    rho = as_density(rho)
    u = embed(subsystem_unitary(h, t), rho.dims, s)
    out = u @ rho.mat @ u.conj().T
    return DensityOperator(rho.dims, (out + out.conj().T) / 2, rho.normalized)


@dataclass
class ConservationRun:
    times: np.ndarray
    combination: np.ndarray
    taus: dict  # mask -> array over time
    subset: int
    n: int

    @property
    def drift(self) -> float:
        return float(np.abs(self.combination - self.combination[0]).max())

    def variation(self, mask: int) -> float:
        x = self.taus[mask]
        return float(x.max() - x.min())

    def partial_overlap(self) -> list[int]:
        return [a for a in self.taus if a & self.subset and a & self.subset != self.subset]


def track_conservation(rho: StateLike, s: int, h, steps: int, dt: float) -> ConservationRun:
    """Evolve under exp(-i H t) on ``s`` and record every tau_A and the conserved sum."""
    rho = as_density(rho)
    n = rho.dims.n
    times = dt * np.arange(steps + 1)
    u_step = embed(subsystem_unitary(h, dt), rho.dims, s)
    cur = rho.mat
    combo = []
    taus = {a: [] for a in subsets(n)}
    for _ in times:
        led = {a: linear_entropy(partial_trace(DensityOperator(rho.dims, cur, rho.normalized), a))
               for a in taus}
        for a, v in led.items():
            taus[a].append(v)
        combo.append(sum((-1) ** popcount(a) * led[a] for a in conserved_subsets(n, s)))
        cur = u_step @ cur @ u_step.conj().T
    return ConservationRun(times, np.array(combo), {a: np.array(v) for a, v in taus.items()}, s, n)
