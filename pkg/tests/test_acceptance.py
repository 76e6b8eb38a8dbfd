"""Acceptance suite: nine criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from tildelab import correlation as corr
from tildelab import gellmann as gm
from tildelab import inversion as inv
from tildelab import monotone as mono
from tildelab import qstate as qs


LINES = []  # echoed again in the pytest terminal summary (see conftest.py)


def report(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {detail}"
    LINES.append(line)
    print(line, flush=True)
    return ok


def bell():
    return qs.PureState((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))


# ---------------------------------------------------------------------------

def criterion_1():
    keys = ["normalization", "trace_identity", "transpose_identity", "swap_completeness",
            "bell_swap", "bell_swap_generators"]
    worst = {}
    for d in range(2, 6):
        res = gm.identity_residuals(d, n_random=100, seed=100 + d)
        for k in keys:
            worst[k] = max(worst.get(k, 0.0), res[k])
    top = max(worst.values())
    return report(1, top < 1e-12, f"generator identities d=2..5, max residual {top:.2e} (< 1e-12)")


def criterion_2():
    rng = np.random.default_rng(2)
    profiles = [(2, 2), (3, 3), (2, 3, 2), (4, 2, 2, 2), (3, 3, 3)]
    disagree = tr_err = 0.0
    min_eig = np.inf
    for dims in profiles:
        expect = inv.tilde_trace_expected(dims)
        total = int(np.prod(dims))
        for _ in range(100):
            rho = qs.random_mixed(dims, int(rng.integers(1, total + 1)), rng)
            disagree = max(disagree, max(inv.method_residuals(rho).values()))
            t = inv.invert_product(rho)
            tr_err = max(tr_err, abs(t.trace - expect))
            min_eig = min(min_eig, float(np.linalg.eigvalsh(t.mat).min()))
    ok = disagree < 1e-10 and tr_err < 1e-10 and min_eig >= -1e-10
    return report(2, ok, f"four inverter forms: max disagreement {disagree:.2e}, "
                         f"trace error {tr_err:.2e}, min eigenvalue {min_eig:.2e}")


def criterion_3():
    rng = np.random.default_rng(3)
    profiles = [(2, 2), (2, 3), (3, 3), (2, 2, 2), (2, 3, 4), (4, 4), (3, 5),
                (2, 2, 2, 2), (3, 3, 3), (2, 2, 2, 2, 2), (4, 4, 4), (2, 2, 2, 2, 2, 2),
                (2, 2, 2, 2, 2, 2, 2), (4, 4, 4, 4), (2,) * 8, (4, 8, 8)]
    worst = 0.0
    for i in range(500):
        dims = profiles[i % len(profiles)]
        total = int(np.prod(dims))
        rank = int(rng.integers(1, min(total, 16) + 1))
        worst = max(worst, corr.verify_mixed_equality(qs.random_mixed(dims, rank, rng)).residual)
    return report(3, worst < 1e-9, f"mixed-state equality on 500 states up to total_dim 256, "
                                   f"max residual {worst:.2e} (< 1e-9)")


def criterion_4():
    # both forms compute C_D^2, so their agreement is measured there; C_D itself
    # comes from the library (the generator sum, rounding-accurate near zero)
    route = 0.0
    even_gap = 0.0

    def cd_of(psi):
        nonlocal route, even_gap
        a, b = corr.cd_squared_trace(psi), corr.cd_squared_generators(psi)
        route = max(route, abs(a - b))
        cd = corr.distributed_concurrence(psi, tol=1e-10)
        if psi.dims.n % 2 == 0:
            even_gap = max(even_gap, abs(np.sqrt(max(a, 0.0)) - cd))
        return cd

    cd_ghz = cd_of(qs.ghz((2,) * 4))
    cd_bb = cd_of(bell().kron(bell()))
    rng = np.random.default_rng(4)
    odd_max = 0.0
    for i in range(100):
        n = 3 if i % 2 == 0 else 5
        dims = tuple(int(x) for x in rng.integers(2, 4, size=n))
        if len(set(dims)) == 1:
            dims = (5 - dims[0],) + dims[1:]
        odd_max = max(odd_max, cd_of(qs.random_pure(dims, rng)))
    ok = abs(cd_ghz - 1) <= 1e-9 and abs(cd_bb - 1) <= 1e-9 and odd_max <= 1e-10 and route < 1e-10
    return report(4, ok, f"C_D(GHZ4)={cd_ghz:.12f}, C_D(Bell x Bell)={cd_bb:.12f}, "
                         f"max odd-N C_D {odd_max:.2e}, C_D^2 form gap {route:.2e} "
                         f"(C_D gap on even N {even_gap:.1e})")


def criterion_5():
    psi, ch = mono.builtin_counterexample()
    led = corr.entropy_ledger(psi)
    oracle = np.sqrt(led.alternating_sum() / 2)
    cd = corr.distributed_concurrence(psi)
    v = mono.monotone_deficit_cd(psi, ch)
    v2 = mono.monotone_deficit_cd2(psi, ch)
    ok = (abs(cd - 1 / np.sqrt(2)) <= 1e-9 and abs(oracle - 1 / np.sqrt(2)) <= 1e-9
          and abs(v.rhs - 1) <= 1e-9 and abs(v.deficit - (1 / np.sqrt(2) - 1)) <= 1e-9
          and v.violated and abs(v2.lhs - 0.5) <= 1e-9 and abs(v2.rhs - 1) <= 1e-9
          and v2.violated)
    return report(5, ok, f"counterexample C_D={cd:.9f} (ledger {oracle:.9f}), "
                         f"C_D {v.lhs:.6f} vs {v.rhs:.6f}, C_D^2 {v2.lhs:.6f} vs {v2.rhs:.6f}, "
                         f"violated {v.violated}/{v2.violated}")


def criterion_6():
    rng = np.random.default_rng(6)
    counts = {}
    worst = np.inf
    for dims in [(2, 2, 2, 2), (5, 5)]:
        bad = 0
        for _ in range(10_000):
            psi = qs.random_pure(dims, rng)
            ch = mono.TwoOutcomeChannel(rng.random(dims[0]))
            for fn in (mono.monotone_deficit_cd, mono.monotone_deficit_cd2):
                v = fn(psi, ch, check_routes=False)
                worst = min(worst, v.deficit)
                bad += v.deficit < -mono.VIOLATION_TOL
        counts[dims] = bad
    ok = all(c == 0 for c in counts.values())
    return report(6, ok, f"known cases, 1e4 trials each: violations (2,2,2,2)={counts[(2, 2, 2, 2)]}, "
                         f"(5,5)={counts[(5, 5)]}, min deficit {worst:.2e}")


def criterion_7():
    rng = np.random.default_rng(7)
    n = 100_000
    w = mono.random_weights(3, n, rng)
    D = rng.random((n, 3))
    m3 = float(mono.mon3_margins(w, D).min())
    s4 = mono.search_violation(4, "cd", trials=100_000, seed=7)
    s3b = mono.search_violation(3, "cd2", trials=100_000, seed=7)
    s3 = mono.search_violation(3, "cd", trials=100_000, seed=7)
    ok = m3 >= -1e-10 and s4.margin < -1e-8 and s3b.margin < -1e-8 and s3.margin >= -1e-8
    return report(7, ok, f"mon3 min margin {m3:.2e}; search d1=4 cd {s4.margin:.3e}, "
                         f"d1=3 cd2 {s3b.margin:.3e}, d1=3 cd {s3.margin:.2e}")


def criterion_8():
    rng = np.random.default_rng(8)
    worst = np.inf
    for _ in range(10_000):
        dims = tuple(int(x) for x in rng.integers(2, 4, size=3))
        total = int(np.prod(dims))
        rho = qs.random_mixed(dims, int(rng.integers(1, total + 1)), rng)
        worst = min(worst, corr.three_party_inequality(rho))
    return report(8, worst >= -1e-10, f"three-party inequality on 1e4 states, min margin {worst:.3e}")


def criterion_9():
    rho = qs.random_mixed((2, 2, 2, 2), 4, seed=9)
    h = qs.random_hermitian(4, seed=9)
    run = corr.track_conservation(rho, qs.mask_of([1, 3]), h, steps=100, dt=0.05)
    var = max(run.variation(a) for a in run.partial_overlap())
    ok = run.drift < 1e-9 and var > 1e-3
    return report(9, ok, f"conservation over 100 steps: drift {run.drift:.2e}, "
                         f"max partial-overlap variation {var:.3f}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("crit", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(crit):
    assert crit()


if __name__ == "__main__":
    t0 = time.perf_counter()
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed in {time.perf_counter() - t0:.1f}s")
    sys.exit(0 if all(results) else 1)
