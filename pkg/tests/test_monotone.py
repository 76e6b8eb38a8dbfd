import numpy as np
import pytest

from conftest import bell
from tildelab import monotone as mono
from tildelab import qstate as qs
from tildelab.correlation import cd_squared_trace
from tildelab.errors import ShapeMismatch


def test_schmidt_examples():
    s = mono.schmidt_first_party(qs.basis_state((2, 2), (0, 0)))
    assert np.allclose(s.lambdas, [1, 0])
    assert np.allclose(mono.schmidt_first_party(bell()).lambdas, [0.5, 0.5])
    psi, _ = mono.builtin_counterexample()
    s = mono.schmidt_first_party(psi)
    assert np.allclose(s.lambdas, [0.25] * 4)
    assert np.allclose(s.basis, np.eye(4))


def test_schmidt_reconstructs_random_state():
    psi = qs.random_pure((3, 2, 2), seed=4)
    s = mono.schmidt_first_party(psi)
    assert np.abs(s.reconstruct() - psi.amp).max() < 1e-13
    assert np.all(np.diff(s.lambdas) <= 1e-15)
    assert np.abs(s.fbar.conj() @ s.fbar.T - np.eye(3)).max() < 1e-12


def test_f_tensor_two_party_formula():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    F = mono.f_tensor(f, (4,)).values
    g = f.conj() @ f.T  # g[a, b] = <f_a|f_b>
    expect = np.einsum("lm,kj->klmj", g, g) - np.einsum("km,lj->klmj", g, g)
    assert np.abs(F - expect).max() < 1e-12


def test_f_tensor_orthonormal_case():
    F = mono.f_tensor(np.eye(3), (3,))
    assert np.allclose(F.diagonal, 1 - np.eye(3))
    assert np.allclose(F.diagonal, mono.f_diagonal(np.eye(3), (3,)))


def test_f_symmetries():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((3, 12)) + 1j * rng.standard_normal((3, 12))
    odd_rest = mono.f_tensor(f, (2, 3, 2))  # N = 4
    assert odd_rest.symmetry_residual() < 1e-12
    assert odd_rest.antisymmetry_residual() < 1e-12
    even_rest = mono.f_tensor(f[:, :6], (2, 3))  # N = 3
    assert even_rest.symmetry_residual() < 1e-12
    assert even_rest.antisymmetry_residual() > 1e-3
    with pytest.raises(ShapeMismatch):
        mono.f_tensor(f, (2, 2))


def test_cd_squared_from_f():
    psi = qs.random_pure((3, 2, 2, 2), seed=1)
    s = mono.schmidt_first_party(psi)
    assert abs(cd_squared_trace(psi) - 2 * mono.f_diagonal(s.f, s.rest).sum()) < 1e-12


def test_channel_kraus_completeness():
    ch = mono.TwoOutcomeChannel([0.1, 0.5, 1.0])
    assert ch.completeness_residual() < 1e-15
    assert ch.completeness_residual(qs.random_unitary(3, seed=0)) < 1e-14
    with pytest.raises(ValueError):
        mono.TwoOutcomeChannel([1.2, 0])


def test_bell_verdicts_hold():
    rng = np.random.default_rng(5)
    for _ in range(50):
        ch = mono.TwoOutcomeChannel(rng.random(2))
        assert mono.monotone_deficit_cd(bell(), ch).deficit >= -1e-10
        assert mono.monotone_deficit_cd2(bell(), ch).deficit >= -1e-10


def test_identity_channel_zero_deficit():
    psi = qs.random_pure((3, 2, 2, 2), seed=3)
    for fn in (mono.monotone_deficit_cd, mono.monotone_deficit_cd2):
        v = fn(psi, mono.TwoOutcomeChannel(np.ones(3)))
        assert abs(v.deficit) < 1e-12 and v.p2 == 0


def test_counterexample_verdicts():
    psi, ch = mono.builtin_counterexample()
    v = mono.monotone_deficit_cd(psi, ch)
    assert abs(v.lhs - 1 / np.sqrt(2)) < 1e-12 and abs(v.rhs - 1) < 1e-12 and v.violated
    assert np.allclose(v.branch_cd, [1, 1]) and np.allclose([v.p1, v.p2], [0.5, 0.5])
    v2 = mono.monotone_deficit_cd2(psi, ch)
    assert abs(v2.lhs - 0.5) < 1e-12 and abs(v2.rhs - 1) < 1e-12 and v2.violated
    assert v.route_residual < 1e-12 and abs(v.f_route["rhs"] - v.rhs) < 1e-12


@pytest.mark.parametrize("dims", [(2, 2, 2, 2), (2, 3, 2), (5, 5), (4, 3)])
def test_known_cases_small(dims):
    rng = np.random.default_rng(sum(dims))
    for _ in range(200):
        psi = qs.random_pure(dims, rng)
        ch = mono.TwoOutcomeChannel(rng.random(dims[0]))
        assert mono.monotone_deficit_cd(psi, ch).deficit >= -1e-8
        if dims[0] == 2 or len(dims) == 2:
            assert mono.monotone_deficit_cd2(psi, ch).deficit >= -1e-8


def test_mon3_qubit_and_qutrit():
    rng = np.random.default_rng(0)
    w2 = mono.random_weights(2, 1000, rng)
    assert mono.mon3_margins(w2, rng.random((1000, 2))).min() >= -1e-12
    w3 = mono.random_weights(3, 1000, rng)
    assert mono.mon3_margins(w3, rng.random((1000, 3))).min() >= -1e-10
    assert abs(mono.mon3_check(w3[0], np.ones(3))) < 1e-15


def test_mon3_four_can_fail():
    # weights on a 4-cycle; D alternates 1, 0: (1/2)^2 - 0 > 0, but on two disjoint edges:
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 0.25
    assert mono.mon3_check(w, [1, 1, 0, 0]) == pytest.approx(0.5 ** 2 - 0.5)


def test_mon3_validation():
    with pytest.raises(ValueError):
        mono.mon3_check(np.array([[0, 1.0], [0, 0]]), [1, 1])
    with pytest.raises(ValueError):
        mono.mon3_check(np.array([[0, 1.0], [1.0, 0]]), [1, 1])
    with pytest.raises(ShapeMismatch):
        mono.mon3_check(np.zeros((2, 2)), [1, 1, 1])


def test_search_small_and_replayable():
    r = mono.search_violation(4, "cd", trials=5000, seed=1)
    assert r.violated
    v = mono.monotone_deficit_cd(r.state(), r.channel())
    assert v.violated and v.route_residual < 1e-9
    again = mono.search_violation(4, "cd", trials=5000, seed=1)
    assert again.margin == r.margin and again.trial == r.trial


def test_search_workers_deterministic():
    a = mono.search_violation(3, "cd2", trials=4000, seed=3, workers=2)
    b = mono.search_violation(3, "cd2", trials=4000, seed=3, workers=2)
    assert a.margin == b.margin and np.array_equal(a.lambdas, b.lambdas)


def test_search_argument_errors():
    with pytest.raises(ValueError):
        mono.search_violation(2)
    with pytest.raises(ValueError):
        mono.search_violation(3, "x")
    with pytest.raises(ValueError):
        mono.search_violation(3, env_dims=(3, 3))
