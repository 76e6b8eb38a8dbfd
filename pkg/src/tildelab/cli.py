"""``tildelab`` command line.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import correlation as corr
from . import gellmann as gm
from . import inversion as inv
from . import monotone as mono
from .errors import ConsistencyError, TildeLabError
from .qstate import PureState, default_tol, mask_label, mask_of, parties, popcount, random_mixed
from .stateio import read_operator, read_state, write_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    residual: float
    passed: bool


@dataclass
class RunReport:
    command: str
    input_digest: str | None
    tolerance: float
    checks: list = field(default_factory=list)
    wall_time: float = 0.0
    data: dict = field(default_factory=dict)

    def check(self, name, lhs, rhs, residual=None, tol=None):
        """Record one comparison; passes iff residual < tolerance."""
        tol = self.tolerance if tol is None else tol
        lhs, rhs = float(lhs), float(rhs)
        residual = abs(lhs - rhs) if residual is None else float(residual)
        self.checks.append(Check(name, lhs, rhs, residual, bool(residual < tol)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=1, default=_jsonable)
        lines = [f"{self.command}  (tol {self.tolerance:g})"]
        if self.input_digest:
            lines.append(f"input sha256 {self.input_digest[:16]}")
        for k, v in self.data.items():
            if isinstance(v, (int, float, str, bool)):
                lines.append(f"  {k}: {v}")
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(f"{flag}  {c.name:<44s} lhs={c.lhs:+.12g} rhs={c.rhs:+.12g} "
                         f"residual={c.residual:.3g}")
        n_bad = sum(not c.passed for c in self.checks)
        lines.append(f"{len(self.checks) - n_bad}/{len(self.checks)} checks passed "
                     f"in {self.wall_time:.2f}s")
        return "\n".join(lines)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        if np.iscomplexobj(o):
            return [[float(z.real), float(z.imag)] for z in o.ravel()]
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _default_seed() -> int:
    return int(os.environ.get("TILDELAB_SEED", "0"))


def _parse_subset(text: str) -> int:
    try:
        labels = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise TildeLabError(f"--subset expects comma-separated party labels, got {text!r}")
    if not labels:
        raise TildeLabError("--subset must name at least one party")
    return mask_of(labels)


# ------------------------------------------------------------------ commands

def cmd_self_test(tol: float | None = None, seed: int = 0, perturb: bool = False) -> RunReport:
    tol = 1e-12 if tol is None else tol
    rep = RunReport("self-test", None, tol)
    for d in range(2, 6):
        basis = gm.perturbed_basis(d) if perturb else None
        for name, r in gm.identity_residuals(d, 100, seed + d, basis=basis).items():
            rep.check(f"gellmann d={d} {name}", r, 0.0, r)
    rng = np.random.default_rng(seed)
    for dims in [(2, 2), (3, 3), (2, 3, 2), (3, 3, 3)]:
        worst = {}
        tr_res = pos = 0.0
        expect = inv.tilde_trace_expected(dims)
        for _ in range(5):
            rho = random_mixed(dims, int(rng.integers(1, 5)), rng)
            for m, r in inv.method_residuals(rho).items():
                worst[m] = max(worst.get(m, 0.0), r)
            t = inv.invert_product(rho)
            tr_res = max(tr_res, abs(t.trace - expect))
            pos = min(pos, float(np.linalg.eigvalsh(t.mat).min()))
        label = "x".join(map(str, dims))
        for m, r in worst.items():
            rep.check(f"inverter {label} product vs {m}", r, 0.0, r, tol=1e-10)
        rep.check(f"inverter {label} trace law", tr_res, 0.0, tr_res, tol=1e-10)
        rep.check(f"inverter {label} positivity", pos, 0.0, max(-pos, 0.0), tol=1e-10)
    return rep


def cmd_invert(path, method: str, out=None, tol: float | None = None) -> RunReport:
    state, _ = read_state(path)
    rho = state.projector() if isinstance(state, PureState) else state
    tol = default_tol(rho.dims.total_dim) if tol is None else tol
    rep = RunReport("invert", _digest(path), tol)
    if method == "all":
        for m, r in inv.method_residuals(rho).items():
            rep.check(f"product vs {m}", r, 0.0, r)
        tilde = inv.invert_product(rho)
    else:
        tilde = inv.invert(rho, method)
    expect = inv.tilde_trace_expected(rho.dims) * rho.trace.real
    rep.check("trace law", tilde.trace.real, expect)
    rep.data["method"] = method
    rep.data["trace"] = tilde.trace.real
    if out:
        write_state(tilde, out)
    return rep


def _ledger_rows(led: corr.EntropyLedger):
    n = led.n
    return [{"mask": m, "parties": mask_label(m, n), "size": popcount(m), "tau": led.tau(m),
             "sign": (-1) ** (popcount(m) + 1)} for m in led.ordered()]


def cmd_entropies(path, tol: float | None = None) -> RunReport:
    state, _ = read_state(path)
    tol = 1e-9 if tol is None else tol
    rep = RunReport("entropies", _digest(path), tol)
    led = corr.entropy_ledger(state)
    eq = corr.verify_mixed_equality(state, led)
    rep.data.update(tr_rho_rhotilde=led.tr_rho_rhotilde, alternating_sum=eq.rhs,
                    ledger=_ledger_rows(led))
    rep.check("2 Tr(rho rho~) = alternating tau sum", eq.lhs, eq.rhs, eq.residual)
    return rep


def cmd_cd(path, tol: float | None = None) -> RunReport:
    state, _ = read_state(path)
    psi = corr._pure(state)
    tol = default_tol(psi.dims.total_dim) if tol is None else tol
    rep = RunReport("cd", _digest(path), tol)
    a = corr.cd_squared_trace(psi)
    b = corr.cd_squared_generators(psi)
    rep.check("C_D^2 trace form vs generator form", a, b)
    cd = corr.cd_generators(psi)
    rep.data.update(cd=cd, cd_squared=cd * cd, cd_squared_trace=a)
    return rep


def cmd_verify_monogamy(path, tol: float | None = None) -> RunReport:
    state, _ = read_state(path)
    tol = 1e-9 if tol is None else tol
    rep = RunReport("verify-monogamy", _digest(path), tol)
    led = corr.entropy_ledger(state)
    eq = corr.verify_mixed_equality(state, led)
    rep.check("2 Tr(rho rho~) = alternating tau sum", eq.lhs, eq.rhs, eq.residual)
    rep.check("Tr(rho rho~) >= 0", eq.lhs, 0.0, max(-eq.lhs, 0.0), tol=1e-10)
    rep.data["kind"] = "pure" if isinstance(state, PureState) else "mixed"
    if isinstance(state, PureState):
        a = corr.cd_squared_trace(state)
        b = corr.cd_squared_generators(state)
        rep.check("C_D^2 trace form vs generator form", a, b, tol=min(tol, 1e-10))
        mr = corr.monogamy_report(state)
        rep.check("2 C_D^2 = alternating tau sum", 2 * mr.cd_squared, mr.alternating_sum)
        rep.check("2 C_D^2 = alternating C^2_{A|Abar} sum", 2 * mr.cd_squared, mr.concurrence_sum)
        rep.data.update(cd=mr.cd, cd_squared=mr.cd_squared)
    rep.data["ledger"] = _ledger_rows(led)
    return rep


def cmd_evolve(path, subset: str, hamiltonian, steps: int, dt: float, track: bool = True,
               out=None, tol: float | None = None) -> RunReport:
    state, _ = read_state(path)
    rho = state.projector() if isinstance(state, PureState) else state
    s = _parse_subset(subset)
    if s > rho.dims.full_mask:
        raise TildeLabError(f"--subset {subset} names parties beyond {rho.dims.n}")
    hdims, h = read_operator(hamiltonian)
    want = [rho.dims[k] for k in parties(s, rho.dims.n)]
    if list(hdims.dims) != want:
        raise TildeLabError(f"Hamiltonian dims {list(hdims.dims)} do not match subset dims {want}")
    tol = 1e-9 if tol is None else tol
    rep = RunReport("evolve", _digest(path), tol)
    final = corr.evolve_subsystem(rho, s, h, steps * dt)
    ev0 = np.linalg.eigvalsh(rho.mat)
    ev1 = np.linalg.eigvalsh(final.mat)
    rep.check("spectrum preserved", 0.0, 0.0, np.abs(ev0 - ev1).max(), tol=1e-10)
    rep.check("trace preserved", final.trace.real, rho.trace.real, tol=1e-12)
    rep.data.update(subset=mask_label(s, rho.dims.n), steps=steps, dt=dt)
    if track:
        run = corr.track_conservation(rho, s, h, steps, dt)
        rep.check("conserved combination drift", run.combination[-1], run.combination[0],
                  run.drift)
        conserved = set(corr.conserved_subsets(rho.dims.n, s))
        status = {}
        for a in run.taus:
            if a in conserved:
                status[a] = "conserved"
            elif run.variation(a) > 1e-3:
                status[a] = "varying"
            else:
                status[a] = "partial-overlap-static"
        rep.data["series"] = {
            "time": run.times,
            "combination": run.combination,
            "tau": {mask_label(a, rho.dims.n): run.taus[a] for a in run.taus},
        }
        rep.data["subset_status"] = {mask_label(a, rho.dims.n): st for a, st in status.items()}
        rep.data["max_partial_overlap_variation"] = max(
            (run.variation(a) for a in run.partial_overlap()), default=0.0)
    if out:
        write_state(final, out)
    return rep


def cmd_search_violation(d1: int, target: str, trials: int, seed: int, workers: int = 1,
                         out=None, env_dims=(3, 3, 3)) -> RunReport:
    rep = RunReport("search-violation", None, mono.VIOLATION_TOL)
    res = mono.search_violation(d1, target, trials, seed, workers, env_dims)
    rep.data.update(d1=d1, target=target, trials=trials, seed=seed, workers=workers,
                    margin=res.margin, violated=res.violated, trial=res.trial,
                    lambdas=res.lambdas, D=res.D, env_dims=list(res.env_dims))
    psi = res.state()
    fn = mono.monotone_deficit_cd if target == "cd" else mono.monotone_deficit_cd2
    v = fn(psi, res.channel())
    rep.data["replayed_deficit"] = v.deficit
    # the replayed deficit must carry the sign of the normalized margin
    agree = (v.deficit < 0) == (res.margin < 0) or abs(v.deficit) < 1e-8
    rep.check("replay sign agrees with margin", float(v.deficit < 0), float(res.margin < 0),
              0.0 if agree else 1.0, tol=0.5)
    rep.check("replay route consistency", v.route_residual, 0.0, v.route_residual, tol=1e-9)
    if out:
        write_state(psi, out, channel_D=list(map(float, res.D)), target=target,
                    margin=res.margin)
    return rep


def cmd_counterexample(out=None) -> RunReport:
    rep = RunReport("counterexample", None, 1e-9)
    psi, ch = mono.builtin_counterexample()
    cd = corr.distributed_concurrence(psi)
    led = corr.entropy_ledger(psi)
    rep.check("C_D = 1/sqrt(2)", cd, 1 / np.sqrt(2))
    rep.check("ledger: 2 C_D^2 = alternating tau sum", 2 * cd * cd, led.alternating_sum())
    for fn in (mono.monotone_deficit_cd, mono.monotone_deficit_cd2):
        v = fn(psi, ch)
        rep.check(f"{v.target}: branch sum", v.rhs, 1.0)
        rep.check(f"{v.target}: violated", float(v.violated), 1.0)
        rep.data[f"{v.target}_lhs"] = v.lhs
        rep.data[f"{v.target}_rhs"] = v.rhs
        rep.data[f"{v.target}_deficit"] = v.deficit
        rep.data[f"{v.target}_violated"] = v.violated
    rep.data["channel_A1"] = "diag(1,1,0,0)"
    rep.data["channel_A2"] = "diag(0,0,1,1)"
    if out:
        write_state(psi, out, channel_D=[1.0, 1.0, 0.0, 0.0])
    return rep


# ------------------------------------------------------------------ argparse

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--tol", type=float, default=None, help="override the check tolerance")

    p = argparse.ArgumentParser(prog="tildelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("self-test", parents=[common], help="generator and inverter identities")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--perturb", action="store_true", help="use a mis-normalized basis")

    s = sub.add_parser("invert", parents=[common], help="universal state inversion")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--method", choices=inv.METHODS + ("all",), default="product")
    s.add_argument("--out")

    for name, hlp in [("entropies", "linear entropies of all marginals"),
                      ("cd", "distributed concurrence of a pure state"),
                      ("verify-monogamy", "check the correlation and monogamy equalities")]:
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--in", dest="inp", required=True)

    s = sub.add_parser("evolve", parents=[common], help="subsystem unitary evolution")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--subset", required=True, help="1-based parties, e.g. 1,3")
    s.add_argument("--hamiltonian", required=True)
    s.add_argument("--steps", type=int, default=100)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--track-conservation", action="store_true")
    s.add_argument("--out")

    s = sub.add_parser("search-violation", parents=[common], help="random monotone-violation search")
    s.add_argument("--d1", type=int, required=True)
    s.add_argument("--target", choices=("cd", "cd2"), default="cd")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--env-dims", default="3,3,3")
    s.add_argument("--out")

    s = sub.add_parser("counterexample", parents=[common], help="the (4,2,2,2) counterexample")
    s.add_argument("--out")
    return p


def run(args) -> RunReport:
    seed = getattr(args, "seed", None)
    seed = _default_seed() if seed is None else seed
    c = args.command
    if c == "self-test":
        return cmd_self_test(args.tol, seed, args.perturb)
    if c == "invert":
        return cmd_invert(args.inp, args.method, args.out, args.tol)
    if c == "entropies":
        return cmd_entropies(args.inp, args.tol)
    if c == "cd":
        return cmd_cd(args.inp, args.tol)
    if c == "verify-monogamy":
        return cmd_verify_monogamy(args.inp, args.tol)
    if c == "evolve":
        return cmd_evolve(args.inp, args.subset, args.hamiltonian, args.steps, args.dt,
                          args.track_conservation, args.out, args.tol)
    if c == "search-violation":
        env = tuple(int(x) for x in args.env_dims.split(","))
        return cmd_search_violation(args.d1, args.target, args.trials, seed, args.workers,
                                    args.out, env)
    if c == "counterexample":
        return cmd_counterexample(args.out)
    raise AssertionError(c)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        rep = run(args)
    except ConsistencyError as e:
        print(f"tildelab {args.command}: check failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (TildeLabError, ValueError) as e:
        print(f"tildelab {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    rep.wall_time = time.perf_counter() - t0
    print(rep.render(args.format))
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
