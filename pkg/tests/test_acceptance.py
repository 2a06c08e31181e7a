"""Acceptance criteria, one test each.  Every test prints a single
``[ACCEPT n] PASS|FAIL ...`` line with the measured value, the tolerance and
the runtime, whether or not it passes."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from kslab import cli, io, verify

GOLDEN = Path(__file__).parent / "golden" / "decay_iid_L30.json"
DECAY_CFG = {"schema_version": 1, "potential": {"kind": "iid"}, "L": 30, "m": 0, "trials": 2000, "seed": 42, "fit_range": [5, 25]}


def report(capsys, n, title, ok, text):
    with capsys.disabled():
        print(f"\n[ACCEPT {n:2d}] {'PASS' if ok else 'FAIL'}  {title}: {text}")
    return ok


def timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def summarize(rows):
    return "; ".join(f"{r.name}={r.value:.3g} (tol {r.threshold:.3g})" for r in rows)


def test_01_eigensolver_exactness(capsys):
    rows, dt = timed(verify.check_eigensolver, (3, 10, 101, 501), 1e-10)
    ok = all(r.passed for r in rows) and dt < 5.0
    assert report(capsys, 1, "free Laplacian eigenvalues", ok, f"{summarize(rows)}; {dt:.2f} s (limit 5 s)")


def test_02_correlator_normalization(capsys):
    rows, dt = timed(verify.check_normalization, 100, 100, 0, 1e-10)
    ok = all(r.passed for r in rows)
    assert report(capsys, 2, "rho(m,m) = 1 over 100 instances, L <= 100", ok, f"{summarize(rows)}; {dt:.1f} s")


def test_03_jacobian_identity(capsys):
    rows, dt = timed(verify.check_jacobian, 100, (1, 2, 3), 0)
    ok = all(r.passed for r in rows) and dt < 30.0
    worst = {k: max(r.value for r in rows if r.name.startswith(k)) for k in ("jacobian_det", "ratio_identity", "jacobian_fd")}
    text = f"max |det J phi0^2 - 1| = {worst['jacobian_det']:.2e} (tol 1e-6), ratio {worst['ratio_identity']:.2e} (tol 1e-9), FD {worst['jacobian_fd']:.2e} (tol 1e-5); {dt:.1f} s (limit 30 s)"
    assert report(capsys, 3, "Jacobian and ratio identities, 100 seeds x L in {1,2,3}", ok, text)


@pytest.mark.slow
def test_04_factorization_oracle(capsys):
    rows, dt = timed(verify.check_factorization, 1_000_000, 0, 400, 0.02)
    ok = all(r.passed for r in rows) and dt < 600.0
    parts = []
    for r in rows:
        d = r.detail
        trend = "shrinking" if d["step_base_to_double"] < d["step_half_to_base"] else "NOT shrinking"
        parts.append(f"{r.name}: mc={d['mc']:.5f}+-{d['mc_stderr']:.1e} quad={d['integral']:.5f} rel={r.value:.2e} (refinement steps {d['step_half_to_base']:.1e} -> {d['step_base_to_double']:.1e}, {trend})")
    assert report(capsys, 4, "MC vs nested quadrature, tol 2%", ok, " | ".join(parts) + f"; {dt:.0f} s (limit 600 s)")


def test_05_operator_norms(capsys):
    rows, dt = timed(verify.check_norms, (1.0, 0.3, 0.1), 11, 1e-3)
    ok = all(r.passed for r in rows) and dt < 120.0
    text = "; ".join(f"max({r.name} - bound) = {r.value:.2e} (tol {r.threshold:g})" for r in rows)
    assert report(capsys, 5, "discretized norm bounds over 11 E x a in {1,0.3,0.1}", ok, f"{text}; {dt:.1f} s (limit 120 s)")


def test_06_dynamical_bound(capsys):
    rows, dt = timed(verify.check_dynamical, 100, 30, 0, 1e-10)
    ok = all(r.passed for r in rows)
    assert report(capsys, 6, "|amplitude| <= correlator, 100 trials, L=30, t in 0..100 step 0.1", ok, f"{summarize(rows)}; {dt:.1f} s")


@pytest.fixture(scope="module")
def decay_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("decay")
    out = {}
    for workers in (1, 4):
        cfg = base / f"w{workers}.json"
        cfg.write_text(json.dumps({**DECAY_CFG, "workers": workers}))
        t0 = time.perf_counter()
        code = cli.run("decay", cfg, base / f"out{workers}")
        out[workers] = (code, base / f"out{workers}", time.perf_counter() - t0)
    return out


def test_07_localization_decay(capsys, decay_runs):
    code, out, dt = decay_runs[1]
    header, rows = io.read_csv(out / "decay.csv")
    mean = {int(r[0]): float(r[1]) for r in rows}
    fit = json.loads((out / "manifest.json").read_text())["fit"]
    lo, hi = fit["ci95"]
    golden = json.loads(GOLDEN.read_text())
    same = mean[5] == golden["rho_5_0"] and mean[25] == golden["rho_25_0"]
    ok = code == 0 and fit["rate"] > 0 and lo > 0 and mean[25] < mean[5] and same
    text = (
        f"rate {fit['rate']:.5f} CI95 ({lo:.5f}, {hi:.5f}), r2 {fit['r_squared']:.4f}; "
        f"rho(5,0)={mean[5]!r} rho(25,0)={mean[25]!r}; golden match: {same}; {dt:.1f} s"
    )
    assert report(capsys, 7, "i.i.d. decay, L=30, 2000 trials, seed 42", ok, text)


def test_08_limit_periodic(capsys):
    rows, dt = timed(verify.check_limit_periodic, 1.0, 200.0, 1000, 4, 0, 1e-12)
    ok = all(r.passed for r in rows)
    d = rows[0].detail
    text = f"periods {d['periods']}, max periodicity defect {rows[0].value:g}; ||V|| = {rows[1].value:.4f} < eps = 1; max(sup-dist - tail) = {rows[2].value:.2e} (tol 1e-12)"
    assert report(capsys, 8, "limit-periodic truncations", ok, text)


def test_09_gap_bound(capsys):
    rows, dt = timed(verify.check_gap_bound, 12)
    ok = all(r.passed for r in rows) and dt < 10.0
    text = "; ".join(f"{r.name}: min gap/bound = {r.detail['min_ratio']:.6f}" for r in rows)
    assert report(capsys, 9, "orbit gaps >= 1/(q_k + q_k+1), k <= 12", ok, f"{text}; {dt:.1f} s (limit 10 s)")


def test_10_holder_bound(capsys):
    rows, dt = timed(verify.check_holder, 0.3, 0.4, 10_000, 2000, 0)
    ok = all(r.passed for r in rows)
    r = rows[0]
    text = f"max |G(x)-G(y)|/|x-y|^0.3 = {r.value:.4f} (must be <= 1) over {r.detail['pairs']} pairs, |x-y| <= 1/q_5; {dt:.2f} s"
    assert report(capsys, 10, "Hoelder bound, golden mean, gamma=0.3, gamma~=0.4", ok, text)


def test_11_summability(capsys):
    rows, dt = timed(verify.check_summability)
    ok = all(r.passed for r in rows)
    text = f"closed-form rel err {rows[0].value:.1e} (tol 1e-12); (1+|n|)^-0.25 converged: {rows[1].passed}; (1+|n|)^-1 flagged diverged: {rows[2].passed}"
    assert report(capsys, 11, "summability checkers", ok, text)


def test_12_determinism(capsys, decay_runs):
    (c1, o1, t1), (c4, o4, t4) = decay_runs[1], decay_runs[4]
    same = (o1 / "decay.csv").read_bytes() == (o4 / "decay.csv").read_bytes()
    ok = c1 == 0 and c4 == 0 and same
    assert report(capsys, 12, "decay CSV identical for 1 and 4 workers", ok, f"byte-identical: {same}; {t1:.1f} s vs {t4:.1f} s")
