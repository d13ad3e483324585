"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are also repeated in the terminal summary of any pytest run.  The file can be
executed directly as a script as well.
"""
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from koethelab import build_deadend, hilbert_norm, koethe_from_config, normalize, sup_norm, verify_conditions
from koethelab.basis import agreement_tolerance, approximation_errors, expand, extract_basis, project_T, range_basis, reconstruct
from koethelab.cone import (
    build_context,
    cone_member,
    decompose,
    endpoint_inequalities,
    equicontinuity_check,
    estimate_C,
    hypothesis_checks,
    C_stability,
)
from koethelab.deadend import valid_cone_grades, verify_diagonal_map
from koethelab.koethe import demo_matrix, weighted_l2
from koethelab.operator import OperatorMatrix, grade_norms, operator_from_config, rescale_to_contraction

from conftest import CASES, build_case
from oracles import conditions_exact

# tolerances, pinned
SAMPLES = 1000
DELTA_REL = 1e-14  # delta_k 2^k D_{k+2} = 1
GRAM_ABS = 1e-9  # H_1 Gram vs identity, entrywise
GRAM_OFF_REL = 1e-9  # H_inf Gram off-diagonal mass, relative
RECON_REL = 1e-9  # H_1 reconstruction residual, relative
DECOMP_REL = 1e-12  # |x - (y - z)|_r relative to |x|_r
DECOMP_FACTOR = 4.0
BINV_BOUND = 2.0
ENDPOINT_SLACK = 1e-9
CONE_TAU = 1e-12
EQUI_FACTOR = 8.0
STABILITY_REL = 0.10

RESULTS = {}


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _operators():
    """Every test operator: the shared cases plus two diagonal projections."""
    out = {name: build_case(name) for name in sorted(CASES)}
    m = koethe_from_config({"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12})
    Tp, _ = rescale_to_contraction(operator_from_config({"family": "coordinate-projection", "coords": [2, 5, 7]}, m))
    dd = build_deadend(m)
    out["g5-n12-projection"] = (m, Tp, dd, extract_basis(range_basis(Tp), dd))
    return out


@pytest.fixture(scope="module")
def operators():
    return _operators()


def test_criterion_1_normalization():
    rng = np.random.default_rng(101)
    demo = demo_matrix()
    demo_ok = verify_conditions(demo).passed and all(conditions_exact(demo.a.tolist())[0].values())
    raw = koethe_from_config({"family": "power", "exponents": list(range(9)), "N": 8})
    m, log = normalize(raw)
    norm_ok = verify_conditions(m).passed and all(conditions_exact(m.a.tolist())[0].values()) and m.K >= 3
    violations = 0
    for mat in (demo, m):
        for k in range(1, mat.K):
            X = rng.uniform(-1, 1, (mat.N, SAMPLES)) / mat.a[k - 1][:, None]
            s, h, s1 = sup_norm(mat, X, k), hilbert_norm(mat, X, k), sup_norm(mat, X, k + 1)
            violations += int(np.sum(s > h) + np.sum(h > s1))
    ok = demo_ok and norm_ok and violations == 0
    assert record(1, ok, f"demo exact={demo_ok} normalized K'={m.K} ok={norm_ok} sandwich violations={violations}")


def test_criterion_2_half_contraction():
    worst, count = 0.0, 0
    demo = demo_matrix()
    confs = [(demo, {"family": "coordinate-projection", "coords": c}) for c in ([1], [1, 2], [2, 4], [1, 2, 3, 4])]
    m5 = koethe_from_config({"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12})
    confs += [(m5, {"family": "coordinate-projection", "coords": [1, 6, 12]})]
    confs += [(m5, {"family": "random-nonneg", "density": 0.4, "seed": s}) for s in range(100)]
    for m, conf in confs:
        Tp, _ = rescale_to_contraction(operator_from_config(conf, m))
        worst = max(worst, float(grade_norms(Tp).max()))
        count += 1
    ok = worst <= 0.5
    assert record(2, ok, f"max grade_norm(T', k) = {worst!r} over {count} operators (bound 0.5, exact)")


def test_criterion_3_deadend(operators):
    rng = np.random.default_rng(303)
    worst_delta, worst_chain, worst_diag, worst_tail = 0.0, 0.0, 0.0, 0.0
    for name, (m, Tp, dd, e) in operators.items():
        k = np.arange(1, dd.K_inf + 1)
        worst_delta = max(worst_delta, float(np.max(np.abs(dd.delta * 2.0**k * dd.D[k + 1] - 1.0))))
        worst_chain = max(worst_chain, math.fsum((dd.delta * dd.D[k]) ** 2))
        rep = verify_diagonal_map(Tp, dd, SAMPLES, rng)
        worst_diag = max(worst_diag, rep["extreme_point"].worst_ratio, rep["random_samples"].worst_ratio)
        b = dd.b_inf
        for kk in range(1, m.K):
            worst_tail = max(worst_tail, math.fsum((m.a[kk - 1, kk:] / b[kk:]) ** 2))
    ok = worst_delta <= DELTA_REL and worst_chain <= 1 and worst_diag <= 1 and worst_tail <= 1
    assert record(
        3, ok,
        f"delta rel err {worst_delta:.3g}; chain {worst_chain:.6g}; diagonal map worst {worst_diag:.6g}; tail max {worst_tail:.6g}",
    )


def test_criterion_4_basis(operators):
    rng = np.random.default_rng(404)
    g1, goff, recon = 0.0, 0.0, 0.0
    closed_ok = True
    for name, (m, Tp, dd, e) in operators.items():
        g1 = max(g1, float(np.max(np.abs(e.gram1() - np.eye(e.d)))))
        G = e.gram_inf()
        goff = max(goff, float(np.linalg.norm(G - np.diag(np.diag(G))) / np.linalg.norm(G)))
        X = rng.uniform(-1, 1, (m.N, SAMPLES)) / m.a[-1][:, None]
        Y = Tp.t @ X
        R = reconstruct(expand(Y, e), e)
        nY = weighted_l2(m.a[0], Y)
        recon = max(recon, float(np.max(weighted_l2(m.a[0], Y - R)[nY > 0] / nY[nY > 0])))
        if name.endswith("projection"):
            coords = np.flatnonzero(np.diag(Tp.t))
            order = coords[np.argsort(-dd.a_inf[coords], kind="stable")]
            lam = (dd.a_inf[order] / m.a[0, order]) ** 2
            closed_ok &= bool(np.array_equal(e.f, np.eye(m.N)[:, order]))
            closed_ok &= bool(np.allclose(e.lam, lam, rtol=1e-14, atol=0))
    ok = g1 <= GRAM_ABS and goff <= GRAM_OFF_REL and recon <= RECON_REL and closed_ok
    assert record(4, ok, f"G1 dev {g1:.3g}; Ginf off-diag {goff:.3g}; recon {recon:.3g}; diagonal closed form {closed_ok}")


def test_criterion_5_contractions(operators):
    rng = np.random.default_rng(505)
    violations, mono_bad, tail_at_d, agree = 0, 0, 0.0, 0.0
    for name, (m, Tp, dd, e) in operators.items():
        X = rng.uniform(-1, 1, (m.N, SAMPLES)) / m.a[-1][:, None]
        Y = Tp.t @ X
        h1, hinf = weighted_l2(m.a[0], Y), dd.inf_hilbert(Y)
        errs = approximation_errors(Tp, e, X)
        for n in range(e.d + 1):
            Z = project_T(Tp, e, n)(X)
            violations += int(np.sum(weighted_l2(m.a[0], Z) > h1) + np.sum(dd.inf_hilbert(Z) > hinf))
            # two evaluations of ||Tx - T_n x||_inf, in units of their rounding floor
            gap = np.max(np.abs(dd.inf_hilbert(Y - Z) - errs[n]) / hinf)
            agree = max(agree, float(gap / agreement_tolerance(e)))
        mono_bad += int(np.sum(errs[1:] > errs[:-1]))
        tail_at_d = max(tail_at_d, float(np.max(errs[-1])))
    ok = violations == 0 and mono_bad == 0 and tail_at_d == 0.0 and agree <= 1
    assert record(
        5, ok,
        f"contraction violations {violations}; error increases {mono_bad}; error at n=d {tail_at_d!r}; "
        f"coefficient vs vector error {agree:.3g} of its rounding floor",
    )


def test_criterion_6_cone(operators):
    rng = np.random.default_rng(606)
    stats = dict(nu=0.0, binv=0.0, ident=0.0, y=0.0, z=0.0, endpoint=0.0)
    hyp_ok, pos_ok, grades = True, True, 0
    for name, (m, Tp, dd, e) in operators.items():
        for r in valid_cone_grades(dd):
            grades += 1
            ctx = build_context(m, dd, Tp, r)
            stats["nu"] = max(stats["nu"], ctx.nu)
            stats["binv"] = max(stats["binv"], ctx.Binv_norm)
            X = rng.uniform(-1, 1, (m.N, SAMPLES)) / ctx.weights[:, None]
            Y, Z = decompose(ctx, X)
            nx = sup_norm(m, X, r)
            stats["ident"] = max(stats["ident"], float(np.max(sup_norm(m, X - (Y - Z), r) / nx)))
            stats["y"] = max(stats["y"], float(np.max(sup_norm(m, Y, r) / nx)))
            stats["z"] = max(stats["z"], float(np.max(sup_norm(m, Z, r) / nx)))
            hyp_ok &= hypothesis_checks(ctx, 200, rng, CONE_TAU).passed
            x0 = np.ones(m.N) * np.min(1.0 / dd.a_inf)
            x = ctx.Binv @ x0
            pos_ok &= bool(np.all(x >= x0) and np.all(x > 0) and cone_member(ctx, x, CONE_TAU))
            for n in range(1, e.d + 1):
                rep = endpoint_inequalities(ctx, e, n, SAMPLES // 5, rng)
                stats["endpoint"] = max(stats["endpoint"], *(c.worst_ratio for c in rep.checks))
    ok = (
        stats["nu"] <= 0.5
        and stats["binv"] <= BINV_BOUND
        and stats["ident"] <= DECOMP_REL
        and stats["y"] <= DECOMP_FACTOR
        and stats["z"] <= DECOMP_FACTOR
        and stats["endpoint"] <= 1 + ENDPOINT_SLACK
        and hyp_ok
        and pos_ok
    )
    detail = "; ".join(f"{k} {v:.6g}" for k, v in stats.items())
    assert record(6, ok, f"{grades} grades; {detail}; hypotheses {hyp_ok}; positive element {pos_ok}")


def test_criterion_7_equicontinuity(operators):
    worst_margin, worst_spread, finite = 0.0, 0.0, True
    for name, (m, Tp, dd, e) in operators.items():
        N = m.N
        truncs = sorted({max(1, N // 2), (3 * N) // 4, N})
        for r in valid_cone_grades(dd):
            C_hat = estimate_C(build_context(m, dd, Tp, r), e, 200, 0).value
            rep = equicontinuity_check(m, e, Tp, C_hat, r, SAMPLES, [7, r])
            sampled = rep["sampled_sup"].worst_ratio
            finite &= bool(np.isfinite(sampled))
            margin = sampled / (EQUI_FACTOR * C_hat) if C_hat > 0 else (0.0 if sampled == 0 else math.inf)
            worst_margin = max(worst_margin, margin)
            stab = C_stability(m, dd, Tp, e, r, truncs, [0, 1, 2], 200)
            worst_spread = max(worst_spread, stab["spread"])
    ok = finite and worst_margin <= 1 and worst_spread <= STABILITY_REL
    assert record(7, ok, f"max sup|T_n x|_r/|x|_(r+3) / (8 C_hat) = {worst_margin:.6g}; C_hat spread {worst_spread:.3g}")


def test_criterion_8_determinism(tmp_path):
    cfg = {
        "matrix": {"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12},
        "operator": {"family": "random-nonneg", "density": 0.4, "seed": 8},
        "seed": 8,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    runs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        proc = subprocess.run(
            [sys.executable, "-m", "koethelab", "full", str(path), "--seed", "8", "--out", str(out)],
            capture_output=True,
        )
        files = {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
        runs.append((proc.returncode, proc.stdout, files))
    same = runs[0] == runs[1]
    ok = same and runs[0][0] == 0 and b'"passed": true' in runs[0][1]
    assert record(8, ok, f"byte-identical stdout and {len(runs[0][2])} output files: {same}; exit {runs[0][0]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
