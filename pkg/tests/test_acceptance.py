"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line, printed in the
pytest terminal summary (and immediately with ``-s``). Run alone with::

    pytest tests/test_acceptance.py
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from corrdecomp.decomp import absorb_rank_one, decompose_full, peel
from corrdecomp.errors import InvalidRank, NoIndependentPivot
from corrdecomp.families import (
    Prop52Params,
    chain_cross_index,
    gen_chain,
    gen_prop52_factors,
    gen_prop52_target,
    random_correlation,
)
from corrdecomp.matcore import gram_factor, gram_of, numerical_rank
from corrdecomp.search import SearchConfig, two_factor_search
from corrdecomp.tensorlab import (
    combo_product_check,
    lemma_pair_check,
    random_product_pair,
    sample_product_sum_instance,
)
from corrdecomp.witness import (
    chain_witness,
    default_stat_tol,
    detect_entanglement,
    estimate_projector_gram,
    exact_projector_gram,
    simulate_measurements,
)

SWEEP_R = (1, 2, 3)
SWEEP_P = tuple(round(0.05 * k, 2) for k in range(1, 20))


def record(n, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit else "")
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{timing}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_chain_exactness():
    t0 = time.perf_counter()
    r, p = 2, 0.3
    _, P = gen_chain(r=r, p=p)
    S = np.abs(P) ** 2
    block = [S[a, b] for a in range(r + 1) for b in range(r + 1) if a != b]
    cross = [S[x, chain_cross_index(r, a)] for a in range(r) for x in (a, a + 1)]
    err_block = max(abs(v - p * p) for v in block)
    err_cross = max(abs(v - (1 + p) / 2) for v in cross)
    elapsed = time.perf_counter() - t0
    ok = err_block <= 1e-12 and err_cross <= 1e-12 and elapsed < 1
    record(1, ok, f"block err {err_block:.1e}, cross err {err_cross:.1e}", elapsed, 1)


def test_criterion_02_prop52_factors():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    worst_prod, worst_gen, bad_rank = 0.0, 0.0, 0
    for _ in range(100):
        params = Prop52Params.random(rng)
        _, P = gen_prop52_target(params)
        Q1, Q2, q1, q2 = gen_prop52_factors(params)
        worst_prod = max(worst_prod, np.abs(Q1 * Q2 - P).max())
        worst_gen = max(worst_gen, np.abs(q1.conj().T @ q1 - Q1).max(), np.abs(q2.conj().T @ q2 - Q2).max())
        bad_rank += numerical_rank(Q1) != 2 or numerical_rank(Q2) != 2
    elapsed = time.perf_counter() - t0
    ok = worst_prod <= 1e-10 and worst_gen <= 1e-10 and bad_rank == 0 and elapsed < 5
    record(2, ok, f"100 draws, product err {worst_prod:.1e}, generator err {worst_gen:.1e}, rank failures {bad_rank}", elapsed, 5)


def test_criterion_03_peeling():
    t0 = time.perf_counter()
    rng = np.random.default_rng(30)
    failures, worst = 0, 0.0
    for k in range(200):
        n = 3 + k % 4
        P = random_correlation(n, n, seed=rng.integers(2**31))
        res = peel(gram_factor(P), int(rng.integers(n)))
        err = np.abs(res.R * res.Q - P).max()
        worst = max(worst, err)
        failures += numerical_rank(res.R) != numerical_rank(P) - 1 or numerical_rank(res.Q) > 2 or err > 1e-9
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 30
    record(3, ok, f"200 instances, failures {failures}, worst residual {worst:.1e}", elapsed, 30)


def test_criterion_04_rank_reduction_endpoint():
    t0 = time.perf_counter()
    rng = np.random.default_rng(40)
    failures, worst = 0, 0.0
    for r in range(2, 6):
        for _ in range(50):
            P = random_correlation(r + 1, r + 1, seed=rng.integers(2**31))
            try:
                D = decompose_full(P, r)
            except NoIndependentPivot:
                failures += 1
                continue
            residual = np.abs(D.product() - P).max()
            worst = max(worst, residual)
            failures += not D.verified or residual > 1e-8 or any(numerical_rank(F) > r for F in D.factors)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    record(4, ok, f"r=2..5 x 50, failures {failures}, worst residual {worst:.1e}", elapsed, 60)


def test_criterion_05_absorption():
    t0 = time.perf_counter()
    rng = np.random.default_rng(50)
    worst, rank_changes = 0.0, 0
    for _ in range(100):
        n = int(rng.integers(2, 8))
        R = random_correlation(n, int(rng.integers(1, n + 1)), seed=rng.integers(2**31))
        x = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        out = absorb_rank_one(R, np.outer(x, x.conj()))
        oracle = np.diag(x) @ R @ np.diag(x).conj().T
        worst = max(worst, np.abs(out - oracle).max())
        rank_changes += numerical_rank(out) != numerical_rank(R)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and rank_changes == 0 and elapsed < 5
    record(5, ok, f"100 instances, worst deviation {worst:.1e}, rank changes {rank_changes}", elapsed, 5)


def sweep_instances():
    for r in SWEEP_R:
        for p in SWEEP_P:
            _, P = gen_chain(r=r, p=p)
            yield r, p, P


def test_criterion_06_witness_sweep():
    t0 = time.perf_counter()
    mismatches = []
    certified = 0
    for r, p, P in sweep_instances():
        got = chain_witness(np.abs(P) ** 2, r).certified
        certified += got
        if got != (p < 1 / r):
            mismatches.append((r, p))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 10
    detail = f"{len(SWEEP_R) * len(SWEEP_P)} cases, {certified} certified, mismatches {mismatches or 'none'}"
    record(6, ok, detail, elapsed, 10)


def test_criterion_07_detection_pipeline():
    t0 = time.perf_counter()
    T, _ = gen_chain(r=2, p=0.3)
    shots = 10**6
    exact = exact_projector_gram(T)
    iu = np.triu_indices(exact.shape[0], 1)
    # the symmetrized entry averages two independent binomial frequencies
    se = np.sqrt(exact[iu] * (1 - exact[iu]) / (2 * shots))
    certified, within, total = 0, 0, 0
    for seed in range(100):
        R_hat = estimate_projector_gram(simulate_measurements(T, shots, seed=seed))
        certified += detect_entanglement(R_hat, 2, stat_tol=default_stat_tol(shots)).certified
        within += int(np.sum(np.abs(R_hat[iu] - exact[iu]) <= 5 * se))
        total += iu[0].size
    elapsed = time.perf_counter() - t0
    frac = within / total
    ok = certified >= 99 and frac >= 0.99 and elapsed < 120
    record(7, ok, f"certified {certified}/100, entries within 5 SE {frac:.2%}", elapsed, 120)


def test_criterion_08_search_positive_control():
    t0 = time.perf_counter()
    cfg = SearchConfig(restarts=100, max_iters=500, success_threshold=1e-6, polish_threshold=1e-10)
    rng = np.random.default_rng(80)
    found, worst_basin, worst_polished = 0, 0.0, 0.0
    for k in range(50):
        _, P = gen_prop52_target(Prop52Params.random(rng))
        cfg.seed = k
        res = two_factor_search(P, cfg)
        found += res.found
        worst_basin = max(worst_basin, res.basin_residual)
        worst_polished = max(worst_polished, res.best_residual)
    elapsed = time.perf_counter() - t0
    ok = found == 50 and elapsed < 600
    detail = f"found {found}/50, worst basin residual {worst_basin:.1e}, worst polished {worst_polished:.1e}"
    record(8, ok, detail, elapsed, 600)


def test_criterion_09_tensor_harness():
    t0 = time.perf_counter()
    shapes = [(2, 2), (2, 2, 2), (3, 2)]
    rng = np.random.default_rng(90)
    agree = 0
    for k in range(500):
        shape = shapes[k % 3]
        x1, x2 = random_product_pair(rng, shape)
        agree += lemma_pair_check(x1, x2, shape, trials=20, seed=[90, k]).equivalence_held
    violations, products = 0, 0
    for k in range(500):
        shape = shapes[k % 3]
        n = 2 + k % (sum(d - 1 for d in shape) if len(shape) > 2 else 2)
        S, coeffs = sample_product_sum_instance(rng, shape, n)
        rep = combo_product_check(S, coeffs)
        products += rep.sum_is_product
        violations += not rep.bound_holds
    elapsed = time.perf_counter() - t0
    ok = agree == 500 and violations == 0 and products == 500 and elapsed < 60
    record(9, ok, f"pair agreement {agree}/500, bound violations {violations}/500", elapsed, 60)


def test_criterion_10_cross_consistency():
    t0 = time.perf_counter()
    checked, violations = 0, 0
    outcomes = {}
    for r, p, P in sweep_instances():
        if not chain_witness(np.abs(P) ** 2, r).certified:
            continue
        checked += 1
        try:
            D = decompose_full(P, r)
        except (InvalidRank, NoIndependentPivot) as exc:
            outcomes[type(exc).__name__] = outcomes.get(type(exc).__name__, 0) + 1
            continue
        outcomes["returned"] = outcomes.get("returned", 0) + 1
        violations += D.verified
    elapsed = time.perf_counter() - t0
    ok = checked > 0 and violations == 0
    record(10, ok, f"{checked} certified matrices, verified decompositions {violations}, outcomes {outcomes}", elapsed)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
