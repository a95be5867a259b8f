"""Acceptance criteria, each timed against its budget.

Every test prints one ``PASS``/``FAIL`` line with the measured value and
wall time, then asserts both.
"""
import time

import numpy as np
import pytest

from bdm import cyclic, experiments, field, graph, halfline as hl, registry
from bdm.grid import HalfLineGrid
from bdm.schemas import ExperimentConfig
from bdm.symbols import moebius, quadrature_winding, residue_winding

SIGMA = experiments.SIGMA


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail} "
                  f"[{elapsed:.1f} s / {budget:.0f} s]")
        assert ok, f"criterion {number}: {detail}, {elapsed:.1f} s"

    return report


def random_matrices(count=100, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        m, n = rng.integers(1, 65, size=2)
        if k % 4 == 0:
            n = m
        a = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        if k % 3 == 0:
            r = int(rng.integers(0, min(m, n) + 1))
            a = (rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))) @ \
                (rng.normal(size=(r, n)) + 1j * rng.normal(size=(r, n)))
        out.append(a * rng.uniform(0.1, 10))
    return out


def builtin_operators(grid):
    for sname, p in registry.builtin_symbols().items():
        for gname, g in registry.builtin_green().items():
            yield f"{sname}/{gname}", p, hl.boundary_symbol(p, g, grid)


def test_criterion_01_graph_algebra(verdict):
    t = time.perf_counter()
    worst = 0.0
    for a in random_matrices():
        e = graph.graph_projection(a)
        scale = e.norm()
        worst = max(worst, e.idempotent_defect() / scale, e.selfadjoint_defect() / scale,
                    e.block_identity_defect(a))
    verdict(1, "graph projection algebra", worst <= 1e-10, f"max defect {worst:.2e}",
            time.perf_counter() - t, 5)


def test_criterion_02_trace_formula(verdict):
    t = time.perf_counter()
    worst = 0.0
    for a in random_matrices():
        worst = max(worst, abs(graph.trace_index(a) - graph.svd_index(a)))
    grid = HalfLineGrid(512, 40.0)
    for _, _, c in builtin_operators(grid):
        tr = graph.halfline_trace_index(c.matrix, grid)
        worst = max(worst, abs(tr - graph.halfline_svd_index(c.matrix, grid)))
    verdict(2, "trace formula index", worst < 1e-3, f"max |trace - svd| {worst:.2e}",
            time.perf_counter() - t, 30)


def test_criterion_03_winding(verdict):
    t = time.perf_counter()
    grid = HalfLineGrid(512, 40.0)
    rows = []
    for w in range(-3, 4):
        p = moebius(w)
        q, r = quadrature_winding(p), residue_winding(p)
        idx = graph.halfline_svd_index(hl.wiener_hopf(p, grid).matrix, grid)
        rows.append(abs(q - w) < 1e-6 and r == w and idx == SIGMA * w)
    verdict(3, "winding oracle", all(rows), f"{sum(rows)}/7 cases, sigma={SIGMA:+d}",
            time.perf_counter() - t, 60)


def test_criterion_04_leftover(verdict):
    t = time.perf_counter()
    grid = HalfLineGrid(512, 40.0)
    pairs = registry.builtin_pairs()
    worst = max(np.linalg.norm(hl.direct_leftover(p, q, grid) - hl.structural_leftover(p, q, grid), 2)
                for _, p, q in pairs)
    verdict(4, "leftover consistency", len(pairs) >= 5 and worst < 1e-6,
            f"{len(pairs)} pairs, max defect {worst:.2e}", time.perf_counter() - t, 60)


def test_criterion_05_trprime(verdict):
    t = time.perf_counter()
    defects = []
    for _, p, q in registry.builtin_pairs():
        defects.append(cyclic.tr_prime_commutator_check((p, None), (q, None)).defect)
    worst = max(defects)
    verdict(5, "tr' commutator law", len(defects) >= 5 and worst < 1e-6,
            f"{len(defects)} pairs, max defect {worst:.2e}", time.perf_counter() - t, 10)


def test_criterion_06_cocycle(verdict):
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    alg = cyclic.ProductAlgebra()
    chains = [cyclic.random_chain(alg, 1 + k % 4, rng) for k in range(50)]
    worst = {asm: max(cyclic.cocycle_defect(ch, alg, asm) for ch in chains)
             for asm in ("product", "genfund")}
    verdict(6, "cocycle property", max(worst.values()) < 1e-6,
            ", ".join(f"{k} {v:.2e}" for k, v in worst.items()), time.perf_counter() - t, 300)


def test_criterion_07_resolvent_structure(verdict):
    t = time.perf_counter()
    grid = HalfLineGrid(512, 40.0)
    worst = 0.0
    for _, p, c in builtin_operators(grid):
        _, rem = hl.resolvent_decompose(c, p)
        worst = max(worst, field.singular_value_ratio(rem.matrix))
    verdict(7, "resolvent structure", worst < 1e-6, f"max sigma20/sigma1 {worst:.2e}",
            time.perf_counter() - t, 60)


def test_criterion_08_semiclassical_field(verdict):
    t = time.perf_counter()
    rep = experiments.run(ExperimentConfig(experiment="field-continuity"))
    detail = ", ".join(f"{c.name} {c.value:.3g}" for c in rep.checks)
    verdict(8, "semiclassical field", rep.passed, detail, time.perf_counter() - t, 300)


def test_criterion_09_index_theorem(verdict):
    t = time.perf_counter()
    rows = []
    for w in (-1, 1, 2):
        cfg = ExperimentConfig(experiment="pairing", symbol={"name": "concentrated", "params": [w]})
        rep = experiments.run(cfg)
        ok = rep.passed and rep.index.svd == SIGMA * w
        rows.append((w, ok, rep.index.pairing))
    detail = ", ".join(f"w={w:+d} pairing {v:.5f}" for w, _, v in rows)
    verdict(9, "end-to-end index", all(ok for _, ok, _ in rows), detail,
            time.perf_counter() - t, 600)


def test_criterion_10_fourier_identification(verdict):
    t = time.perf_counter()
    funcs = [lambda v: np.exp(-v ** 2),
             lambda v: 1 / np.cosh(2 * v),
             lambda v: np.exp(-(v - 1) ** 2 / 3) * (1 + 1j * v)]
    worst = 0.0
    for f in funcs:
        d = field.fourier_identify(field.FiberFunction.from_callable(f, 1024, 40.0 / 1024))
        worst = max(worst, d.interior, d.boundary)
    verdict(10, "Fourier identification", worst < 1e-8, f"{len(funcs)} functions, max defect {worst:.2e}",
            time.perf_counter() - t, 10)
