"""Experiment runner: turns an ``ExperimentConfig`` into a ``Report``."""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from threadpoolctl import threadpool_limits

from . import cyclic, field, graph, halfline as hl, registry
from .errors import BdmError, ConfigError, NumericalFailure
from .grid import HalfLineGrid
from .schemas import CheckResult, ExperimentConfig, IndexResult, Report
from .symbols import BracketFunction, RationalSymbol, moebius, smooth_near_zero, winding_number

# calibrated orientation sign: ind W(p) = SIGMA * winding(p)
SIGMA = 1
SMOOTHING_RADII = (0.5, 0.9)


def threads() -> int:
    raw = os.environ.get("BDM_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError as exc:
        raise ConfigError(f"BDM_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("BDM_THREADS must be positive")
    return n


def parallel_map(func, items):
    """Ordered map over independent work items."""
    items = list(items)
    n = threads()
    if n == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


# resolution of named objects ------------------------------------------------------

def resolve_symbol(spec) -> RationalSymbol:
    if spec.name == "moebius":
        w = int(spec.params[0]) if spec.params else 1
        width = float(spec.params[1]) if len(spec.params) > 1 else 1.0
        return moebius(w, width)
    table = registry.builtin_symbols()
    if spec.name not in table:
        raise ConfigError(f"unknown symbol {spec.name!r}; known: moebius, {', '.join(table)}")
    return table[spec.name]


def resolve_green(spec) -> hl.GreenKernel:
    if spec.name == "exp" and spec.params:
        if len(spec.params) != 3:
            raise ConfigError("green 'exp' takes params [c, a, b]")
        c, a, b = spec.params
        if a >= 0 or b >= 0:
            raise ConfigError("green 'exp' needs negative rates")
        return hl.GreenKernel(((c, a, b),))
    table = registry.builtin_green()
    if spec.name not in table:
        raise ConfigError(f"unknown green kernel {spec.name!r}; known: {', '.join(table)}")
    return table[spec.name]


def resolve_family(spec):
    if spec.name not in ("concentrated", "moebius"):
        raise ConfigError(f"unknown cylinder family {spec.name!r}; known: concentrated")
    w = int(spec.params[0]) if spec.params else 1
    if abs(w) > 3:
        raise ConfigError("family index must lie in [-3, 3]")
    extra = {}
    if len(spec.params) > 1:
        extra["gamma"] = float(spec.params[1])
    if len(spec.params) > 2:
        extra["width"] = float(spec.params[2])
    return registry.concentrated_family(w, **extra)


def _grid(cfg: ExperimentConfig, default: HalfLineGrid) -> HalfLineGrid:
    if cfg.grid is None:
        return default
    return HalfLineGrid(cfg.grid.N, float(cfg.grid.L))


def _check(name, value, tol, passed=None) -> CheckResult:
    value = float(value)
    if not np.isfinite(value):
        raise NumericalFailure(f"{name} is not finite", check=name)
    ok = value < tol if passed is None else bool(passed)
    return CheckResult(name=name, value=value, tolerance=float(tol), passed=ok)


# experiments -------------------------------------------------------------------

def _index_1d(cfg, rep):
    grid = _grid(cfg, HalfLineGrid(512, 40.0))
    p = resolve_symbol(cfg.symbol)
    g = resolve_green(cfg.green)
    a = hl.boundary_symbol(p, g, grid).matrix
    svd = graph.halfline_svd_index(a, grid)
    trace = graph.halfline_trace_index(a, grid)
    w = winding_number(p)
    pairing = float(np.real(cyclic.chern_constant(0) * 1j
                            * cyclic.boundary_tr_prime(a, grid, graph.HALFLINE_SCALE)))
    tol = cfg.tol("index")
    rep.index = IndexResult(svd=svd, trace=trace, pairing=pairing, winding=w)
    rep.checks += [
        _check("svd_equals_sigma_winding", abs(svd - SIGMA * w), 0.5),
        _check("trace_minus_svd", abs(trace - svd), tol),
        _check("pairing_minus_svd", abs(pairing - svd), cfg.tol("pairing")),
    ]


def _cylinder_indices(fam, green, cfg, grid):
    op = field.assemble_family(fam, green, 1.0, cfg.n_max, grid)
    blocks = [op.blocks[n] for n in op.frequencies]
    svd = parallel_map(lambda b: graph.halfline_svd_index(b, grid), blocks)
    trace = parallel_map(
        lambda b: graph.trace_index(b, grid.boundary_weight(), cyclic.PAIRING_SCALE), blocks)
    return op, int(sum(svd)), float(sum(trace)), dict(zip(op.frequencies, svd))


def _index_cylinder(cfg, rep):
    grid = _grid(cfg, cyclic.PAIRING_GRID)
    fam, green = resolve_family(cfg.symbol)
    _, svd, trace, per = _cylinder_indices(fam, green, cfg, grid)
    oracle = fam.meta["index"]
    rep.index = IndexResult(svd=svd, trace=trace, winding=oracle)
    rep.tables["blocks"] = [{"n": n, "svd": s} for n, s in per.items()]
    rep.checks += [
        _check("svd_equals_oracle", abs(svd - SIGMA * oracle), 0.5),
        _check("trace_minus_svd", abs(trace - svd), cfg.tol("pairing")),
    ]


def _pairing(cfg, rep):
    grid = _grid(cfg, cyclic.PAIRING_GRID)
    fam, green = resolve_family(cfg.symbol)
    op, svd, trace, _ = _cylinder_indices(fam, green, cfg, grid)
    base = cyclic.index_pairing(fam, green, n_max=cfg.n_max, grid=grid, operator=op)
    smoothed = [cyclic.index_pairing(smooth_near_zero(fam, BracketFunction(r0)), green,
                                     n_max=cfg.n_max, grid=grid) for r0 in SMOOTHING_RADII]
    value = base.value
    rep.index = IndexResult(svd=svd, trace=trace, pairing=value, winding=fam.meta["index"])
    rep.tables["pairing"] = [{"smoothing_radius": 0.0, "pairing": value}] + [
        {"smoothing_radius": r0, "pairing": s.value} for r0, s in zip(SMOOTHING_RADII, smoothed)]
    drift = max(abs(s.value - value) for s in smoothed)
    same = all(s.index == base.index for s in smoothed)
    rep.checks += [
        _check("pairing_rounds_to_svd", abs(base.index - svd), 0.5),
        _check("trace_rounds_to_svd", abs(round(trace) - svd), 0.5),
        _check("pairing_distance_to_integer", abs(value - round(value)), cfg.tol("pairing")),
        _check("smoothing_drift", drift, cfg.tol("smoothing_drift"), drift < cfg.tol("smoothing_drift") and same),
    ]


def _field_continuity(cfg, rep):
    principal, perturbation, green = registry.field_family()
    model = field.SemiclassicalModel(principal, perturbation, green, registry.interior_cutoff)
    schedule = tuple(cfg.hbar_schedule)
    fam, fgreen = registry.concentrated_family(1)
    grid = HalfLineGrid(256, 20.0)
    scaling = max(field.scaling_defect(fam, fgreen, h, n, grid)
                  for h in schedule[:3] for n in (1, 3))
    decay = field.localization_decay(green(0.0), schedule, HalfLineGrid(512, 40.0))
    inv = field.inverse_defects(model, schedule)
    sec = field.section_continuity(model, schedule)
    first, last = sec.max_defect[0], sec.max_defect[-1]
    rep.tables["section"] = sec.as_table()
    rep.tables["inverse"] = [{"hbar": float(h), "defect": float(d)} for h, d in zip(inv.hbars, inv.norms)]
    rep.tables["localization"] = [{"hbar": float(h), "norm": float(v)}
                                  for h, v in zip(decay.hbars, decay.norms)]
    rep.checks.append(_check("scaling_conjugation", scaling, cfg.tol("scaling")))
    for N in (1, 2, 3):
        rep.checks.append(_check(f"localization_exponent_N{N}", decay.exponent, N - 0.2,
                                 decay.exponent >= N - 0.2))
    rep.checks += [
        _check("inverse_defect_slope", inv.exponent, cfg.tol("slope"), inv.exponent >= cfg.tol("slope")),
        _check("section_defect_smallest_hbar", last, cfg.tol("section")),
        _check("section_defect_ratio", last / first, cfg.tol("section_ratio")),
    ]


def _cyclic_check(cfg, rep):
    rng = np.random.default_rng(cfg.seed)
    alg = cyclic.ProductAlgebra()
    chains = [cyclic.random_chain(alg, 1 + k % 4, rng) for k in range(cfg.chains)]
    rows = []
    for asm in ("product", "genfund"):
        d = [cyclic.cocycle_defect(ch, alg, asm) for ch in chains]
        rows += [{"assembly": asm, "degree": ch.degree, "defect": float(x)} for ch, x in zip(chains, d)]
        rep.checks.append(_check(f"cocycle_{asm}", max(d), cfg.tol("cocycle")))
    rep.tables["cocycle"] = rows
    # chain identities on a few chains, certified by random multilinear probes
    ident = []
    for ch in chains[:4]:
        b, B = cyclic.boundary_b, cyclic.boundary_B
        scale = max(ch.scale(), 1e-300)
        for img in (b(b(ch, alg), alg), cyclic.drop_degenerate(B(B(ch, alg), alg)),
                    cyclic.drop_degenerate(b(B(ch, alg), alg) + B(b(ch, alg), alg))):
            ident.append(abs(cyclic.random_probe(img, cfg.seed)) / scale)
    rep.checks.append(_check("chain_identities", max(ident), cfg.tol("chain_identity")))


def _leftover_check(cfg, rep):
    grid = _grid(cfg, HalfLineGrid(512, 40.0))

    def one(item):
        name, p, q = item
        d = hl.direct_leftover(p, q, grid) - hl.structural_leftover(p, q, grid)
        return name, float(np.linalg.norm(d, 2))

    rows = parallel_map(one, registry.builtin_pairs())
    rep.tables["leftover"] = [{"pair": n, "defect": d} for n, d in rows]
    rep.checks.append(_check("leftover_max_defect", max(d for _, d in rows), cfg.tol("leftover")))


def _trprime_check(cfg, rep):
    grid = _grid(cfg, HalfLineGrid(512, 40.0))
    greens = registry.builtin_green()
    items = [(n, p, q, greens["exp"], greens["two-term"]) for n, p, q in registry.builtin_pairs()]

    def one(item):
        name, p, q, g1, g2 = item
        c = cyclic.tr_prime_commutator_check((p, g1), (q, g2), grid)
        return name, c

    rows = parallel_map(one, items)
    rep.tables["trprime"] = [{"pair": n, "lhs_re": c.lhs.real, "lhs_im": c.lhs.imag,
                              "rhs_re": c.rhs.real, "rhs_im": c.rhs.imag, "defect": c.defect}
                             for n, c in rows]
    rep.checks.append(_check("trprime_max_defect", max(c.defect for _, c in rows), cfg.tol("trprime")))


RUNNERS = {
    "index-1d": _index_1d,
    "index-cylinder": _index_cylinder,
    "pairing": _pairing,
    "field-continuity": _field_continuity,
    "cyclic-check": _cyclic_check,
    "leftover-check": _leftover_check,
    "trprime-check": _trprime_check,
}


def calibration() -> dict:
    out = {"sigma": float(SIGMA), "halfline_scale": graph.HALFLINE_SCALE,
           "pairing_scale": cyclic.PAIRING_SCALE}
    for k in range(3):
        c = cyclic.chern_constant(k)
        out[f"chern_c{k}"] = f"{c.real:+.6g}{c.imag:+.6g}i"
    return out


def run(cfg: ExperimentConfig) -> Report:
    """Execute one experiment.  Numerical breakdowns surface as
    ``NumericalFailure`` naming the experiment."""
    start = time.perf_counter()
    rep = Report(experiment=cfg.experiment, config=cfg.model_dump(mode="json"),
                 calibration=calibration())
    try:
        with threadpool_limits(limits=threads()):
            RUNNERS[cfg.experiment](cfg, rep)
    except (ConfigError, NumericalFailure):
        raise
    except BdmError as exc:
        raise NumericalFailure(f"{type(exc).__name__}: {exc}", check=cfg.experiment) from exc
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"LinAlgError: {exc}", check=cfg.experiment) from exc
    rep.status = "ok" if rep.passed else "checks_failed"
    rep.wall_time = time.perf_counter() - start
    return rep
