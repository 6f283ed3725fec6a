"""Fast built-in property checks, runnable without pytest.

Each check raises ``AssertionError`` on failure. ``run_selftest`` returns the
per-check outcomes so the command line can print a table.
"""

import time
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import harness
from .attention import ProjectionSet, gibbs_density, ltm_attention, stm_attention
from .basis import BasisFamily, design_matrix, eval_psi
from .config import PipelineConfig
from .memory import consolidate, init_memory, record_density, sample_past
from .numerics import (histogram_sample, integrate, inverse_cdf_sample, normalized_exp,
                       uniform_grid)
from .pipeline import process_chunk, run_stream
from .signal import ContinuousSignal, FrameChunk, evaluate_many, fit, frame_times

CHECKS: List[Tuple[str, Callable]] = []


def check(name):
    def register(fn):
        CHECKS.append((name, fn))
        return fn
    return register


def _close(a, b, tol, what=""):
    err = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    assert err <= tol, f"{what} error {err:.3g} > {tol:g}"


def _brute_attention(Y, X, proj):
    out = []
    for h in range(proj.heads):
        q, k, v = Y @ proj.query[h], X @ proj.key[h], X @ proj.value[h]
        logits = q @ k.T / np.sqrt(proj.head_dim)
        w = np.exp(logits - logits.max(axis=1, keepdims=True))
        out.append((w / w.sum(axis=1, keepdims=True)) @ v)
    return np.hstack(out) @ proj.output


@check("grid weights sum to interval length")
def _():
    for a, b, n in [(0, 1, 1000), (-2.0, 3.5, 17), (0, 0.75, 4)]:
        g = uniform_grid(a, b, n)
        assert abs(g.weights.sum() - (b - a)) <= 1e-12 * (b - a)


@check("trapezoid exact on affine integrands")
def _():
    g = uniform_grid(-1.3, 2.2, 37)
    _close(integrate(3 * g.points - 2, g), 3 * (2.2 ** 2 - 1.3 ** 2) / 2 - 2 * 3.5, 1e-12)


@check("trapezoid second-order convergence")
def _():
    errs = [abs(integrate(np.exp(uniform_grid(0, 1, n).points), uniform_grid(0, 1, n)) - (np.e - 1))
            for n in (101, 201)]
    assert errs[0] / errs[1] >= 3.5


@check("gibbs density normalized and shift invariant")
def _():
    g = uniform_grid(0, 1, 1000)
    s = np.random.default_rng(0).standard_normal(1000) * 5
    p = normalized_exp(s, g)
    assert abs(integrate(p, g) - 1) <= 1e-9
    # adding 1000 rounds the scores at ~1e-13, so compare relative to the peak
    _close(normalized_exp(s + 1000, g) / p.max(), p / p.max(), 1e-12)


@check("gibbs density matches e^t/(e-1)")
def _():
    g = uniform_grid(0, 1, 1000)
    _close(normalized_exp(g.points, g), np.exp(g.points) / (np.e - 1), 1e-5)


@check("stratified inverse cdf on uniform density")
def _():
    g = uniform_grid(0, 1, 1000)
    _close(inverse_cdf_sample(np.ones(1000), g, 4), [0.125, 0.375, 0.625, 0.875], 1e-12)


@check("histogram sampling follows bin masses")
def _():
    u = histogram_sample([0.7, 0.3], 10)
    assert (u < 0.5).sum() == 7 and (u >= 0.5).sum() == 3


@check("rectangular basis is a partition of unity")
def _():
    F = design_matrix(BasisFamily("rectangular", 7), np.linspace(0, 1, 301))
    assert np.all(F.sum(axis=0) == 1.0)


@check("design matrix columns equal psi")
def _():
    for basis in (BasisFamily("rectangular", 5), BasisFamily("gaussian", 5)):
        t = np.linspace(0, 1, 23)
        F = design_matrix(basis, t)
        assert all(np.array_equal(F[:, i], eval_psi(basis, ti)) for i, ti in enumerate(t))


@check("ridge fit interpolates one frame per box")
def _():
    X = np.random.default_rng(1).standard_normal((16, 3))
    sig = fit(X, frame_times(16), BasisFamily("rectangular", 16), 1e-12)
    _close(evaluate_many(sig, frame_times(16)), X, 1e-8)


@check("ridge fit is linear in the data")
def _():
    rng = np.random.default_rng(2)
    X1, X2 = rng.standard_normal((2, 12, 4))
    t, b = frame_times(12), BasisFamily("gaussian", 8)
    lhs = fit(2 * X1 - 3 * X2, t, b, 1e-3).coefficients
    rhs = 2 * fit(X1, t, b, 1e-3).coefficients - 3 * fit(X2, t, b, 1e-3).coefficients
    _close(lhs, rhs, 1e-9 * max(1.0, np.abs(rhs).max()))


@check("ridge shrinkage monotone in lambda")
def _():
    X = np.random.default_rng(3).standard_normal((10, 3))
    norms = [np.linalg.norm(fit(X, frame_times(10), BasisFamily("gaussian", 6), lam).coefficients)
             for lam in (1e-6, 1e-3, 1.0)]
    assert norms[0] >= norms[1] >= norms[2]


@check("stm attention equals brute force")
def _():
    rng = np.random.default_rng(4)
    for _ in range(20):
        proj = ProjectionSet.random(8, 2, seed=int(rng.integers(1 << 30)))
        Y, X = rng.standard_normal((3, 8)), rng.standard_normal((5, 8))
        _close(stm_attention(Y, X, proj), _brute_attention(Y, X, proj), 1e-10)


@check("ltm density slices integrate to one")
def _():
    rng = np.random.default_rng(5)
    sig = fit(rng.standard_normal((20, 8)), frame_times(20), BasisFamily("rectangular", 16))
    _, prof = ltm_attention(rng.standard_normal((3, 8)), sig, ProjectionSet.random(8, 2), uniform_grid(0, 1, 1000))
    _close(prof.densities @ prof.grid.weights, 1.0, 1e-6)


@check("ltm quadrature agrees with fine grid")
def _():
    rng = np.random.default_rng(6)
    sig = ContinuousSignal(rng.standard_normal((32, 8)), BasisFamily("gaussian", 32))
    proj, Y = ProjectionSet.random(8, 2, seed=1), rng.standard_normal((2, 8)) / np.sqrt(8)
    z1, _ = ltm_attention(Y, sig, proj, uniform_grid(0, 1, 1000))
    z2, _ = ltm_attention(Y, sig, proj, uniform_grid(0, 1, 100001))
    assert np.linalg.norm(z1 - z2) <= 1e-4 * np.linalg.norm(z2)


@check("continuous attention recovers a discrete value")
def _():
    X = 7.0 * np.eye(6)[:5]
    sig = fit(X, frame_times(5), BasisFamily("rectangular", 5), 1e-8)
    Y = (50.0 / 49.0) * X[2:3]
    z, _ = ltm_attention(Y, sig, ProjectionSet.identity(6), uniform_grid(0, 1, 1000))
    _close(z[0], X[2], 1e-3)


@check("uniform and sticky agree on a flat histogram")
def _():
    cfg = PipelineConfig(M=8, P=1, e=4, R=2, H=1, N=16, T=9)
    st = consolidate(init_memory(cfg), np.random.default_rng(7).standard_normal((8, 4)))
    flat = np.full(cfg.D, 1.0 / cfg.D)
    a = sample_past(st.replace(sampling="uniform", histogram=flat))
    b = sample_past(st.replace(sampling="sticky", histogram=flat))
    assert np.array_equal(a[1], b[1]) and np.array_equal(a[0], b[0])


@check("histogram is a distribution")
def _():
    rng = np.random.default_rng(8)
    g = uniform_grid(0, 1, 1000)
    prof = gibbs_density(rng.standard_normal((2, 3, 1000)) * 3, g)
    cfg = PipelineConfig(M=8, P=1, e=4, R=3, H=2, N=16)
    st = record_density(consolidate(init_memory(cfg), np.ones((8, 4))), prof, 8)
    assert np.all(st.histogram >= 0) and abs(st.histogram.sum() - 1) <= 1e-9


@check("consolidation contracts the memory by tau")
def _():
    n = 64
    basis = BasisFamily("rectangular", n)
    ramp = fit(frame_times(n)[:, None], frame_times(n), basis, 1e-6)
    for tau in (0.5, 0.75):
        st = init_memory(PipelineConfig(M=64, P=1, e=1, R=1, H=1, N=n, tau=tau, ridge=1e-6, T=128,
                                        sampling="uniform"))
        st = st.replace(signal=ramp, chunks_seen=1)
        new = consolidate(st, np.zeros((64, 1)))
        t = np.arange(1, 10) / 10
        err = np.abs(evaluate_many(new.signal, tau * t) - evaluate_many(ramp, t)).mean()
        assert err <= 5 / n + 10 * 1e-6, f"tau={tau} error {err:.3g}"


@check("alpha blend identities")
def _():
    cfg = PipelineConfig(M=6, P=2, e=8, R=3, H=2, N=12)
    rng = np.random.default_rng(9)
    proj, Y = ProjectionSet.random(8, 2, seed=3), rng.standard_normal((3, 8))
    chunk = FrameChunk(rng.standard_normal((6, 2, 8)))
    z = {a: process_chunk(init_memory(cfg), None, chunk, cfg.replace(alpha=a), proj, Y)[2]
         for a in (0.0, 0.5, 1.0)}
    assert np.array_equal(z[1.0], stm_attention(Y, chunk.tokens(), proj))
    _close(z[0.5], 0.5 * (z[0.0] + z[1.0]), 1e-12)


@check("running average equals batch mean")
def _():
    cfg = PipelineConfig(M=4, P=1, e=4, R=2, H=1, N=8)
    rng = np.random.default_rng(10)
    chunks = [FrameChunk(rng.standard_normal((4, 1, 4)), c) for c in range(8)]
    res = run_stream(chunks, cfg)
    _close(res.tokens, np.mean([d.tokens for d in res.diagnostics], axis=0), 1e-12)


@check("full attention oracle matches stm attention")
def _():
    rng = np.random.default_rng(11)
    proj, Y, X = ProjectionSet.random(8, 2, seed=5), rng.standard_normal((3, 8)), rng.standard_normal((64, 8))
    _close(harness.full_attention_oracle(X, Y, proj), stm_attention(Y, X, proj), 1e-12)


@check("needle scenario: sticky retains the needle")
def _():
    out = harness.compare_variants(harness.SyntheticStreamSpec())
    assert out["sticky"]["ratio"] > 1.5, out["sticky"]["ratio"]
    assert out["sticky"]["ratio"] > out["uniform"]["ratio"]


@check("needle ratio grows with amplitude")
def _():
    ratios = [harness.run_needle_scenario(harness.SyntheticStreamSpec(amplitude=a))["aligned"].ratio
              for a in (0.0, 2.0, 4.0)]
    assert ratios[0] <= ratios[1] <= ratios[2], ratios


def _weights_check(proj: ProjectionSet):
    cfg = PipelineConfig(M=4, P=1, e=proj.dim, R=2, H=proj.heads, N=8, e_out=proj.out_dim)
    rng = np.random.default_rng(12)
    chunks = [FrameChunk(rng.standard_normal((4, 1, proj.dim)), c) for c in range(2)]
    res = run_stream(chunks, cfg, proj)
    assert np.all(np.isfinite(res.tokens))


def run_selftest(weights: Optional[ProjectionSet] = None):
    """Run every check; returns ``[(name, passed, seconds, message), ...]``."""
    checks = list(CHECKS)
    if weights is not None:
        checks.append(("pipeline runs with supplied weights", lambda: _weights_check(weights)))
    results = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            fn()
            ok, msg = True, ""
        except Exception as exc:  # report every failure, keep going
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, time.perf_counter() - start, msg))
    return results
