"""Self-verification suite: every analytic claim cross-checked by an oracle.

Each check returns a row for the pass/fail table.  The suite asserts only
relations that are true of the implementation (dual-route agreement,
conservation identities, bound inequalities); the known model bias of the
Gamma surrogate against the exact ratio expectation is reported as an
informational row, not asserted to vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, operators
from .linalg import jacobi_eigh, svd_jacobi
from .rng import RngStream


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    informational: bool = False

    def line(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"{status:4s}  {self.name:28s}  {self.detail}"


def _random_sorted_spectrum(gen, d: int) -> np.ndarray:
    vals = np.exp(gen.uniform(math.log(0.05), math.log(4.0), size=d))
    vals = np.sort(vals)[::-1]
    for i in range(1, d):
        # separated (generic surrogate parameters) but with consecutive
        # ratios <= 8, keeping the variance closed form well conditioned
        vals[i] = min(max(vals[i], vals[i - 1] / 8.0), vals[i - 1] * 0.97)
    return vals


def check_conservation(seed: int, cases: int = 200, inject_fault: bool = False) -> CheckResult:
    """Pythagoras identity and projector annihilation for the SFA operator."""
    gen = RngStream(seed, 101).generator()
    worst_pyth = 0.0
    worst_annih = 0.0
    failing_seed = None
    for case in range(cases):
        n = int(gen.integers(2, 65))
        d = int(gen.integers(2, 17))
        h = gen.standard_normal((n, d))
        k = int(gen.choice([1, 2, 4, 8]))
        stream = RngStream(seed, 1000 + case)
        out = operators.sfa_forward(h, k, stream)
        if inject_fault and k == 1:
            augmented = operators.sfa_k1_closed_form(h, out.r_init, flip_sign=True)
        else:
            augmented = out.augmented
        r_hat = out.r_final / np.linalg.norm(out.r_final)
        h_norm_sq = float(np.sum(h * h))
        pyth = abs(float(np.sum(augmented**2)) + float(np.sum((h @ r_hat) ** 2)) - h_norm_sq)
        annih = float(np.linalg.norm(augmented @ r_hat))
        rel_pyth = pyth / h_norm_sq
        rel_annih = annih / math.sqrt(h_norm_sq)
        if rel_pyth > worst_pyth or rel_annih > worst_annih:
            if rel_pyth > 1e-10 or rel_annih > 1e-12:
                failing_seed = (seed, 1000 + case)
        worst_pyth = max(worst_pyth, rel_pyth)
        worst_annih = max(worst_annih, rel_annih)
    ok = worst_pyth <= 1e-10 and worst_annih <= 1e-12
    detail = f"max_pythagoras={worst_pyth:.3e} max_annihilation={worst_annih:.3e} ({cases} cases)"
    if not ok and failing_seed is not None:
        detail += f" failing stream=(seed={failing_seed[0]}, id={failing_seed[1]})"
    return CheckResult("conservation-identity", ok, detail)


def check_rank1_annihilation(seed: int, cases: int = 100) -> CheckResult:
    gen = RngStream(seed, 102).generator()
    worst = 0.0
    for case in range(cases):
        n = int(gen.integers(2, 40))
        d = int(gen.integers(2, 12))
        u = gen.standard_normal(n)
        v = gen.standard_normal(d)
        h = np.outer(u, v)
        out = operators.sfa_forward(h, 1, RngStream(seed, 2000 + case))
        worst = max(worst, float(np.linalg.norm(out.augmented)) / float(np.linalg.norm(h)))
    ok = worst <= 1e-12
    return CheckResult("rank1-annihilation", ok, f"max_residual={worst:.3e} ({cases} cases)")


def _sweep_spectra(seed: int, count: int) -> list[np.ndarray]:
    gen = RngStream(seed, 103).generator()
    out = [np.array([2.0, 1.5, 0.9, 0.2, 0.01]), np.array([1.0, 1.0, 1.0, 1.0]),
           np.array([3.0, 1.0]), np.array([5.0, 1.0])]
    while len(out) < count:
        d = int(gen.integers(2, 9))
        out.append(_random_sorted_spectrum(gen, d))
    return out[:count]


def check_triple_agreement(seed: int, spectra_count: int = 12) -> CheckResult:
    """Closed form vs quadrature, and vs Monte Carlo where the model is exact."""
    worst_quad = 0.0
    worst_var = 0.0
    worst_mc_se = 0.0
    stream_id = 0
    for spectrum in _sweep_spectra(seed, spectra_count):
        d = spectrum.size
        for index in {0, 1, d - 1}:
            for k in (1, 2):
                p = analysis.analytic_params(spectrum, index, k)
                lam = analysis.lambda_analytic(p)
                worst_quad = max(worst_quad, abs(lam - analysis.lambda_quadrature(p)))
                worst_var = max(worst_var, abs(analysis.variance_analytic(p)
                                               - analysis.variance_quadrature(p)))
    # Monte Carlo agreement asserted on the family where the Gamma fit is exact
    exact_family = [(np.array([2.0, 1.0]), 0), (np.array([2.0, 1.0]), 1),
                    (np.array([1.0, 1.0, 1.0, 1.0, 1.0]), 0),
                    (np.array([3.0, 1.0, 1.0, 1.0]), 0)]
    for spectrum, index in exact_family:
        for k in (1, 2):
            p = analysis.analytic_params(spectrum, index, k)
            lam = analysis.lambda_analytic(p)
            mc, se = analysis.lambda_monte_carlo(spectrum, index, k, 10**6,
                                                 RngStream(seed, 3000 + stream_id))
            stream_id += 1
            if se > 0:
                worst_mc_se = max(worst_mc_se, abs(lam - mc) / se)
    ok = worst_quad <= 1e-8 and worst_var <= 1e-7 and worst_mc_se <= 4.0
    detail = (f"|analytic-quad|={worst_quad:.3e} |var-quadvar|={worst_var:.3e} "
              f"mc_gap={worst_mc_se:.2f}se (exact family)")
    return CheckResult("triple-agreement", ok, detail)


def check_surrogate_gap(seed: int) -> CheckResult:
    """Informational: bias of the Gamma surrogate against the exact ratio mean."""
    worst = 0.0
    for spectrum in _sweep_spectra(seed, 8):
        d = spectrum.size
        for index in {0, 1, d - 1}:
            worst = max(worst, abs(analysis.surrogate_gap(spectrum, index, 1)))
    return CheckResult("surrogate-vs-direct gap", True,
                       f"max|model bias|={worst:.3e} (reported, not asserted)",
                       informational=True)


def check_monotonicity(seed: int, spectra_count: int = 12) -> CheckResult:
    worst = -1.0
    for spectrum in _sweep_spectra(seed, spectra_count):
        for k in (1, 2, 4):
            lams = [analysis.lambda_analytic(analysis.analytic_params(spectrum, i, k))
                    for i in range(spectrum.size)]
            drop = max(lams[i + 1] - lams[i] for i in range(len(lams) - 1))
            worst = max(worst, drop)
    ok = worst <= 1e-12
    return CheckResult("monotone-rebalancing", ok, f"max_increase={worst:.3e}")


def check_newton_schulz(seed: int, cases: int = 30) -> CheckResult:
    gen = RngStream(seed, 104).generator()
    worst_root = 0.0
    worst_inv = 0.0
    for _ in range(cases):
        dim = int(gen.integers(2, 33))
        cond = float(gen.uniform(1.0, 50.0))
        q, _ = np.linalg.qr(gen.standard_normal((dim, dim)))
        eigs = np.exp(np.linspace(0.0, math.log(cond), dim)) * float(gen.uniform(0.1, 10.0))
        m = (q * eigs) @ q.T
        m = 0.5 * (m + m.T)
        a, b = operators.newton_schulz(m, 25)
        worst_root = max(worst_root, float(np.linalg.norm(a @ a - m) / np.linalg.norm(m)))
        worst_inv = max(worst_inv, float(np.linalg.norm(a @ b - np.eye(dim))))
    ok = worst_root <= 1e-5 and worst_inv <= 1e-5
    return CheckResult("newton-schulz-residuals", ok,
                       f"max|AA-M|/|M|={worst_root:.3e} max|AB-I|={worst_inv:.3e} ({cases} cases)")


def check_gradient(seed: int, cases: int = 25) -> CheckResult:
    gen = RngStream(seed, 105).generator()
    worst = 0.0
    step = 1e-6
    for _ in range(cases):
        n = int(gen.integers(2, 8))
        d = int(gen.integers(2, 6))
        h = gen.standard_normal((n, d))
        r0 = gen.standard_normal(d)
        g = gen.standard_normal((n, d))
        grad = operators.sfa_backward(h, r0, g)
        fd = np.zeros_like(h)
        for i in range(n):
            for j in range(d):
                hp = h.copy(); hp[i, j] += step
                hm = h.copy(); hm[i, j] -= step
                fd[i, j] = (np.sum(g * operators.sfa_k1_closed_form(hp, r0))
                            - np.sum(g * operators.sfa_k1_closed_form(hm, r0))) / (2 * step)
        scale = max(1.0, float(np.abs(fd).max()))
        worst = max(worst, float(np.abs(grad - fd).max()) / scale)
    ok = worst <= 1e-5
    return CheckResult("gradient-check", ok, f"max_rel_error={worst:.3e} ({cases} cases)")


def check_perturbation_bound(seed: int, cases: int = 40) -> CheckResult:
    gen = RngStream(seed, 106).generator()
    holds = 0
    applicable = 0
    for _ in range(cases):
        d = int(gen.integers(3, 7))
        n = d + int(gen.integers(1, 8))
        # leading gap is the smallest gap, so it governs every column
        sigma = np.arange(d, 0, -1, dtype=float) * float(gen.uniform(0.5, 2.0))
        u, _ = np.linalg.qr(gen.standard_normal((n, d)))
        v, _ = np.linalg.qr(gen.standard_normal((d, d)))
        h = (u * sigma) @ v.T
        e = gen.standard_normal((n, d))
        from .linalg import spectral_norm
        e *= float(gen.uniform(0.05, 0.4)) * (sigma[0] - sigma[1]) / spectral_norm(e)
        lhs, rhs, ok = analysis.subspace_perturbation_check(h, e)
        if ok is None:
            continue
        applicable += 1
        holds += int(ok)
    ok = applicable > 0 and holds == applicable
    return CheckResult("perturbation-bound", ok, f"holds {holds}/{applicable} applicable cases")


def check_phi_bound(seed: int) -> CheckResult:
    tail = np.array([1.5, 0.9, 0.2, 0.01])
    worst = -math.inf
    for k in (1, 2, 4, 8):
        for sigma1 in np.arange(0.1, 3.01, 0.1):
            spectrum = np.concatenate(([sigma1], tail))
            p = analysis.analytic_params(spectrum, 0, k)
            phi = sigma1 * (1.0 - analysis.lambda_analytic(p))
            worst = max(worst, phi - analysis.phi_upper_bound(spectrum, 0))
    ok = worst <= 1e-9
    return CheckResult("phi-upper-bound", ok, f"max_excess={worst:.3e}")


def check_operator_shapes(seed: int) -> CheckResult:
    gen = RngStream(seed, 107).generator()
    sigma = np.array([2.0, 1.5, 0.9, 0.2, 0.05])
    d = sigma.size
    n = 16
    u, _ = np.linalg.qr(gen.standard_normal((n, d)))
    v, _ = np.linalg.qr(gen.standard_normal((d, d)))
    h = (u * sigma) @ v.T
    stream = RngStream(seed, 108)
    out = operators.maxexp_f(h, operators.MaxExpF(eta=10.0, noise_scale=0.0), stream)
    expected = 1.0 - (1.0 - sigma / sigma.sum()) ** 10
    err_maxexp = float(np.abs(svd_jacobi(out).sigma - np.sort(expected)[::-1]).max())
    out = operators.grassman_flat(h, operators.Grassman(kappa=d, noise_scale=0.0), stream)
    err_grass = float(np.abs(svd_jacobi(out).sigma - 1.0).max())
    out = operators.power_norm(h, operators.PowerNorm(beta=0.0, noise_scale=0.0), stream)
    err_pn = float(np.abs(svd_jacobi(out).sigma - np.sort(sigma**0.5)[::-1]).max())
    ok = err_maxexp <= 1e-6 and err_grass <= 1e-8 and err_pn <= 1e-6
    return CheckResult("operator-push-forward", ok,
                       f"maxexp={err_maxexp:.3e} grassman={err_grass:.3e} powernorm={err_pn:.3e}")


def check_determinism(seed: int) -> CheckResult:
    gen = RngStream(seed, 109).generator()
    h = gen.standard_normal((12, 5))
    a = operators.sfa_forward(h, 1, RngStream(seed, 110)).augmented
    b = operators.sfa_forward(h, 1, RngStream(seed, 110)).augmented
    ok = bool(np.array_equal(a, b))
    return CheckResult("stream-determinism", ok, "bit-identical reruns" if ok else "outputs differ")


def check_svd_dual_route(seed: int, cases: int = 20) -> CheckResult:
    gen = RngStream(seed, 111).generator()
    worst = 0.0
    for _ in range(cases):
        n = int(gen.integers(2, 20))
        d = int(gen.integers(2, 10))
        m = gen.standard_normal((n, d))
        sv = svd_jacobi(m).sigma
        eigs, _ = jacobi_eigh(m.T @ m)
        ev = np.sqrt(np.maximum(eigs[: sv.size], 0.0))
        scale = max(float(sv[0]), 1e-300)
        worst = max(worst, float(np.abs(sv - ev).max()) / scale)
    ok = worst <= 1e-8
    return CheckResult("svd-dual-route", ok, f"max_rel_gap={worst:.3e} ({cases} cases)")


def run_suite(seed: int = 0, inject_fault: bool = False) -> tuple[list[CheckResult], bool]:
    results = [
        check_conservation(seed, inject_fault=inject_fault),
        check_rank1_annihilation(seed),
        check_svd_dual_route(seed),
        check_triple_agreement(seed),
        check_surrogate_gap(seed),
        check_monotonicity(seed),
        check_newton_schulz(seed),
        check_gradient(seed),
        check_perturbation_bound(seed),
        check_phi_bound(seed),
        check_operator_shapes(seed),
        check_determinism(seed),
    ]
    all_ok = all(r.passed for r in results if not r.informational)
    return results, all_ok
