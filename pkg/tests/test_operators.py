import numpy as np
import pytest

from conftest import matrix_with_spectrum, random_spd
from spectralaug import (Grassman, MaxExpF, NumericalError, PowerNorm, Precondition, RngStream,
                         Sfa, ValidationError, apply_operator, grassman_flat, jacobi_eigh,
                         lu_precondition, maxexp_f, newton_schulz, power_norm, sfa_backward,
                         sfa_forward, spec_from_mapping, spec_to_mapping, svd_jacobi)
from spectralaug.operators import draw_count, sfa_k1_closed_form


class TestSfaForward:
    def test_rank_one_annihilation(self, gen):
        u = gen.standard_normal(8)
        v = gen.standard_normal(3)
        h = np.outer(u, v)
        out = sfa_forward(h, 1, RngStream(11))
        assert np.linalg.norm(out.augmented) <= 1e-12 * np.linalg.norm(h)

    def test_conservation_identity(self, gen):
        h = gen.standard_normal((20, 6))
        for k in (0, 1, 2, 4, 8):
            out = sfa_forward(h, k, RngStream(5, k))
            r_hat = out.r_final / np.linalg.norm(out.r_final)
            lhs = np.sum(out.augmented**2) + np.sum((h @ r_hat) ** 2)
            assert lhs == pytest.approx(np.sum(h**2), rel=1e-10)
            assert np.linalg.norm(out.augmented @ r_hat) <= 1e-12 * np.linalg.norm(h)

    def test_k0_subtracts_raw_direction(self, gen):
        h = gen.standard_normal((6, 4))
        out = sfa_forward(h, 0, RngStream(3))
        assert np.array_equal(out.r_final, out.r_init)
        expected = h - np.outer(h @ out.r_init, out.r_init) / (out.r_init @ out.r_init)
        assert np.array_equal(out.augmented, expected)

    def test_k1_matches_closed_form_bitwise(self, gen):
        h = gen.standard_normal((10, 5))
        out = sfa_forward(h, 1, RngStream(21))
        closed = sfa_k1_closed_form(h, out.r_init)
        assert np.array_equal(out.augmented, closed)

    def test_singular_values_never_increase(self, gen):
        h = gen.standard_normal((12, 5))
        sv_in = svd_jacobi(h).sigma
        for k in (1, 2, 4):
            out = sfa_forward(h, k, RngStream(31, k))
            sv_out = svd_jacobi(out.augmented).sigma
            assert np.all(sv_out <= sv_in + 1e-10)

    def test_power_law_projection_coefficients(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 14, [3.0, 2.0, 1.2, 0.5])
        fac = svd_jacobi(h)
        for k in (1, 2, 3):
            out = sfa_forward(h, k, RngStream(77, k))
            projected = fac.V.T @ out.r_final
            expected = fac.sigma ** (2 * k) * (fac.V.T @ out.r_init)
            assert np.allclose(projected, expected, rtol=1e-8, atol=1e-12)

    def test_equal_spectrum_average_push_forward(self, gen):
        # all singular values c: averaged output spectrum ~ c (1 - 1/d)
        c, d, n = 1.7, 4, 10
        h, _, _ = matrix_with_spectrum(gen, n, [c] * d)
        total = np.zeros_like(h)
        trials = 20_000
        for t in range(trials):
            total += sfa_forward(h, 1, RngStream(88, t)).augmented
        sv = svd_jacobi(total / trials).sigma
        se = 3.0 * c / np.sqrt(trials)  # loose CLT envelope
        assert np.allclose(sv, c * (1.0 - 1.0 / d), atol=4 * se)

    def test_mean_preserves_basis(self, gen):
        h, u, v = matrix_with_spectrum(gen, 12, [3.0, 2.0, 1.2, 0.5])
        total = np.zeros_like(h)
        trials = 20_000
        for t in range(trials):
            total += sfa_forward(h, 1, RngStream(99, t)).augmented
        fac = svd_jacobi(total / trials)
        # rebalancing reorders the spectrum, so pair columns by overlap
        matched = set()
        for j in range(4):
            k = int(np.argmax(np.abs(v[:, j] @ fac.V)))
            matched.add(k)
            angle_u = np.arccos(min(1.0, abs(float(u[:, j] @ fac.U[:, k]))))
            angle_v = np.arccos(min(1.0, abs(float(v[:, j] @ fac.V[:, k]))))
            assert angle_u <= 0.05 and angle_v <= 0.05
        assert matched == {0, 1, 2, 3}

    def test_determinism(self, gen):
        h = gen.standard_normal((7, 3))
        a = sfa_forward(h, 2, RngStream(123, 9)).augmented
        b = sfa_forward(h, 2, RngStream(123, 9)).augmented
        assert np.array_equal(a, b)

    def test_invalid_k(self, gen):
        with pytest.raises(ValidationError):
            sfa_forward(gen.standard_normal((3, 3)), -1, RngStream(0))

    def test_overflow_raises(self):
        h = np.diag([1e200, 1.0])
        with pytest.raises(NumericalError):
            sfa_forward(h, 2, RngStream(0))


class TestSfaBackward:
    def test_zero_grad_out(self, gen):
        h = gen.standard_normal((5, 3))
        grad = sfa_backward(h, gen.standard_normal(3), np.zeros((5, 3)))
        assert np.array_equal(grad, np.zeros((5, 3)))

    @pytest.mark.parametrize("case", range(6))
    def test_matches_central_differences(self, gen, case):
        n, d = int(gen.integers(2, 7)), int(gen.integers(2, 5))
        h = gen.standard_normal((n, d))
        r0 = gen.standard_normal(d)
        g = gen.standard_normal((n, d))
        grad = sfa_backward(h, r0, g)
        step = 1e-6
        fd = np.zeros_like(h)
        for i in range(n):
            for j in range(d):
                hp = h.copy(); hp[i, j] += step
                hm = h.copy(); hm[i, j] -= step
                fd[i, j] = (np.sum(g * sfa_k1_closed_form(hp, r0))
                            - np.sum(g * sfa_k1_closed_form(hm, r0))) / (2 * step)
        assert np.allclose(grad, fd, rtol=1e-5, atol=1e-5 * max(1.0, np.abs(fd).max()))

    def test_rank_one_case(self, gen):
        u = gen.standard_normal(6)
        v = gen.standard_normal(4)
        h = np.outer(u, v)
        r0 = gen.standard_normal(4)
        grad = sfa_backward(h, r0, h)
        step = 1e-6
        fd = np.zeros_like(h)
        for i in range(6):
            for j in range(4):
                hp = h.copy(); hp[i, j] += step
                hm = h.copy(); hm[i, j] -= step
                fd[i, j] = (np.sum(h * sfa_k1_closed_form(hp, r0))
                            - np.sum(h * sfa_k1_closed_form(hm, r0))) / (2 * step)
        assert np.allclose(grad, fd, rtol=1e-4, atol=1e-5 * max(1.0, np.abs(fd).max()))


class TestNewtonSchulz:
    def test_identity(self):
        a, b = newton_schulz(np.eye(4), 10)
        assert np.allclose(a, np.eye(4), atol=1e-12)
        assert np.allclose(b, np.eye(4), atol=1e-12)

    def test_diagonal_closed_form(self):
        a, b = newton_schulz(np.diag([4.0, 1.0]), 20)
        assert np.allclose(a, np.diag([2.0, 1.0]), atol=1e-8)
        assert np.allclose(b, np.diag([0.5, 1.0]), atol=1e-8)

    def test_random_spd_against_eigh_oracle(self, gen):
        for _ in range(10):
            m = random_spd(gen, int(gen.integers(2, 20)), cond=float(gen.uniform(1, 50)))
            a, b = newton_schulz(m, 25)
            w, q = jacobi_eigh(m)
            root = (q * np.sqrt(w)) @ q.T
            assert np.linalg.norm(a @ a - m) <= 1e-5 * np.linalg.norm(m)
            assert np.linalg.norm(a @ b - np.eye(m.shape[0])) <= 1e-5
            assert np.linalg.norm(a - root) <= 1e-4 * np.linalg.norm(root)

    def test_rejects_asymmetric(self, gen):
        with pytest.raises(ValidationError):
            newton_schulz(gen.standard_normal((3, 3)), 10)

    def test_indefinite_diverges(self):
        m = np.diag([1.0, -0.8])
        with pytest.raises(NumericalError):
            newton_schulz(m, 40)


class TestMaxExp:
    def test_orthonormal_columns_closed_form(self, gen):
        q, _ = np.linalg.qr(gen.standard_normal((10, 4)))
        out = maxexp_f(q, MaxExpF(eta=7.0, noise_scale=0.0), RngStream(1))
        expected = 1.0 - (1.0 - 0.25) ** 7
        assert np.allclose(svd_jacobi(out).sigma, expected, atol=1e-8)

    def test_push_forward_of_spectrum(self, gen):
        sigma = np.array([2.0, 1.5, 0.9, 0.2, 0.01])
        h, _, _ = matrix_with_spectrum(gen, 16, sigma)
        out = maxexp_f(h, MaxExpF(eta=10.0, noise_scale=0.0, ns_iters=30), RngStream(2))
        expected = np.sort(1.0 - (1.0 - sigma / sigma.sum()) ** 10)[::-1]
        assert np.allclose(svd_jacobi(out).sigma, expected, atol=1e-6)

    def test_eta_one_is_trace_scaling(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 9, [1.5, 1.0, 0.7])
        out = maxexp_f(h, MaxExpF(eta=1.0, noise_scale=0.0, ns_iters=30), RngStream(3))
        assert np.allclose(out, h / np.sum(svd_jacobi(h).sigma), atol=1e-7)

    def test_noise_changes_exponent(self, gen):
        # first draw of stream 5 is ~1.44, so the exponent shifts by 4
        h, _, _ = matrix_with_spectrum(gen, 9, [2.0, 1.0, 0.5])
        a = maxexp_f(h, MaxExpF(eta=5.0, noise_scale=3.0), RngStream(5))
        b = maxexp_f(h, MaxExpF(eta=5.0, noise_scale=0.0), RngStream(5))
        assert not np.allclose(a, b)

    def test_rank_deficient_rejected(self, gen):
        u = gen.standard_normal((6, 1))
        v = gen.standard_normal((3, 1))
        with pytest.raises(NumericalError):
            maxexp_f(u @ v.T, MaxExpF(eta=3.0), RngStream(0))


class TestPowerNorm:
    def test_unit_spectrum_fixed_point(self, gen):
        q, _ = np.linalg.qr(gen.standard_normal((8, 3)))
        for beta in (0.0, 0.4, 1.0):
            out = power_norm(q, PowerNorm(beta=beta, noise_scale=0.0, ns_iters=30), RngStream(5))
            assert np.allclose(svd_jacobi(out).sigma, 1.0, atol=1e-7)

    @pytest.mark.parametrize("beta,power", [(0.0, 0.5), (1.0, 0.75)])
    def test_pure_power_maps(self, gen, beta, power):
        sigma = np.array([2.0, 1.1, 0.6])
        h, _, _ = matrix_with_spectrum(gen, 10, sigma)
        out = power_norm(h, PowerNorm(beta=beta, noise_scale=0.0, ns_iters=30), RngStream(6))
        assert np.allclose(svd_jacobi(out).sigma, sigma**power, atol=1e-6)

    def test_mixed_coefficient(self, gen):
        sigma = np.array([1.8, 0.9])
        h, _, _ = matrix_with_spectrum(gen, 7, sigma)
        out = power_norm(h, PowerNorm(beta=0.3, noise_scale=0.0, ns_iters=30), RngStream(7))
        expected = np.sort(0.7 * sigma**0.5 + 0.3 * sigma**0.75)[::-1]
        assert np.allclose(svd_jacobi(out).sigma, expected, atol=1e-6)

    def test_star_variant_allows_wider_range(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 7, [1.5, 0.8])
        plain = power_norm(h, PowerNorm(beta=1.0, noise_scale=0.0, ns_iters=30), RngStream(8))
        # noise pushes beta beyond 1; star admits it, plain clamps at 1
        spec = PowerNorm(beta=1.0, noise_scale=10.0, variant="star", ns_iters=30)
        star = power_norm(h, spec, RngStream(9))
        clamped = power_norm(h, PowerNorm(beta=1.0, noise_scale=10.0, ns_iters=30), RngStream(9))
        assert np.allclose(clamped, plain, atol=1e-9)
        assert not np.allclose(star, plain)


class TestGrassman:
    def test_full_flattening_whitens(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 11, [2.2, 1.4, 0.7, 0.3])
        out = grassman_flat(h, Grassman(kappa=4, noise_scale=0.0, ns_iters=30), RngStream(10))
        assert np.allclose(svd_jacobi(out).sigma, 1.0, atol=1e-8)

    def test_cutoff_binarizes(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 9, [3.0, 2.0, 1.0])
        out = grassman_flat(h, Grassman(kappa=1, noise_scale=0.0, ns_iters=30), RngStream(11))
        sv = svd_jacobi(out).sigma
        assert sv[0] == pytest.approx(1.0, abs=1e-7)
        assert np.all(sv[1:] <= 1e-7)

    def test_noisy_leading_values(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 12, [3.0, 2.0, 1.0, 0.5])
        noise_scale = 0.1
        draws = 1000
        leading = np.empty((draws, 2))
        for t in range(draws):
            out = grassman_flat(h, Grassman(kappa=2, noise_scale=noise_scale, ns_iters=25),
                                RngStream(600, t))
            sv = svd_jacobi(out).sigma
            leading[t] = sv[:2]
            assert np.all(sv[2:] <= 1e-8)
        se = noise_scale / np.sqrt(draws)
        assert abs(leading.mean() - 1.0) <= 5 * se

    def test_randomized_mode_close_to_exact(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 14, [3.0, 1.5, 0.4, 0.1])
        exact = grassman_flat(h, Grassman(kappa=2, noise_scale=0.0, ns_iters=30), RngStream(12))
        rand = grassman_flat(h, Grassman(kappa=2, noise_scale=0.0, svd_mode="randomized",
                                         ns_iters=30), RngStream(12))
        assert np.allclose(svd_jacobi(exact).sigma, svd_jacobi(rand).sigma, atol=1e-5)

    def test_kappa_out_of_range(self, gen):
        with pytest.raises(ValidationError):
            grassman_flat(gen.standard_normal((5, 3)), Grassman(kappa=4), RngStream(0))


class TestLuPrecondition:
    def test_orthonormal_already_preconditioned(self, gen):
        q, _ = np.linalg.qr(gen.standard_normal((9, 4)))
        out = lu_precondition(q)
        assert np.allclose(svd_jacobi(out).sigma, 1.0, atol=1e-10)

    def test_scaling_removed(self, gen):
        q, _ = np.linalg.qr(gen.standard_normal((9, 4)))
        out = lu_precondition(3.7 * q)
        assert np.allclose(svd_jacobi(out).sigma, 1.0, atol=1e-10)

    def test_condition_number_never_worse(self, gen):
        for _ in range(5):
            h = gen.standard_normal((12, 5))
            sv_in = svd_jacobi(h).sigma
            sv_out = svd_jacobi(lu_precondition(h)).sigma
            cond_in = (sv_in[0] / sv_in[-1]) ** 2
            cond_out = (sv_out[0] / sv_out[-1]) ** 2
            assert cond_out <= cond_in * (1 + 1e-9)

    def test_singular_gram_rejected(self, gen):
        u = gen.standard_normal((6, 1))
        v = gen.standard_normal((3, 1))
        with pytest.raises(NumericalError):
            lu_precondition(u @ v.T)


class TestSpecs:
    def test_mapping_round_trip(self):
        for spec in (Sfa(k=2), MaxExpF(eta=8.0, noise_scale=0.2, ns_iters=15),
                     PowerNorm(beta=0.3, variant="star"), Grassman(kappa=3, svd_mode="randomized"),
                     Precondition()):
            assert spec_from_mapping(spec_to_mapping(spec)) == spec

    def test_unknown_operator(self):
        with pytest.raises(ValidationError):
            spec_from_mapping({"op": "whiten"})

    def test_unknown_key_named_in_error(self):
        with pytest.raises(ValidationError, match="etaa"):
            spec_from_mapping({"op": "maxexp", "eta": 5.0, "etaa": 1.0})

    @pytest.mark.parametrize("bad", [{"op": "sfa", "k": -1}, {"op": "maxexp", "eta": 0.0},
                                     {"op": "powernorm", "beta": 1.5},
                                     {"op": "grassman", "kappa": 0},
                                     {"op": "powernorm", "beta": 0.5, "variant": "funky"}])
    def test_invalid_parameters(self, bad):
        with pytest.raises(ValidationError):
            spec_from_mapping(bad)

    def test_dispatch_and_draw_counts(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 10, [2.0, 1.0, 0.5])
        for spec, expected_draws in [(Sfa(1), 3), (MaxExpF(eta=4.0), 1),
                                     (PowerNorm(beta=0.5), 1), (Grassman(kappa=2), 2),
                                     (Precondition(), 0)]:
            out = apply_operator(h, spec, RngStream(13))
            assert out.shape == h.shape
            assert draw_count(spec, 3) == expected_draws

    def test_noise_free_operators_ignore_stream(self, gen):
        h, _, _ = matrix_with_spectrum(gen, 10, [2.0, 1.0, 0.5])
        for spec in (MaxExpF(eta=4.0, noise_scale=0.0), PowerNorm(beta=0.5, noise_scale=0.0),
                     Grassman(kappa=2, noise_scale=0.0), Precondition()):
            a = apply_operator(h, spec, RngStream(1, 1))
            b = apply_operator(h, spec, RngStream(2, 2))
            assert np.array_equal(a, b)
