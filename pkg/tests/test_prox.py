import numpy as np
import pytest
import scipy.optimize

from spdhg import prox
from spdhg.linops import real_inner
from testutil import rand_image


def numeric_prox(objective, v, n_starts=4):
    """Independent prox oracle: minimize with a general-purpose solver."""
    v = np.asarray(v, dtype=float)
    best = None
    rng = np.random.default_rng(0)
    for k in range(n_starts):
        x0 = v if k == 0 else v + 0.5 * rng.standard_normal(v.shape)
        res = scipy.optimize.minimize(objective, x0, method="Nelder-Mead",
                                      options={"xatol": 1e-10, "fatol": 1e-14,
                                               "maxiter": 20000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x


class TestProxPrimal:
    def test_zero_is_identity(self):
        v = rand_image(np.random.default_rng(0), (3, 3))
        np.testing.assert_allclose(prox.prox_primal(prox.Zero(), 0.7, v), v)

    def test_squared_norm_alpha_zero_is_identity(self):
        v = rand_image(np.random.default_rng(1), (4,))
        np.testing.assert_allclose(prox.prox_primal(prox.SquaredNorm(0.0), 1.0, v), v)

    def test_squared_norm_halves_example(self):
        # argmin ||v - y||^2/2 + tau*alpha*||y||^2 at alpha=0.5, tau=1
        v = np.array([2.0, -4.0])
        out = prox.prox_primal(prox.SquaredNorm(0.5), 1.0, v)
        np.testing.assert_allclose(out, [1.0, -2.0], atol=1e-14)
        ref = numeric_prox(
            lambda y: 0.5 * np.sum((v - y) ** 2) + 0.5 * np.sum(y ** 2), v)
        np.testing.assert_allclose(out, ref, atol=1e-6)

    def test_unsupported_family_directs_to_dualize(self):
        with pytest.raises(ValueError, match="dualize"):
            prox.prox_primal(prox.SquaredDistance(np.zeros(2)), 1.0, np.ones(2))
        with pytest.raises(ValueError, match="dualize"):
            prox.prox_primal(prox.GroupL1(1.0, 2), 1.0, np.ones(2))

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError, match="positive"):
            prox.prox_primal(prox.Zero(), 0.0, np.ones(2))


class TestProxDual:
    def test_squared_distance_zero_data_halves(self):
        rng = np.random.default_rng(2)
        v = rng.standard_normal(4)
        fn = prox.SquaredDistance(np.zeros(4))
        out = prox.prox_dual(fn, 2.0, v)
        np.testing.assert_allclose(out, v / 2.0, atol=1e-14)
        # oracle: argmin ||v - z||^2/2 + sigma*(||z||^2/4 + <b,z>), b = 0
        ref = numeric_prox(lambda z: 0.5 * np.sum((v - z) ** 2)
                           + 2.0 * 0.25 * np.sum(z ** 2), v)
        np.testing.assert_allclose(np.real(out), ref, atol=1e-6)

    def test_squared_distance_general_against_oracle(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(3)
        b = rng.standard_normal(3)
        sigma = 0.8
        out = prox.prox_dual(prox.SquaredDistance(b), sigma, v)
        ref = numeric_prox(
            lambda z: 0.5 * np.sum((v - z) ** 2)
            + sigma * (0.25 * np.sum(z ** 2) + np.dot(b, z)), v)
        np.testing.assert_allclose(np.real(out), ref, atol=1e-6)
        np.testing.assert_allclose(out, (v - sigma * b) / (1 + sigma / 2), atol=1e-14)

    def test_group_l1_inside_ball_unchanged(self):
        v = np.array([0.3, 0.4])
        out = prox.prox_dual(prox.GroupL1(1.0, 2), 1.0, v)
        np.testing.assert_allclose(out, v)

    def test_group_l1_projects_onto_ball(self):
        v = np.array([3.0, 4.0])
        out = prox.prox_dual(prox.GroupL1(1.0, 2), 1.0, v)
        np.testing.assert_allclose(out, [0.6, 0.8], atol=1e-14)
        # numeric argmin of ||v - z||^2/2 over the unit disc
        ref = numeric_prox(
            lambda z: 0.5 * np.sum((v - z) ** 2)
            + (0.0 if np.hypot(*z) <= 1.0 + 1e-12 else 1e6), np.array([0.5, 0.5]))
        np.testing.assert_allclose(out, ref, atol=1e-5)

    def test_group_l1_complex_groups_mix_components(self):
        # one pixel, two channels: group is (re0, im0, re1, im1)
        v = np.array([3.0 + 0j, 4.0j]).reshape(1, 1, 2)
        out = prox.prox_dual(prox.GroupL1(1.0, 4), 0.3, v)
        np.testing.assert_allclose(out.ravel(), [0.6, 0.8j], atol=1e-14)

    def test_rejects_primal_families(self):
        with pytest.raises(ValueError, match="prox_primal"):
            prox.prox_dual(prox.SquaredNorm(1.0), 1.0, np.ones(2))

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError, match="positive"):
            prox.prox_dual(prox.SquaredDistance(np.zeros(2)), -1.0, np.ones(2))


class TestValue:
    def test_squared_distance_zero_at_data(self):
        b = rand_image(np.random.default_rng(4), (5,))
        assert prox.value(prox.SquaredDistance(b), b) == 0.0

    def test_squared_norm_small_weight(self):
        v = np.zeros(100)
        v[0] = 10.0  # ||v||^2 = 100
        assert prox.value(prox.SquaredNorm(1e-4), v) == pytest.approx(0.01)

    def test_group_l1_sums_group_norms(self):
        fn = prox.GroupL1(2.0, 2)
        v = np.array([3.0, 4.0, 0.0, 0.0])
        assert prox.value(fn, v) == pytest.approx(10.0)

    def test_group_size_must_divide(self):
        with pytest.raises(ValueError, match="divisible"):
            prox.value(prox.GroupL1(1.0, 3), np.ones(4))


class TestConjugateValue:
    def test_squared_distance_zero_at_origin(self):
        b = rand_image(np.random.default_rng(5), (4,))
        assert prox.conjugate_value(prox.SquaredDistance(b), np.zeros(4)) == 0.0

    def test_squared_distance_matches_brute_force_sup(self):
        b = np.array([1.0, 0.0])
        z = np.array([2.0, 0.0])
        got = prox.conjugate_value(prox.SquaredDistance(b), z)
        assert got == pytest.approx(3.0)
        # brute-force sup_y <y, z> - ||y - b||^2 over a fine grid
        ys = np.linspace(-3, 5, 2001)
        yy0, yy1 = np.meshgrid(ys, ys, indexing="ij")
        vals = yy0 * z[0] + yy1 * z[1] - (yy0 - b[0]) ** 2 - (yy1 - b[1]) ** 2
        assert got == pytest.approx(vals.max(), abs=1e-4)

    def test_group_l1_indicator(self):
        fn = prox.GroupL1(1.0, 2)
        assert prox.conjugate_value(fn, np.array([2.0, 0.0])) == np.inf
        assert prox.conjugate_value(fn, np.array([0.6, 0.8])) == 0.0
        # boundary slack: projections may land a hair outside
        assert prox.conjugate_value(fn, np.array([1.0 + 1e-10, 0.0])) == 0.0

    def test_zero_conjugate_is_indicator_of_origin(self):
        assert prox.conjugate_value(prox.Zero(), np.zeros(3)) == 0.0
        assert prox.conjugate_value(prox.Zero(), np.array([1e-3, 0, 0])) == np.inf


def test_moreau_identity_squared_distance():
    rng = np.random.default_rng(6)
    fn = prox.SquaredDistance(rand_image(rng, (6,)))
    for _ in range(20):
        v = rand_image(rng, (6,))
        sigma = float(rng.uniform(0.1, 5.0))
        lhs = prox.prox_dual(fn, sigma, v)
        # prox_{f/sigma}(u) = (u + (2/sigma) b) / (1 + 2/sigma)
        u = v / sigma
        prox_f_over_sigma = (u + (2.0 / sigma) * fn.b) / (1.0 + 2.0 / sigma)
        np.testing.assert_allclose(lhs + sigma * prox_f_over_sigma, v, atol=1e-10)


@pytest.mark.parametrize("fn,dual", [
    (prox.SquaredNorm(0.3), False),
    (prox.Zero(), False),
    (prox.SquaredDistance(np.arange(8.0) - 3.0), True),
    (prox.GroupL1(0.7, 2), True),
], ids=["squared_norm", "zero", "squared_distance", "group_l1"])
def test_nonexpansiveness(fn, dual):
    rng = np.random.default_rng(7)
    apply_prox = prox.prox_dual if dual else prox.prox_primal
    for _ in range(50):
        u = rng.standard_normal(8)
        v = rng.standard_normal(8)
        step = float(rng.uniform(0.05, 4.0))
        pu = apply_prox(fn, step, u)
        pv = apply_prox(fn, step, v)
        assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


@pytest.mark.parametrize("fn,dual", [
    (prox.SquaredNorm(0.3), False),
    (prox.Zero(), False),
    (prox.SquaredDistance(np.arange(8.0) - 3.0), True),
    (prox.GroupL1(0.7, 2), True),
], ids=["squared_norm", "zero", "squared_distance", "group_l1"])
def test_prox_optimality_beats_random_perturbations(fn, dual):
    # returned point must minimize ||v - w||^2/2 + step * h(w) where h is
    # the functional (primal prox) or its conjugate (dual prox)
    rng = np.random.default_rng(8)
    apply_prox = prox.prox_dual if dual else prox.prox_primal
    h = (lambda w: prox.conjugate_value(fn, w)) if dual else (lambda w: prox.value(fn, w))
    for _ in range(100):
        v = rng.standard_normal(8)
        step = float(rng.uniform(0.05, 4.0))
        w = np.real(apply_prox(fn, step, v))
        obj_w = 0.5 * np.sum((v - w) ** 2) + step * h(w)
        scales = 10.0 ** rng.uniform(-3, 0, size=1000)
        perturbations = w + scales[:, None] * rng.standard_normal((1000, 8))
        for u in perturbations:
            assert obj_w <= 0.5 * np.sum((v - u) ** 2) + step * h(u) + 1e-12


def test_fenchel_young_inequality():
    rng = np.random.default_rng(9)
    cases = [
        (prox.SquaredDistance(rng.standard_normal(6)),
         lambda: rng.standard_normal(6), lambda: rng.standard_normal(6)),
        (prox.GroupL1(1.3, 2),
         lambda: rng.standard_normal(6),
         lambda: prox.prox_dual(prox.GroupL1(1.3, 2), 1.0, 3 * rng.standard_normal(6))),
        (prox.SquaredNorm(0.8),
         lambda: rng.standard_normal(6), lambda: rng.standard_normal(6)),
    ]
    for fn, make_y, make_z in cases:
        for _ in range(50):
            y = make_y()
            z = np.real(make_z())
            lhs = prox.value(fn, y) + prox.conjugate_value(fn, z)
            assert lhs >= real_inner(y, z) - 1e-8
