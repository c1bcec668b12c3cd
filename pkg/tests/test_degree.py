import numpy as np
import pytest

from dualdeg import degree, operators, problems
from dualdeg.degree import (CollisionError, DomainSpec, ball_domain, box_domain,
                            brouwer_1d, brouwer_2d_winding, brouwer_nd_regular,
                            fd_jacobian, finite_rank_reduce, fourier_block_signs,
                            pullback_domain)


def cubic(x):
    return x ** 3 - x


class TestDomainSpec:
    def test_box(self):
        d = box_domain([(-1.0, 1.0), (0.0, 2.0)])
        assert d.dim == 2
        assert d.contains([0.0, 1.0])
        assert not d.contains([0.0, 3.0])

    def test_ball(self):
        d = ball_domain([1.0, 1.0], 0.5)
        assert d.contains([1.2, 0.8])
        np.testing.assert_array_equal(d.as_box(), [[0.5, 1.5], [0.5, 1.5]])

    def test_invalid(self):
        with pytest.raises(ValueError, match="interior"):
            box_domain([(1.0, -1.0)])
        with pytest.raises(ValueError, match="radius"):
            ball_domain([0.0], 0.0)
        with pytest.raises(ValueError, match="pullback"):
            DomainSpec("pullback")

    def test_pullback(self):
        d = pullback_domain("pi_sum", box_domain([(-1.0, 1.0)]), r=3.0)
        assert d.dim == 1 and d.r == 3.0


class TestBrouwer1d:
    def test_identity(self):
        res = brouwer_1d(lambda x: x, (-1.0, 1.0))
        assert res.degree == 1 and res.certified

    def test_antipodal(self):
        res = brouwer_1d(lambda x: -x, (-1.0, 1.0))
        assert res.degree == -1 and res.certified

    def test_cubic(self):
        res = brouwer_1d(cubic, (-2.0, 2.0))
        assert res.degree == 1 and res.certified
        assert res.min_boundary_norm == pytest.approx(6.0)

    def test_uncertified_near_zero_endpoint(self):
        res = brouwer_1d(lambda x: x, (-1e-9, 1.0))
        assert not res.certified

    def test_no_zero(self):
        res = brouwer_1d(lambda x: x + 5.0, (-1.0, 1.0))
        assert res.degree == 0 and res.certified


class TestBrouwer2dWinding:
    def test_identity_square(self):
        res = brouwer_2d_winding(lambda p: p, box_domain([(-1, 1), (-1, 1)]))
        assert res.degree == 1 and res.certified

    def test_z_squared(self):
        g = lambda p: np.array([p[0] ** 2 - p[1] ** 2, 2 * p[0] * p[1]])
        loop = lambda s: np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)])
        res = brouwer_2d_winding(g, loop)
        assert res.degree == 2 and res.certified

    def test_antipodal_even_dim(self):
        res = brouwer_2d_winding(lambda p: -p, box_domain([(-1, 1), (-1, 1)]))
        assert res.degree == 1 and res.certified

    def test_polygon_boundary(self):
        verts = np.array([[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]])
        res = brouwer_2d_winding(lambda p: p, verts)
        assert res.degree == 1 and res.certified

    def test_stability_under_refinement(self):
        g = lambda p: np.array([p[0] ** 2 - p[1] ** 2, 2 * p[0] * p[1]])
        loop = lambda s: np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)])
        a = brouwer_2d_winding(g, loop)
        b = brouwer_2d_winding(g, lambda s: loop(s))  # fresh run, same loop
        assert a.degree == b.degree == 2


class TestBrouwerNd:
    def test_halving_map(self):
        res = brouwer_nd_regular(lambda x: 0.5 * x, [(-1, 1)] * 3)
        assert res.degree == 1 and res.certified
        assert len(res.zeros) == 1

    def test_1d_cross_check(self):
        res = brouwer_nd_regular(lambda x: cubic(x), [(-2.0, 2.0)])
        assert res.degree == brouwer_1d(cubic, (-2.0, 2.0)).degree == 1
        assert len(res.zeros) == 3

    @pytest.mark.parametrize("k,expected", [(1, -1), (2, 1), (3, -1)])
    def test_antipodal_law(self, k, expected):
        res = brouwer_nd_regular(lambda x: -x, [(-1, 1)] * k)
        assert res.degree == expected and res.certified

    def test_cross_engine_agreement(self):
        g = lambda p: np.array([cubic(p[0]), -p[1]])
        box = box_domain([(-2.0, 2.0), (-2.0, 2.0)])
        nd = brouwer_nd_regular(g, box)
        wind = brouwer_2d_winding(g, box)
        assert nd.degree == wind.degree == -1
        assert nd.certified and wind.certified

    def test_excision(self):
        # interfaces at +-0.5 avoid the zeros {-1, 0, 1}
        whole = brouwer_nd_regular(lambda x: cubic(x), [(-2.0, 2.0)])
        parts = [brouwer_nd_regular(lambda x: cubic(x), [iv])
                 for iv in ((-2.0, -0.5), (-0.5, 0.5), (0.5, 2.0))]
        assert [p.degree for p in parts] == [1, -1, 1]
        assert whole.degree == sum(p.degree for p in parts)

    def test_stability_under_refinement(self):
        g = lambda x: cubic(x)
        a = brouwer_nd_regular(g, [(-2.0, 2.0)], boundary_per_axis=9)
        b = brouwer_nd_regular(g, [(-2.0, 2.0)], boundary_per_axis=17)
        assert a.degree == b.degree

    def test_singular_jacobian_uncertified(self):
        res = brouwer_nd_regular(lambda x: x ** 3, [(-1.0, 1.0)])
        assert not res.certified


class TestFdJacobian:
    def test_linear_map(self):
        A = np.array([[2.0, -1.0], [0.5, 3.0]])
        jac = fd_jacobian(lambda x: A @ x, np.array([0.3, -0.7]))
        np.testing.assert_allclose(jac, A, atol=1e-8)


class TestFiniteRankReduce:
    def test_zero_reduced_map_identity_degree(self):
        p1 = problems.get_problem("p1")
        base = operators.build("Ktilde", p1)
        red = operators.Reduction(lambda v: np.zeros_like(v), 1,
                                  base.reduction.pi, base.reduction.i)
        h = operators.OperatorHandle("Kzero", operators.GRID_SPACE,
                                     lambda x: x, p1, {}, red)
        res = finite_rank_reduce(h, box_domain([(-1.0, 1.0)]))
        assert res.degree == 1 and res.certified

    def test_linear_periodic_slope(self):
        p1 = problems.get_problem("p1")
        res = finite_rank_reduce(operators.build("Ktilde", p1),
                                 box_domain([(-1.0, 1.0)]), r=3.0)
        assert res.degree == 1 and res.certified
        assert res.method == "finite_rank_reduction"

    def test_reduction_consistency(self):
        # reduced degree equals the Brouwer engine applied directly to I - F
        import dualdeg.flows as flows
        p1 = problems.get_problem("p1")
        h = operators.build("Ktilde", p1)
        direct = brouwer_1d(
            lambda t: t - flows.poincare(p1.field(), [t], m=p1.m)[0],
            (-1.0, 1.0))
        assert finite_rank_reduce(h, box_domain([(-1.0, 1.0)])).degree \
            == direct.degree

    def test_missing_witness(self):
        p1 = problems.get_problem("p1")
        with pytest.raises(ValueError, match="reduction witness"):
            finite_rank_reduce(operators.build("K", p1), box_domain([(-1.0, 1.0)]))

    def test_broken_witness(self):
        red = operators.Reduction(lambda v: v, 1,
                                  lambda x: 2.0 * np.asarray(x),
                                  lambda v: np.asarray(v))
        h = operators.OperatorHandle("bad", operators.GRID_SPACE,
                                     lambda x: x, None, {}, red)
        with pytest.raises(ValueError, match="pi o i"):
            finite_rank_reduce(h, box_domain([(-1.0, 1.0)]))


class TestFourierBlockSigns:
    def test_zero_matrix(self):
        res = fourier_block_signs(np.zeros((1, 1)), 1.0, n_max=8)
        assert res.overall_sign == 1
        assert res.skipped == (1,)
        assert all(s == 1 for _, s in res.block_signs)

    def test_scalar_two(self):
        res = fourier_block_signs([[2.0]], 1.0, n_max=8)
        assert res.overall_sign == -1
        assert all(s == 1 for _, s in res.block_signs)

    def test_negative_eta(self):
        res = fourier_block_signs(np.zeros((1, 1)), -1.0, n_max=8)
        assert res.overall_sign == 1
        assert res.skipped == ()

    def test_rotation_block(self):
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        res = fourier_block_signs(A, 1.0, n_max=8)
        # det(I - A/eta) = 1 + 1/eta^2 > 0
        assert res.overall_sign == 1

    def test_skipped_mode_recorded(self):
        res = fourier_block_signs([[0.5]], 4.0, n_max=8)
        assert res.skipped == (2,)

    def test_eta_zero_collision(self):
        with pytest.raises(CollisionError):
            fourier_block_signs([[1.0]], 0.0)

    def test_zero_mode_collision(self):
        with pytest.raises(CollisionError, match="singular"):
            fourier_block_signs([[1.0]], 1.0)

    def test_eta_in_spectrum_collision(self):
        # eta an eigenvalue of A makes I - A/eta singular
        with pytest.raises(CollisionError, match="singular"):
            fourier_block_signs([[2.0]], 2.0, n_max=8)
