import random
import warnings
from fractions import Fraction

import pytest

from coarse_kit.cochains import (
    Cochain,
    RING_Z,
    coboundary,
    cohomology,
    exactness_check,
    min_norm_primitive,
    relative_cohomology,
    ring_zp,
)
from coarse_kit.complexes import (
    CellMap,
    barycentric_subdivision,
    filled_triangle,
    labeled_cycle,
    midpoint_subdivision,
    simplicial_complex,
)
from coarse_kit.degrees import circle_map_degree
from coarse_kit.errors import DivisibilityViolated, InvalidParams
from coarse_kit.exact_linalg import solve_integer
from coarse_kit.towers import (
    MkParams,
    build_Mk,
    build_Tp,
    build_Y_stage,
    build_beta,
    build_tower,
    check_stage_carriers,
    collapse_map_xi,
    dimension_coloring,
    is_light,
    open_star_refinement_witnesses,
    pick_n,
    product_obstruction_cocycle,
    pullback_complex,
    pullback_section,
    simplicial_approx_identity,
    simplicial_ost_witnesses,
    staircase_prism_triangulation,
)

from oracles import oracle_complex_homology


@pytest.fixture(scope="module")
def mk521():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_Mk(MkParams(5, 2, 1, reduce=True))


@pytest.fixture(scope="module")
def gamma521(mk521):
    return min_norm_primitive(mk521.obstruction, vanishing_on="boundary")


class TestParams:
    def test_rejects_non_prime(self):
        with pytest.raises(InvalidParams):
            MkParams(4, 2, 1)

    def test_rejects_equal(self):
        with pytest.raises(InvalidParams):
            MkParams(5, 5, 1)

    def test_warns_small_p(self):
        with pytest.warns(UserWarning):
            MkParams(3, 2, 1)


class TestBuildTp:
    def test_stage_is_annulus(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            A, collapse = build_Tp(2, 1, MkParams(5, 2, 1, reduce=True))
        assert A.euler_characteristic() == 0
        # reduce mode: circle(12) -> circle(6), rim degree 2
        assert len(A.label_cells_of_dim("domain-rim", 1)) == 12
        assert len(A.label_cells_of_dim("target-rim", 1)) == 6

    def test_rim_degree(self):
        A, collapse = build_Tp(5, 1, None)
        src = labeled_cycle(A, "domain-rim")
        from coarse_kit import fundamental_cycle

        dst = fundamental_cycle(collapse.target)
        assert circle_map_degree(collapse, src, dst) == 5

    def test_composite_degree_squares(self):
        # two consecutive stage collapses restricted to their domain rims
        from coarse_kit import circle, fundamental_cycle

        p, base = 2, 6
        f2 = CellMap.from_vertex_map(circle(p * p * base), circle(p * base),
                                     [j % (p * base) for j in range(p * p * base)])
        f1 = CellMap.from_vertex_map(circle(p * base), circle(base),
                                     [j % base for j in range(p * base)])
        comp = f1.compose(f2)
        src = fundamental_cycle(f2.source)
        dst = fundamental_cycle(f1.target)
        assert circle_map_degree(comp, src, dst) == p * p


class TestBuildMk:
    def test_homology_all_triples(self):
        for (p, q, k) in [(5, 2, 1), (5, 2, 2), (7, 2, 1)]:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                b = build_Mk(MkParams(p, q, k, reduce=True))
            M = b.complex
            assert oracle_complex_homology(M, 0) == (1, [])
            assert oracle_complex_homology(M, 1) == (2, [])
            assert oracle_complex_homology(M, 2) == (0, [])
            assert M.euler_characteristic() == -1

    def test_holes_are_triangles(self, mk521):
        M = mk521.complex
        assert len(M.label_cells_of_dim("p-hole", 1)) == 3
        assert len(M.label_cells_of_dim("q-hole", 1)) == 3

    def test_boundary_is_subdivided_triangle(self, mk521):
        M = mk521.complex
        assert len(M.label_cells_of_dim("boundary", 1)) == 6
        assert len(M.label_cells_of_dim("boundary", 0)) == 6

    def test_phi_fixes_boundary(self, mk521):
        for (k, i) in mk521.complex.label_cells("boundary"):
            img = mk521.phi.cell_image(k, i)
            assert list(img.values()) == [1]

    def test_obstruction_is_unit_vortex(self, mk521):
        sup = mk521.obstruction.support()
        assert len(sup) == 1
        assert abs(mk521.obstruction.values[sup[0]]) == 1

    def test_obstruction_solvable_absolute_and_relative(self, mk521):
        from coarse_kit.cochains import relative_coboundary_matrix, _subcomplex_cells

        M = mk521.complex
        # absolute
        A0, cols0, rows0 = relative_coboundary_matrix(M, set(), 1)
        assert solve_integer(A0, [mk521.obstruction.values[j] for j in rows0])
        # relative to the boundary circle
        A_cells = _subcomplex_cells(M, "boundary")
        A1, cols1, rows1 = relative_coboundary_matrix(M, A_cells, 1)
        assert solve_integer(A1, [mk521.obstruction.values[j] for j in rows1])

    def test_min_primitive_meets_growth_bound(self, gamma521):
        assert gamma521.certificate.optimum >= 2 ** 1 - 1

    def test_cohomology_ranks(self, mk521):
        assert cohomology(mk521.complex, 1).free_rank == 2
        h2 = cohomology(mk521.complex, 2)
        assert h2.free_rank == 0 and h2.torsion == []

    def test_pair_exactness_mod2(self, mk521):
        ok, report = exactness_check(mk521.complex, "boundary", ring_zp(2))
        assert ok, [r for r in report if not r["exact"]]

    def test_size_guard(self):
        from coarse_kit.errors import SizeGuardExceeded

        with pytest.raises(SizeGuardExceeded):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                build_Mk(MkParams(5, 2, 4), size_guard=2000)


class TestCollapseXi:
    def test_identity_at_one(self):
        xi = collapse_map_xi(1)
        assert xi.cell_image(1, 0) == {0: 1}

    def test_collapse_three(self):
        xi = collapse_map_xi(3)
        assert xi.cell_image(1, 0) == {}
        assert xi.cell_image(1, 1) == {}
        assert xi.cell_image(1, 2) == {0: 1}

    def test_fundamental_chain_image(self):
        xi = collapse_map_xi(4)
        image = xi.chain_image(1, {0: 1, 1: 1, 2: 1, 3: 1})
        assert image == {0: 1}


class TestBeta:
    def test_zero_gamma(self, mk521):
        g = Cochain(mk521.complex, 1, RING_Z, [0] * mk521.complex.n_cells(1))
        cert = build_beta(g, 1)
        assert cert.beta.norm() == 0

    def test_telescope_single_edge(self):
        # edge with gamma = 3, n = 6: prisms at 0, 2, 4 get +1 and the
        # total over [0, n] telescopes back to 3
        X = filled_triangle()
        g = Cochain(X, 1, RING_Z, [3, 0, 0])
        cert = build_beta(g, 6)
        prod = cert.product
        marked = [l for l in range(6)
                  if cert.beta.values[prod.prism_cell(2, 0, l)] == 1]
        assert marked == [0, 2, 4]
        total = sum(cert.beta.values[prod.prism_cell(2, 0, l)] for l in range(6))
        assert total == 3

    def test_divisibility_guard(self):
        X = filled_triangle()
        g = Cochain(X, 1, RING_Z, [3, 0, 0])
        with pytest.raises(DivisibilityViolated):
            build_beta(g, 4)

    def test_full_certificate_52_1(self, mk521, gamma521):
        gamma = gamma521.gamma
        n = pick_n(gamma, "lcm")
        cert = build_beta(gamma, n)
        c, g = product_obstruction_cocycle(mk521, cert.product)
        assert coboundary(cert.beta) == c
        assert cert.beta.norm() <= 4

    def test_random_small_gammas_bounded(self, mk521):
        # coboundary of the transported cochain stays |delta gamma| + 3
        rng = random.Random(3)
        X = mk521.complex
        for _ in range(5):
            vals = [rng.choice([-1, 0, 1]) for _ in range(X.n_cells(1))]
            g = Cochain(X, 1, RING_Z, vals)
            n = pick_n(g, "lcm")
            cert = build_beta(g, 2 * n)
            assert cert.beta.norm() <= coboundary(g).norm() + 3

    def test_factorial_mode(self):
        X = filled_triangle()
        g = Cochain(X, 1, RING_Z, [2, -1, 1])
        assert pick_n(g, "factorial") == 2
        assert pick_n(g, "lcm") == 2

    def test_staircase_triangulation(self):
        from coarse_kit.complexes import interval_product

        prod = interval_product(filled_triangle(), 2)
        T = staircase_prism_triangulation(prod)
        assert T.euler_characteristic() == 1
        assert oracle_complex_homology(T, 1) == (0, [])


class TestTower:
    def test_depth_zero(self, mk521):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stages = build_tower(MkParams(5, 2, 1, reduce=True), 0)
        assert len(stages) == 1

    def test_depth_bound(self):
        with pytest.raises(InvalidParams):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                build_tower(MkParams(5, 2, 1, reduce=True), 1)

    def test_two_stage_tower(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stages = build_tower(MkParams(5, 2, 2, reduce=True), 1)
        assert len(stages) == 2
        s1 = stages[1]
        assert s1.lipschitz_bound == Fraction(1, 2)
        ok, offending = check_stage_carriers(s1)
        assert ok, offending
        ok2, w = open_star_refinement_witnesses(s1)
        assert ok2 and all(u is not None for u in w.values())

    def test_composite_bound(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stages = build_tower(MkParams(5, 2, 2, reduce=True), 1)
        total = Fraction(1)
        for s in stages[1:]:
            total *= s.lipschitz_bound
        assert total == Fraction(1, 2) ** (len(stages) - 1)


class TestApproxIdentity:
    def test_midpoint(self):
        sub = midpoint_subdivision(filled_triangle())
        rho = simplicial_approx_identity(sub)
        for v in range(sub.complex.n_cells(0)):
            carrier = sub.carrier[(0, v)]
            assert rho.vertex_map[v] in sub.base.simplices[carrier[0]][carrier[1]]

    def test_trivial_subdivision(self):
        from coarse_kit.complexes import Subdivision

        X = filled_triangle()
        triv = Subdivision(X, X, {(k, i): (k, i)
                                  for k in range(3) for i in range(X.n_cells(k))})
        rho = simplicial_approx_identity(triv)
        assert rho.vertex_map == [0, 1, 2]

    def test_barycentric(self):
        sub = barycentric_subdivision(filled_triangle())
        rho = simplicial_approx_identity(sub)
        assert rho.target.counts == [3, 3, 1]


class TestPullback:
    def test_identity_chi(self):
        tau = midpoint_subdivision(filled_triangle())
        chi = CellMap.identity(filled_triangle())
        phi = CellMap.identity(tau.complex)
        res = pullback_complex(chi, phi, tau)
        assert res.complex.counts == tau.complex.counts

    def test_two_sheets(self):
        tau = midpoint_subdivision(filled_triangle())
        two = simplicial_complex([(0, 1, 2), (3, 4, 5)])
        chi = CellMap.from_vertex_map(two, filled_triangle(), [0, 1, 2, 0, 1, 2])
        phi = CellMap.identity(tau.complex)
        res = pullback_complex(chi, phi, tau)
        assert res.complex.counts == [2 * c for c in tau.complex.counts]
        sec = pullback_section(res, chi, phi, tau, 1)
        # a section embeds the base complex into the pullback
        assert sec.source.counts == tau.complex.counts

    def test_square_commutes(self):
        tau = midpoint_subdivision(filled_triangle())
        two = simplicial_complex([(0, 1, 2), (3, 4, 5)])
        chi = CellMap.from_vertex_map(two, filled_triangle(), [0, 1, 2, 0, 1, 2])
        phi = CellMap.identity(tau.complex)
        res = pullback_complex(chi, phi, tau)
        chi_tilde_vm = res.fiber_subdivision.apexes
        for k in range(res.complex.dim + 1):
            for i in range(res.complex.n_cells(k)):
                verts = res.complex.simplices[k][i]
                lhs = sorted({phi.vertex_map[res.proj_base.vertex_map[v]]
                              for v in verts})
                rhs = sorted({chi_tilde_vm[res.fiber_map.vertex_map[v]]
                              for v in verts})
                assert lhs == rhs

    def test_lightness_detected(self):
        from coarse_kit.errors import NotLight

        tau = midpoint_subdivision(filled_triangle())
        degenerate = CellMap.from_vertex_map(
            simplicial_complex([(0, 1)]), filled_triangle(), [0, 0])
        with pytest.raises(NotLight):
            pullback_complex(degenerate, CellMap.identity(tau.complex), tau)

    def test_dimension_coloring_light(self):
        sd = barycentric_subdivision(filled_triangle())
        chi = dimension_coloring(sd)
        assert is_light(chi)


class TestYStages:
    def test_single_stage(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stages = build_Y_stage(MkParams(3, 2, 1, reduce=True), 1)
        assert len(stages) == 1

    def test_two_stages(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stages = build_Y_stage(MkParams(3, 2, 1, reduce=True), 2,
                                   size_guard=3_000_000)
        s2 = stages[1]
        assert is_light(s2.projection)
        assert s2.lipschitz_bound == Fraction(1, 2)
        ok, wit = simplicial_ost_witnesses(s2.projection)
        assert ok and all(u is not None for u in wit.values())
        rho = simplicial_approx_identity(s2.tau)
        q_delta = rho.compose(s2.tau_map)
        ok2, off = check_stage_carriers(s2, q=q_delta)
        assert ok2, off
