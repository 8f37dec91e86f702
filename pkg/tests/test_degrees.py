import random
from fractions import Fraction

import pytest

from coarse_kit import CellMap, annulus_triangulation, circle, fundamental_cycle
from coarse_kit.complexes import labeled_cycle
from coarse_kit.degrees import (
    DegreeReport,
    bezout,
    check_degree_relation,
    circle_map_degree,
    min_m_bound,
)
from coarse_kit.errors import HypothesisViolated, NotCoprime

from test_complexes import random_circle_map

PRIMES = [2, 3, 5, 7, 11, 13]


class TestBezout:
    def test_known_values(self):
        assert bezout(5, 2, 1) == (1, -2)
        assert bezout(5, 2, 2) == (1, -6)

    def test_not_coprime(self):
        with pytest.raises(NotCoprime):
            bezout(4, 2, 1)

    def test_deterministic(self):
        assert bezout(7, 3, 2) == bezout(7, 3, 2)

    def test_minimality_exhaustive(self):
        # every solution in the residue class has |m| >= the returned one
        for p in PRIMES:
            for q in PRIMES:
                if p == q:
                    continue
                for k in (1, 2, 3):
                    P, Q = p ** k, q ** k
                    n, m = bezout(p, q, k)
                    assert n * P + m * Q == 1
                    best = min(
                        abs(mm) for mm in range(-P, P + 1)
                        if (1 - mm * Q) % P == 0 and mm != 0
                    )
                    assert abs(m) == best


class TestMinMBound:
    def test_values(self):
        assert min_m_bound(5, 2, 2) == Fraction(24, 4)
        assert min_m_bound(5, 2, 1) == Fraction(4, 2)
        assert min_m_bound(11, 3, 1) == Fraction(10, 3)

    def test_bound_attained_or_exceeded(self):
        assert abs(bezout(5, 2, 2)[1]) == 6 == min_m_bound(5, 2, 2)
        assert abs(bezout(11, 3, 1)[1]) == 4 >= min_m_bound(11, 3, 1)

    def test_warns_when_hypothesis_fails(self):
        with pytest.warns(HypothesisViolated):
            min_m_bound(3, 2, 1)

    def test_exhaustive_lower_bound(self):
        # all coprime p, q <= 13, k <= 4: every solution has |m| >= (p^k-1)/q^k
        for p in PRIMES:
            for q in PRIMES:
                if p == q:
                    continue
                for k in (1, 2, 3, 4):
                    P, Q = p ** k, q ** k
                    bound = Fraction(P - 1, Q)
                    n, m = bezout(p, q, k)
                    assert m != 0
                    # the residue class m0 + t*P: the two nearest-to-zero
                    # members bracket every other solution in absolute value
                    m0 = m % P
                    for mm in (m0, m0 - P):
                        if mm != 0:
                            assert abs(mm) >= bound, (p, q, k, mm)


class TestCircleMapDegree:
    def test_identity(self):
        C = circle(3)
        f = CellMap.identity(C)
        cyc = fundamental_cycle(C)
        assert circle_map_degree(f, cyc, cyc) == 1

    def test_constant(self):
        C = circle(3)
        f = CellMap.from_vertex_map(C, C, [0, 0, 0])
        cyc = fundamental_cycle(C)
        assert circle_map_degree(f, cyc, cyc) == 0

    def test_annulus_rim_collapse(self):
        A, collapse = annulus_triangulation(6, 3)
        src = labeled_cycle(A, "domain-rim")
        dst = fundamental_cycle(collapse.target)
        assert circle_map_degree(collapse, src, dst) == 2

    def test_multiplicative_under_composition(self):
        rng = random.Random(59)
        for _ in range(50):
            c = rng.choice([3, 4])
            mid = c * rng.choice([1, 2])
            top = mid * rng.choice([1, 2])
            f, df = random_circle_map(rng, top, mid)
            g, dg = random_circle_map(rng, mid, c)
            gf = g.compose(f)
            cyc_top = fundamental_cycle(f.source)
            cyc_mid = fundamental_cycle(f.target)
            cyc_bot = fundamental_cycle(g.target)
            assert circle_map_degree(f, cyc_top, cyc_mid) == df
            assert circle_map_degree(g, cyc_mid, cyc_bot) == dg
            assert circle_map_degree(gf, cyc_top, cyc_bot) == df * dg


class TestDegreeRelation:
    def test_bezout_triple_holds(self):
        rep = DegreeReport(p=5, q=2, k=1, d_p=1, d_q=-2, d=1)
        ok, msg = check_degree_relation(rep)
        assert ok, msg

    def test_zero_degrees_fail(self):
        rep = DegreeReport(p=5, q=2, k=1, d_p=0, d_q=0, d=1)
        ok, _ = check_degree_relation(rep)
        assert not ok

    def test_random_consistent_triples(self):
        rng = random.Random(61)
        for _ in range(100):
            p, q = 5, 2
            k = rng.choice([1, 2])
            n, m = bezout(p, q, k)
            d = rng.randint(1, 3)
            t = rng.randint(-2, 2)
            d_p = d * (n + t * q ** k)
            d_q = d * (m - t * p ** k)
            rep = DegreeReport(p=p, q=q, k=k, d_p=d_p, d_q=d_q, d=d)
            ok, msg = check_degree_relation(rep)
            assert ok, msg
