import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from coarse_kit.errors import InfeasibleOverQ, NoIntegerSolution
from coarse_kit.exact_linalg import (
    check_lp_lower_bound,
    check_norm_certificate,
    ilp_min_linf,
    lp_min_linf,
    smith_normal_form,
    solve_integer,
    verify_snf,
)

from oracles import oracle_min_linf, oracle_smith_diagonal


def random_matrix(rng, m, n, lo=-3, hi=3):
    return [[rng.randint(lo, hi) for _ in range(n)] for _ in range(m)]


class TestSmithNormalForm:
    def test_diag_2_3(self):
        snf = smith_normal_form([[2, 0], [0, 3]])
        verify_snf([[2, 0], [0, 3]], snf)
        assert snf.diagonal() == [1, 6]

    def test_zero_matrix(self):
        A = [[0, 0], [0, 0]]
        snf = smith_normal_form(A)
        verify_snf(A, snf)
        assert snf.diagonal() == [0, 0]
        assert snf.rank == 0

    def test_identity(self):
        A = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        snf = smith_normal_form(A)
        verify_snf(A, snf)
        assert snf.diagonal() == [1, 1, 1]

    def test_empty(self):
        snf = smith_normal_form([])
        assert snf.D == []

    def test_deterministic(self):
        rng = random.Random(1)
        A = random_matrix(rng, 5, 7)
        s1 = smith_normal_form(A)
        s2 = smith_normal_form(A)
        assert s1.D == s2.D and s1.U == s2.U and s1.V == s2.V

    def test_random_against_oracle_and_sympy(self):
        rng = random.Random(42)
        for trial in range(30):
            m = rng.randrange(1, 6)
            n = rng.randrange(1, 6)
            A = random_matrix(rng, m, n, -6, 6)
            snf = smith_normal_form(A)
            verify_snf(A, snf)
            mine = [d for d in snf.diagonal() if d != 0]
            oracle = [d for d in oracle_smith_diagonal(A) if d != 0]
            assert mine == oracle, f"trial {trial}: {mine} vs {oracle}"
            dm = DomainMatrix([[ZZ(v) for v in row] for row in A], (m, n), ZZ)
            ref = sympy.polys.matrices.normalforms.smith_normal_form(dm)
            ref_diag = [abs(int(ref[i, i].element)) for i in range(min(m, n))]
            ref_diag = [d for d in ref_diag if d != 0]
            assert mine == ref_diag


class TestSolveInteger:
    def test_simple_divisible(self):
        res = solve_integer([[2]], [4])
        assert res.solution == [2]

    def test_simple_indivisible(self):
        res = solve_integer([[2]], [3])
        assert not res
        assert "divide" in res.obstruction

    def test_bezout_row(self):
        res = solve_integer([[5, 2]], [1])
        assert res
        x = res.solution
        assert 5 * x[0] + 2 * x[1] == 1

    def test_agrees_with_exhaustive_search(self):
        rng = random.Random(99)
        np_rng = np.random.default_rng(99)
        grid = np.array(
            np.meshgrid(*[np.arange(-3, 4)] * 6, indexing="ij")
        ).reshape(6, -1)
        for trial in range(100):
            A = np_rng.integers(-3, 4, size=(4, 6))
            x_true = np_rng.integers(-3, 4, size=6)
            if trial % 2 == 0:
                b = A @ x_true  # guaranteed solvable
            else:
                b = np_rng.integers(-6, 7, size=4)
            res = solve_integer(A.tolist(), b.tolist())
            hits = np.all(A @ grid == b[:, None], axis=0)
            small_solution_exists = bool(hits.any())
            if res:
                assert (A @ np.array(res.solution, dtype=object) == b).all()
            if small_solution_exists:
                assert res, f"trial {trial}: oracle found a solution, solver did not"


class TestLpMinLinf:
    def test_two_ones(self):
        assert lp_min_linf([[1, 1]], [2]).value == 1

    def test_zero_rhs(self):
        assert lp_min_linf([[1]], [0]).value == 0

    def test_bezout_row_seventh(self):
        res = lp_min_linf([[5, 2]], [1])
        assert res.value == Fraction(1, 7)
        assert check_lp_lower_bound([[5, 2]], [1], res.dual, Fraction(1, 8))

    def test_infeasible(self):
        with pytest.raises(InfeasibleOverQ):
            lp_min_linf([[0, 0]], [1])

    def test_contradictory_rows(self):
        with pytest.raises(InfeasibleOverQ):
            lp_min_linf([[1, 0], [1, 0]], [1, 2])

    def test_dual_certificate_random(self):
        rng = random.Random(3)
        for _ in range(25):
            m, n = rng.randrange(1, 4), rng.randrange(1, 5)
            A = random_matrix(rng, m, n)
            x = [rng.randint(-2, 2) for _ in range(n)]
            b = [sum(A[i][j] * x[j] for j in range(n)) for i in range(m)]
            res = lp_min_linf(A, b)
            # witness x gives an upper bound, dual certifies the value
            assert res.value <= max((abs(v) for v in x), default=0)
            dot = sum(Fraction(bi) * yi for bi, yi in zip(b, res.dual))
            assert dot == res.value


class TestIlpMinLinf:
    def test_bezout_row(self):
        cert = ilp_min_linf([[5, 2]], [1])
        assert cert.optimum == 2
        assert cert.witness == [1, -2]
        ok, msg = check_norm_certificate([[5, 2]], [1], cert)
        assert ok, msg

    def test_two_ones(self):
        cert = ilp_min_linf([[1, 1]], [2])
        assert cert.optimum == 1
        assert cert.witness == [1, 1]

    def test_no_solution(self):
        with pytest.raises(NoIntegerSolution):
            ilp_min_linf([[2]], [3])

    def test_zero_rhs(self):
        cert = ilp_min_linf([[3, 1], [0, 2]], [0, 0])
        assert cert.optimum == 0 and cert.witness == [0, 0]

    def test_optimum_at_least_lp_ceiling(self):
        rng = random.Random(17)
        for _ in range(20):
            m, n = rng.randrange(1, 4), rng.randrange(2, 6)
            A = random_matrix(rng, m, n)
            x = [rng.randint(-2, 2) for _ in range(n)]
            b = [sum(A[i][j] * x[j] for j in range(n)) for i in range(m)]
            cert = ilp_min_linf(A, b)
            assert cert.optimum >= cert.lp_bound
            assert cert.optimum <= max((abs(v) for v in x), default=0)

    def test_matches_bruteforce(self):
        rng = random.Random(23)
        done = 0
        while done < 25:
            m, n = rng.randrange(1, 4), rng.randrange(2, 6)
            A = random_matrix(rng, m, n, -2, 2)
            x = [rng.randint(-2, 2) for _ in range(n)]
            b = [sum(A[i][j] * x[j] for j in range(n)) for i in range(m)]
            oracle = oracle_min_linf(A, b, max_bound=3)
            if oracle is None:
                continue
            cert = ilp_min_linf(A, b)
            assert cert.optimum == oracle[0], f"{A} {b}"
            ok, msg = check_norm_certificate(A, b, cert)
            assert ok, msg
            done += 1

    def test_matches_bruteforce_eight_vars(self):
        # up to 8 variables with optimum <= 3
        rng = random.Random(29)
        done = 0
        while done < 8:
            m, n = rng.randrange(2, 5), 8
            A = random_matrix(rng, m, n, -2, 2)
            x = [rng.randint(-2, 2) for _ in range(n)]
            b = [sum(A[i][j] * x[j] for j in range(n)) for i in range(m)]
            oracle = oracle_min_linf(A, b, max_bound=3)
            if oracle is None or oracle[0] > 3:
                continue
            cert = ilp_min_linf(A, b)
            assert cert.optimum == oracle[0], f"{A} {b}"
            done += 1

    def test_witness_deterministic(self):
        certs = [ilp_min_linf([[1, 1, 0], [0, 0, 1]], [0, 2]) for _ in range(3)]
        assert all(c.optimum == 2 for c in certs)
        assert certs[0].witness == certs[1].witness == certs[2].witness
        assert max(abs(v) for v in certs[0].witness) == 2
