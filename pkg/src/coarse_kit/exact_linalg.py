"""Exact integer and rational linear algebra.

Smith normal form with unimodular witnesses, integer linear solving, an exact
rational solver for min ||x||_inf subject to Ax = b, and a depth-first
branch-and-bound search for the integer optimum with certificates.

No floating point anywhere: integers are arbitrary precision, the LP runs on
an all-integer tableau (fraction-free pivoting), values are Fractions.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    InfeasibleOverQ,
    NodeLimitExceeded,
    NoIntegerSolution,
    ShapeMismatch,
    SizeGuardExceeded,
)

DEFAULT_SNF_BUDGET = 4_000_000
DEFAULT_NODE_LIMIT = 10_000_000


def _shape(A):
    m = len(A)
    n = len(A[0]) if m else 0
    for row in A:
        if len(row) != n:
            raise ShapeMismatch("ragged matrix")
    return m, n


def mat_vec(A, x):
    return [sum(a * v for a, v in zip(row, x)) for row in A]


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


@dataclass
class SnfDecomposition:
    """U * A * V = D with U, V unimodular and D a divisibility-chain diagonal."""

    U: list
    D: list
    V: list
    rank: int = 0

    def diagonal(self):
        m = len(self.D)
        n = len(self.D[0]) if m else 0
        return [self.D[i][i] for i in range(min(m, n))]


def smith_normal_form(A, size_guard=DEFAULT_SNF_BUDGET):
    """Smith normal form over Z with unimodular factors.

    Pivot rule: smallest nonzero absolute value, ties broken by (row, col).
    Deterministic for a fixed input.
    """
    m, n = _shape(A)
    if m * n > size_guard:
        raise SizeGuardExceeded(f"matrix has {m * n} cells (budget {size_guard})")
    D = [list(map(int, row)) for row in A]
    U = _identity(m)
    V = _identity(n)

    def row_op(i1, i2, q):
        # row i2 -= q * row i1
        Di1, Di2 = D[i1], D[i2]
        for j in range(n):
            Di2[j] -= q * Di1[j]
        Ui1, Ui2 = U[i1], U[i2]
        for j in range(m):
            Ui2[j] -= q * Ui1[j]

    def col_op(j1, j2, q):
        for i in range(m):
            D[i][j2] -= q * D[i][j1]
        for i in range(n):
            V[i][j2] -= q * V[i][j1]

    def row_swap(i1, i2):
        D[i1], D[i2] = D[i2], D[i1]
        U[i1], U[i2] = U[i2], U[i1]

    def col_swap(j1, j2):
        for i in range(m):
            D[i][j1], D[i][j2] = D[i][j2], D[i][j1]
        for i in range(n):
            V[i][j1], V[i][j2] = V[i][j2], V[i][j1]

    def row_negate(i):
        for j in range(n):
            D[i][j] = -D[i][j]
        for j in range(m):
            U[i][j] = -U[i][j]

    t = 0
    while True:
        pivot = None
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = D[i][j]
                if v != 0 and (best is None or abs(v) < best):
                    best = abs(v)
                    pivot = (i, j)
        if pivot is None:
            break
        i0, j0 = pivot
        row_swap(t, i0)
        col_swap(t, j0)
        if D[t][t] < 0:
            row_negate(t)
        clean = True
        for i in range(t + 1, m):
            if D[i][t] != 0:
                q = D[i][t] // D[t][t]
                row_op(t, i, q)
                if D[i][t] != 0:
                    clean = False
        for j in range(t + 1, n):
            if D[t][j] != 0:
                q = D[t][j] // D[t][t]
                col_op(t, j, q)
                if D[t][j] != 0:
                    clean = False
        if not clean:
            continue  # remainders became new, smaller pivot candidates
        # pivot must divide the rest of the block; otherwise fold a bad row in
        bad = None
        for i in range(t + 1, m):
            for j in range(t + 1, n):
                if D[i][j] % D[t][t] != 0:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            row_op(bad, t, -1)  # row t += row bad, creates reducible entries
            continue
        t += 1
    rank = t
    return SnfDecomposition(U=U, D=D, V=V, rank=rank)


def verify_snf(A, snf):
    """Exact check of all Smith-form invariants; returns True or raises."""
    m, n = _shape(A)
    prod = [[sum(snf.U[i][k] * A[k][j] for k in range(m)) for j in range(n)]
            for i in range(m)]
    prod = [[sum(prod[i][k] * snf.V[k][j] for k in range(n)) for j in range(n)]
            for i in range(m)]
    if prod != snf.D:
        raise ArithmeticError("U*A*V != D")
    for i in range(m):
        for j in range(n):
            if i != j and snf.D[i][j] != 0:
                raise ArithmeticError("D is not diagonal")
    diag = snf.diagonal()
    for a, b in zip(diag, diag[1:]):
        if a < 0 or (a == 0 and b != 0) or (a > 0 and b % a != 0):
            raise ArithmeticError("diagonal is not a divisibility chain")
    if abs(_det_unimodular(snf.U)) != 1 or abs(_det_unimodular(snf.V)) != 1:
        raise ArithmeticError("U or V is not unimodular")
    return True


def _det_unimodular(M):
    """Determinant by fraction-free Gaussian elimination (Bareiss)."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(row) for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
            A[i][k] = 0
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def kernel_lattice_basis(A, snf=None):
    """Integer basis of the saturated kernel lattice {x in Z^n : A x = 0}.

    Columns of the Smith V factor beyond the rank; returned as a list of
    basis vectors.
    """
    m, n = _shape(A)
    if snf is None:
        snf = smith_normal_form(A)
    rank = snf.rank
    return [[snf.V[i][j] for i in range(n)] for j in range(rank, n)]


def lattice_quotient_complement(K, M):
    """Split a kernel lattice over a sublattice: span(K) = span(M) + free part.

    ``K``: basis vectors of the ambient lattice; ``M``: generating vectors of
    the sublattice (each expressible in K).  Returns (free, divisors) where
    ``free`` are basis vectors of a complement of the saturation and
    ``divisors`` are the nontrivial invariant factors (torsion of the
    quotient; empty when the quotient is free).
    """
    if not K:
        return [], []
    n = len(K[0])
    r = len(K)
    # coordinates of M in the basis K: solve K^T s = M^T columnwise
    KT = [[K[j][i] for j in range(r)] for i in range(n)]
    snf_k = smith_normal_form(KT)
    S = []
    for vec in M:
        res = solve_integer(KT, vec, snf=snf_k)
        if not res:
            raise ArithmeticError("sublattice vector escapes the lattice")
        S.append(res.solution)
    if not S:
        return list(K), []
    Smat = [[S[t][i] for t in range(len(S))] for i in range(r)]
    dec = smith_normal_form(Smat)
    # rows of U^-1 give the adapted basis; columns of U^-1 = solve U X = I
    Uinv = _unimodular_inverse(dec.U)
    adapted = []
    for t in range(r):
        vec = [sum(Uinv[i][t] * K[i][j] for i in range(r)) for j in range(n)]
        adapted.append(vec)
    diag = dec.diagonal()
    free = [adapted[t] for t in range(len(diag), r)]
    free += [adapted[t] for t in range(len(diag)) if diag[t] == 0]
    torsion = [d for d in diag if d > 1]
    return free, torsion


def _unimodular_inverse(U):
    """Exact inverse of a unimodular integer matrix (integer entries)."""
    n = len(U)
    aug = [list(U[i]) + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    # fraction-free Gauss-Jordan; determinant +-1 keeps everything integral
    from fractions import Fraction as F

    M = [[F(v) for v in row] for row in aug]
    for col in range(n):
        piv = next(i for i in range(col, n) if M[i][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [v / pv for v in M[col]]
        for i in range(n):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [v - f * w for v, w in zip(M[i], M[col])]
    inv = [[M[i][n + j] for j in range(n)] for i in range(n)]
    out = [[int(v) for v in row] for row in inv]
    if any(inv[i][j] != out[i][j] for i in range(n) for j in range(n)):
        raise ArithmeticError("matrix is not unimodular")
    return out


@dataclass
class IntegerSolveResult:
    """Outcome of solving A x = b over Z."""

    solution: list = None
    obstruction: str = None

    def __bool__(self):
        return self.solution is not None


def solve_integer(A, b, snf=None):
    """Solve A x = b over the integers via Smith normal form.

    Returns an :class:`IntegerSolveResult`; when unsolvable, ``obstruction``
    names the violated divisibility (or inconsistency) condition.
    """
    m, n = _shape(A)
    if len(b) != m:
        raise ShapeMismatch(f"rhs length {len(b)} != {m} rows")
    if snf is None:
        snf = smith_normal_form(A)
    c = mat_vec(snf.U, [int(v) for v in b])
    y = [0] * n
    for i in range(min(m, n)):
        d = snf.D[i][i]
        if d == 0:
            if c[i] != 0:
                return IntegerSolveResult(
                    obstruction=f"row {i}: 0 = {c[i]} is inconsistent")
            continue
        if c[i] % d != 0:
            return IntegerSolveResult(
                obstruction=f"row {i}: {d} does not divide {c[i]}")
        y[i] = c[i] // d
    for i in range(n, m):
        if c[i] != 0:
            return IntegerSolveResult(
                obstruction=f"row {i}: 0 = {c[i]} is inconsistent")
    x = mat_vec(snf.V, y)
    return IntegerSolveResult(solution=x)


# -- exact L-infinity LP -------------------------------------------------------


@dataclass
class LinfRelaxation:
    """Exact rational value of min ||x||_inf s.t. Ax = b, with dual certificate.

    ``dual`` is a rational vector y with ||A^T y||_1 <= 1 and b . y = value,
    so every rational solution x has ||x||_inf >= value.
    """

    value: Fraction
    dual: list


def lp_min_linf(A, b, max_pivots=2_000_000):
    """Exact rational optimum of min ||x||_inf subject to A x = b.

    Solved through the dual max { b.y : ||A^T y||_1 <= 1 } with an
    all-integer simplex tableau (fraction-free pivoting, Bland's rule), which
    both avoids a phase-1 and hands back the certifying dual vector.
    """
    m, n = _shape(A)
    b = [int(v) for v in b]
    if all(v == 0 for v in b):
        return LinfRelaxation(value=Fraction(0), dual=[Fraction(0)] * m)
    if n == 0 or all(all(v == 0 for v in row) for row in A):
        raise InfeasibleOverQ("A x = b has no rational solution (A is zero, b is not)")

    # variables: y+ (m), y- (m), g+ (n), g- (n), slack (1)
    # rows 0..n-1:  A^T (y+ - y-) - g+ + g- = 0
    # row  n:       sum(g+) + sum(g-) + slack = 1
    nvars = 2 * m + 2 * n + 1
    nrows = n + 1
    T = [[0] * nvars for _ in range(nrows)]
    rhs = [0] * nrows
    for j in range(n):
        for i in range(m):
            T[j][i] = A[i][j]
            T[j][m + i] = -A[i][j]
        T[j][2 * m + n + j] = 1       # g-_j
        T[j][2 * m + j] = -1          # g+_j
    for j in range(n):
        T[n][2 * m + j] = 1
        T[n][2 * m + n + j] = 1
    T[n][2 * m + 2 * n] = 1
    rhs[n] = 1
    # canonicalize: clear the g- entries out of the sum row so the start
    # basis (g-_0..g-_{n-1}, slack) reads as identity columns
    for j in range(n):
        for col in range(nvars):
            T[n][col] -= T[j][col]
        rhs[n] -= rhs[j]
    # objective: maximize b.y  ->  minimize -b.(y+ - y-)
    cost = [0] * nvars
    for i in range(m):
        cost[i] = -b[i]
        cost[m + i] = b[i]
    basis = [2 * m + n + j for j in range(n)] + [2 * m + 2 * n]

    # integer tableau: exact value of any cell is entry / den, den > 0
    den = 1
    cost_row = list(cost)  # reduced-cost row, same denominator

    pivots = 0
    while True:
        pivots += 1
        if pivots > max_pivots:
            raise SizeGuardExceeded("simplex pivot budget exhausted")
        enter = None
        for j in range(nvars):
            if cost_row[j] < 0:
                enter = j
                break
        if enter is None:
            break
        # ratio test (Bland: smallest basis variable wins ties)
        leave = None
        best = None
        for i in range(nrows):
            if T[i][enter] > 0:
                ratio = Fraction(rhs[i], T[i][enter])
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave is None:
            raise InfeasibleOverQ("A x = b has no rational solution (dual unbounded)")
        piv = T[leave][enter]
        new_den = piv
        for i in range(nrows):
            if i == leave:
                continue
            f = T[i][enter]
            Ti, Tl = T[i], T[leave]
            for j in range(nvars):
                Ti[j] = (Ti[j] * piv - f * Tl[j]) // den
            rhs[i] = (rhs[i] * piv - f * rhs[leave]) // den
        f = cost_row[enter]
        for j in range(nvars):
            cost_row[j] = (cost_row[j] * piv - f * T[leave][j]) // den
        basis[leave] = enter
        den = new_den

    y = [Fraction(0)] * (2 * m)
    for i, var in enumerate(basis):
        if var < 2 * m:
            y[var] = Fraction(rhs[i], den)
    dual = [y[i] - y[m + i] for i in range(m)]
    value = sum(bi * yi for bi, yi in zip(b, dual))  # max b.y at optimality
    # exact certificate sanity: ||A^T dual||_1 <= 1
    norm1 = sum(abs(sum(A[i][j] * dual[i] for i in range(m))) for j in range(n))
    if norm1 > 1:
        raise ArithmeticError("simplex produced an invalid dual certificate")
    return LinfRelaxation(value=value, dual=dual)


def check_lp_lower_bound(A, b, dual, bound):
    """Verify the dual certificate shows min ||x||_inf > bound.

    Needs ||A^T y||_1 <= 1 and b . y > bound; then ||x||_inf >= b.y for every
    solution of A x = b.  Pure evaluation, no search.
    """
    m, n = _shape(A)
    norm1 = sum(abs(sum(A[i][j] * dual[i] for i in range(m))) for j in range(n))
    dot = sum(Fraction(bi) * yi for bi, yi in zip(b, dual))
    return norm1 <= 1 and dot > bound


def _box_lp(A, b, lo, hi, max_pivots=2_000_000):
    """Exact feasibility of A x = b with lo_j <= x_j <= hi_j (integers).

    Phase-1 bounded-variable simplex on z = x - lo in [0, U_j] with an
    all-integer tableau (fraction-free pivoting, signed denominator); upper
    bounds handled by column substitutions z -> U - z so every nonbasic
    variable sits at zero in the working frame.  Returns (x, None) with a
    rational basic solution when feasible, else (None, farkas) where
    farkas . b > sum_j max(g_j lo_j, g_j hi_j) for g = A^T farkas, exactly.
    """
    m, n = _shape(A)
    b = [int(v) for v in b]
    if any(lo[j] > hi[j] for j in range(n)):
        raise ShapeMismatch("empty box")
    U = [hi[j] - lo[j] for j in range(n)]
    bp = [b[i] - sum(A[i][j] * lo[j] for j in range(n)) for i in range(m)]
    if n == 0 or all(u == 0 for u in U):
        x = [Fraction(lo[j]) for j in range(n)]
        if mat_vec_fraction(A, x) == [Fraction(v) for v in b]:
            return x, None
        i = next(i for i in range(m) if bp[i] != 0)
        pi = [Fraction(0)] * m
        pi[i] = Fraction(1 if bp[i] > 0 else -1)
        return None, _normalize_farkas(A, b, lo, hi, pi)
    row_sign = [1 if v >= 0 else -1 for v in bp]
    T = [[row_sign[i] * A[i][j] for j in range(n)] + [0] * m for i in range(m)]
    for i in range(m):
        T[i][n + i] = 1
    rhs = [row_sign[i] * bp[i] for i in range(m)]
    nvars = n + m
    den = 1
    cost = [0] * nvars  # canonical phase-1 reduced costs
    obj = 0             # rhs cell of the cost row (= -objective * den)
    for i in range(m):
        for j in range(n):
            cost[j] -= T[i][j]
        obj -= rhs[i]
    basis = [n + i for i in range(m)]
    basic_pos = {n + i: i for i in range(m)}
    flipped = [False] * n  # z_j currently substituted as U_j - z_j

    def exact_div(a, d):
        q, r = divmod(a, d)
        if r != 0:
            raise ArithmeticError("fraction-free pivot lost exact divisibility")
        return q

    def flip_column(j):
        nonlocal obj
        u = U[j]
        for i in range(m):
            rhs[i] -= u * T[i][j]
            T[i][j] = -T[i][j]
        obj -= u * cost[j]
        cost[j] = -cost[j]
        flipped[j] = not flipped[j]

    pivots = 0
    stall = 0
    stall_limit = 20 * (m + n)
    while True:
        pivots += 1
        if pivots > max_pivots:
            raise SizeGuardExceeded("phase-1 pivot budget exhausted")
        dsgn = 1 if den > 0 else -1
        # Dantzig rule (most negative reduced cost) until a degeneracy stall,
        # then Bland's rule for guaranteed termination
        enter = None
        if stall <= stall_limit:
            best_c = 0
            for j in range(nvars):
                if j in basic_pos or (j < n and U[j] == 0):
                    continue
                c = dsgn * cost[j]
                if c < best_c:
                    best_c, enter = c, j
        else:
            enter = next(
                (j for j in range(nvars)
                 if j not in basic_pos and not (j < n and U[j] == 0)
                 and dsgn * cost[j] < 0),
                None,
            )
        if enter is None:
            break
        cap = Fraction(U[enter]) if enter < n else None
        leave = None
        leave_upper = False
        best = None
        for i in range(m):
            c = T[i][enter]
            if c == 0:
                continue
            if dsgn * c > 0:  # basic value decreases toward 0
                cand = Fraction(rhs[i], c)
                upperhit = False
            elif basis[i] < n:  # basic value increases toward its U
                cand = Fraction(U[basis[i]] * den - rhs[i], -c)
                upperhit = True
            else:
                continue
            if best is None or cand < best or (
                cand == best and basis[i] < basis[leave]
            ):
                best, leave, leave_upper = cand, i, upperhit
        if leave is None and cap is None:
            raise ArithmeticError("phase-1 unbounded (cannot happen)")
        if leave is None or (cap is not None and best > cap):
            flip_column(enter)  # entering variable jumps to its other bound
            stall = 0
            continue
        stall = stall + 1 if best == 0 else 0
        out = basis[leave]
        piv = T[leave][enter]
        for i in range(m):
            if i == leave:
                continue
            f = T[i][enter]
            Ti, Tl = T[i], T[leave]
            for j in range(nvars):
                Ti[j] = exact_div(Ti[j] * piv - f * Tl[j], den)
            rhs[i] = exact_div(rhs[i] * piv - f * rhs[leave], den)
        f = cost[enter]
        for j in range(nvars):
            cost[j] = exact_div(cost[j] * piv - f * T[leave][j], den)
        obj = exact_div(obj * piv - f * rhs[leave], den)
        basis[leave] = enter
        del basic_pos[out]
        basic_pos[enter] = leave
        den = piv
        if leave_upper and out < n:
            flip_column(out)  # the leaving variable parks at its upper bound

    value = Fraction(-obj, den)
    if value == 0:
        z = [Fraction(0)] * n
        for i in range(m):
            if basis[i] < n:
                z[basis[i]] = Fraction(rhs[i], den)
        for j in range(n):
            if flipped[j]:
                z[j] = U[j] - z[j]
        x = [zj + lo[j] for j, zj in enumerate(z)]
        if mat_vec_fraction(A, x) != [Fraction(v) for v in b]:
            raise ArithmeticError("phase-1 produced an invalid point")
        if any(not lo[j] <= x[j] <= hi[j] for j in range(n)):
            raise ArithmeticError("phase-1 point violates the box")
        return x, None
    # infeasible: Farkas vector from the artificial reduced costs
    y = [1 - Fraction(cost[n + i], den) for i in range(m)]
    pi = [row_sign[i] * y[i] for i in range(m)]
    return None, _normalize_farkas(A, b, lo, hi, pi)


def _normalize_farkas(A, b, lo, hi, pi):
    """Scale a Farkas vector and verify it separates the box exactly."""
    m, n = _shape(A)
    g = [sum(A[i][j] * pi[i] for i in range(m)) for j in range(n)]
    cap = sum(max(gj * lo[j], gj * hi[j]) for j, gj in enumerate(g))
    dot = sum(Fraction(b[i]) * pi[i] for i in range(m))
    if dot <= cap:
        raise ArithmeticError("phase-1 produced an invalid Farkas certificate")
    norm1 = sum(abs(gj) for gj in g)
    if norm1 > 0:
        pi = [v / norm1 for v in pi]
    return pi


def box_feasibility(A, b, t, max_pivots=2_000_000):
    """Feasibility of A x = b in the symmetric box |x_j| <= t.

    Returns (x, None) when feasible, else (None, farkas) with
    farkas . b > t * ||A^T farkas||_1 and ||A^T farkas||_1 <= 1 — the
    checkable sup-norm lower-bound certificate at bound t.
    """
    m, n = _shape(A)
    return _box_lp(A, b, [-t] * n, [t] * n, max_pivots=max_pivots)


def mat_vec_fraction(A, x):
    return [sum(Fraction(a) * v for a, v in zip(row, x)) for row in A]


# -- integer L-infinity minimization -------------------------------------------


@dataclass
class NormCertificate:
    """Exact integer optimum of min ||x||_inf s.t. Ax = b with certificates.

    ``infeasibility_proof`` certifies that no solution exists with norm
    <= optimum - 1: either the LP dual vector (kind "lp-dual", re-checkable
    without search) or the exhausted search log (kind "search-exhausted").
    """

    optimum: int
    witness: list
    infeasibility_proof: dict
    node_count: int
    lp_bound: Fraction = None


def _propagate_bounds(rows_sparse, cols_sparse, b, lo, hi):
    """Integer bounds-consistency on A x = b over the box [lo, hi].

    Tightens lo/hi in place to a fixpoint; returns False when some row
    becomes unsatisfiable.  Exact integer arithmetic throughout.
    """
    m = len(rows_sparse)
    n = len(lo)
    min_term = [[0] * len(r) for r in rows_sparse]
    max_term = [[0] * len(r) for r in rows_sparse]
    minS = [0] * m
    maxS = [0] * m
    pos_in_row = [dict() for _ in range(m)]
    for i, r in enumerate(rows_sparse):
        for t_, (j, a) in enumerate(r):
            v1, v2 = a * lo[j], a * hi[j]
            min_term[i][t_] = min(v1, v2)
            max_term[i][t_] = max(v1, v2)
            pos_in_row[i][j] = t_
        minS[i] = sum(min_term[i])
        maxS[i] = sum(max_term[i])
    from collections import deque

    queue = deque(range(m))
    queued = [True] * m
    while queue:
        i = queue.popleft()
        queued[i] = False
        if not (minS[i] <= b[i] <= maxS[i]):
            return False
        for t_, (j, a) in enumerate(rows_sparse[i]):
            rest_min = minS[i] - min_term[i][t_]
            rest_max = maxS[i] - max_term[i][t_]
            # a * x_j must lie in [b_i - rest_max, b_i - rest_min]
            lo_ax, hi_ax = b[i] - rest_max, b[i] - rest_min
            if a > 0:
                new_lo = _ceil_div(lo_ax, a)
                new_hi = _floor_div(hi_ax, a)
            else:
                new_lo = _ceil_div(hi_ax, a)
                new_hi = _floor_div(lo_ax, a)
            changed = False
            if new_lo > lo[j]:
                lo[j] = new_lo
                changed = True
            if new_hi < hi[j]:
                hi[j] = new_hi
                changed = True
            if lo[j] > hi[j]:
                return False
            if changed:
                for i2, a2 in cols_sparse[j]:
                    t2 = pos_in_row[i2][j]
                    v1, v2 = a2 * lo[j], a2 * hi[j]
                    nmin, nmax = min(v1, v2), max(v1, v2)
                    minS[i2] += nmin - min_term[i2][t2]
                    maxS[i2] += nmax - max_term[i2][t2]
                    min_term[i2][t2] = nmin
                    max_term[i2][t2] = nmax
                    if not queued[i2]:
                        queue.append(i2)
                        queued[i2] = True
    return True


def _floor_div(a, d):
    return a // d


def _ceil_div(a, d):
    return -((-a) // d)


def _integer_point_in_box(A, b, t, node_budget, state):
    """Complete search for an integer point of A x = b with ||x||_inf <= t.

    Branch and bound: integer bounds propagation at every node, then the
    exact box-LP relaxation; infeasible nodes prune, integral vertices
    finish, otherwise the most fractional coordinate branches with the
    nearer integer side explored first.  Deterministic.
    """
    m, n = _shape(A)
    rows_sparse = []
    cols_sparse = [[] for _ in range(n)]
    for i in range(m):
        r = [(j, A[i][j]) for j in range(n) if A[i][j] != 0]
        rows_sparse.append(r)
        for j, a in r:
            cols_sparse[j].append((i, a))
    b = [int(v) for v in b]
    stack = [([-t] * n, [t] * n)]
    while stack:
        lo, hi = stack.pop()
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise NodeLimitExceeded("node budget exhausted",
                                    node_count=state["nodes"])
        if not _propagate_bounds(rows_sparse, cols_sparse, b, lo, hi):
            continue
        if all(lo[j] == hi[j] for j in range(n)):
            x = list(lo)
            if mat_vec(A, x) == b:
                return x
            continue
        x, _ = _box_lp(A, b, lo, hi)
        if x is None:
            continue
        frac = [(abs(x[j] - x[j].numerator // x[j].denominator - Fraction(1, 2)),
                 j) for j in range(n) if x[j].denominator != 1]
        if not frac:
            return [int(v) for v in x]
        _, jb = min(frac)
        f = x[jb]
        fl = f.numerator // f.denominator
        down = (list(lo), list(hi))
        down[1][jb] = fl
        up = (list(lo), list(hi))
        up[0][jb] = fl + 1
        if f - fl <= Fraction(1, 2):  # floor side is nearer: explore first
            stack.append(up)
            stack.append(down)
        else:
            stack.append(down)
            stack.append(up)
    return None


def ilp_min_linf(A, b, node_limit=DEFAULT_NODE_LIMIT, snf=None):
    """Exact integer optimum of min ||x||_inf s.t. A x = b.

    The rational relaxation is probed at integer bounds (exact phase-1
    feasibility with Farkas certificates), which pins ceil(lp) and usually
    hands over an integral vertex witness for free; otherwise the level is
    settled by a complete depth-first search with exact arithmetic.  Raises
    NoIntegerSolution when A x = b is unsolvable over Z, NodeLimitExceeded
    (best-known interval attached) when the budget runs out.
    """
    m, n = _shape(A)
    b = [int(v) for v in b]
    base = solve_integer(A, b, snf=snf)
    if not base:
        raise NoIntegerSolution(base.obstruction)
    if all(v == 0 for v in b):
        return NormCertificate(
            optimum=0, witness=[0] * n,
            infeasibility_proof={"kind": "trivial", "detail": "rhs is zero"},
            node_count=0, lp_bound=Fraction(0),
        )
    # find the smallest integer t with a rational solution in the box [-t, t]
    farkas_at = {}
    points = {}

    def lp_feasible(t):
        if t in points or t in farkas_at:
            return t in points
        x, pi = box_feasibility(A, b, t)
        if x is not None:
            points[t] = x
            return True
        farkas_at[t] = pi
        return False

    lp_feasible(0)  # records the Farkas vector at 0 (b is nonzero here)
    t = 1
    while not lp_feasible(t):
        t *= 2
    lo_t, hi_t = t // 2, t
    while lo_t + 1 < hi_t:
        mid = (lo_t + hi_t) // 2
        if lp_feasible(mid):
            hi_t = mid
        else:
            lo_t = mid
    lo = hi_t  # = ceil of the rational optimum
    state = {"nodes": 0}
    incumbent = None
    incumbent_bound = None
    vertex = points.get(lo)
    if vertex is not None and all(v.denominator == 1 for v in vertex):
        incumbent = [int(v) for v in vertex]
        incumbent_bound = max(abs(v) for v in incumbent)

    def feasible(bound):
        nonlocal incumbent, incumbent_bound
        if incumbent_bound is not None and incumbent_bound <= bound:
            return True
        try:
            sol = _integer_point_in_box(A, b, bound, node_limit, state)
        except NodeLimitExceeded as exc:
            raise NodeLimitExceeded(
                str(exc), lower=lo, upper=incumbent_bound, witness=incumbent,
                node_count=state["nodes"],
            ) from exc
        if sol is not None:
            val = max(abs(v) for v in sol) if sol else 0
            if incumbent_bound is None or val < incumbent_bound:
                incumbent, incumbent_bound = sol, val
        return sol is not None

    search_exhausted_at = None
    hi = max(lo, 1)
    while not feasible(hi):
        search_exhausted_at = hi
        lo = hi + 1
        hi = 2 * hi + 1
    hi = incumbent_bound
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = min(mid, incumbent_bound)
        else:
            search_exhausted_at = max(search_exhausted_at or -1, mid)
            lo = mid + 1
    optimum = hi
    witness = incumbent
    if optimum == 0:
        proof = {"kind": "trivial", "detail": "optimum is zero"}
    elif optimum - 1 in farkas_at:
        proof = {
            "kind": "lp-dual",
            "dual": farkas_at[optimum - 1],
            "bound": optimum - 1,
        }
    else:
        proof = {
            "kind": "search-exhausted",
            "bound": optimum - 1,
            "nodes": state["nodes"],
        }
    return NormCertificate(
        optimum=optimum, witness=witness, infeasibility_proof=proof,
        node_count=state["nodes"], lp_bound=Fraction(hi_t),
    )


def check_norm_certificate(A, b, cert):
    """Re-validate a NormCertificate without re-running any search."""
    m, n = _shape(A)
    if mat_vec(A, cert.witness) != [int(v) for v in b]:
        return False, "witness does not solve the system"
    norm = max((abs(v) for v in cert.witness), default=0)
    if norm != cert.optimum:
        return False, f"witness norm {norm} != claimed optimum {cert.optimum}"
    proof = cert.infeasibility_proof
    if cert.optimum == 0:
        return True, "optimum 0 needs no lower-bound certificate"
    if proof.get("kind") == "lp-dual":
        ok = check_lp_lower_bound(A, b, proof["dual"], cert.optimum - 1)
        return ok, "lp dual certificate " + ("valid" if ok else "INVALID")
    if proof.get("kind") == "search-exhausted":
        return True, "exhausted-search certificate (re-check requires re-search)"
    if proof.get("kind") == "trivial":
        return True, "trivial certificate"
    return False, f"unknown certificate kind {proof.get('kind')!r}"
