"""Cochains with sup-norms and exact simplicial cohomology.

Coefficients are Z, Z_p (p prime) or Q.  Cohomology comes out of Smith normal
form of the coboundary matrices; for finite complexes the bounded theory
agrees with it degree by degree, so the quantitative content lives in the
norm certificates (minimal primitives), not in extra groups.  Relative
cochains use the kernel model: cochains vanishing on the subcomplex.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DegreeOutOfRange,
    NotACoboundary,
    NotASubcomplex,
    ShapeMismatch,
    WrongShape,
)
from .exact_linalg import (
    ilp_min_linf,
    smith_normal_form,
    solve_integer,
)

RING_Z = "Z"
RING_Q = "Q"


def ring_zp(p):
    return ("Zp", p)


def _is_zp(ring):
    return isinstance(ring, tuple) and ring[0] == "Zp"


@dataclass
class Cochain:
    """Coefficient function on the k-cells of a complex.

    For Z_p the values are canonical representatives 0..p-1 and the sup
    semi-norm is identically zero (every mod-p cochain is bounded); for Z
    and Q the norm is the max absolute value.
    """

    complex: object
    degree: int
    ring: object
    values: list

    def __post_init__(self):
        want = self.complex.n_cells(self.degree)
        if len(self.values) != want:
            raise ShapeMismatch(
                f"{len(self.values)} values for {want} cells of degree {self.degree}"
            )
        if _is_zp(self.ring):
            p = self.ring[1]
            self.values = [int(v) % p for v in self.values]

    def norm(self):
        if _is_zp(self.ring):
            return 0
        return max((abs(v) for v in self.values), default=0)

    def value(self, i):
        return self.values[i]

    def support(self):
        return [i for i, v in enumerate(self.values) if v != 0]

    def __eq__(self, other):
        return (
            isinstance(other, Cochain)
            and self.degree == other.degree
            and self.ring == other.ring
            and list(self.values) == list(other.values)
        )


def zero_cochain(X, degree, ring=RING_Z):
    return Cochain(X, degree, ring, [0] * X.n_cells(degree))


@dataclass
class CohomologySummary:
    degree: int
    ring: object
    free_rank: int
    torsion: list

    def __str__(self):
        if _is_zp(self.ring):
            name = f"Z_{self.ring[1]}"
        else:
            name = self.ring
        parts = [name] * self.free_rank + [f"Z_{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def coboundary_matrix(X, k):
    """Matrix of delta: C^k -> C^{k+1}; transpose of the (k+1)-boundary.

    Rows are (k+1)-cells, columns are k-cells, so <delta g, s> = <g, ds>.
    """
    if not 0 <= k < X.dim:
        raise DegreeOutOfRange(f"no coboundary out of degree {k} on dim {X.dim}")
    rows = X.n_cells(k + 1)
    cols = X.n_cells(k)
    mat = [[0] * cols for _ in range(rows)]
    for j in range(rows):
        for r, c in X.boundary_of(k + 1, j).items():
            mat[j][r] = c
    return mat


def coboundary(c):
    """delta of a cochain, evaluated cell by cell."""
    X, k = c.complex, c.degree
    if k >= X.dim:
        return Cochain(X, k + 1, c.ring, [])
    vals = []
    for j in range(X.n_cells(k + 1)):
        acc = 0
        for r, coeff in X.boundary_of(k + 1, j).items():
            acc += coeff * c.values[r]
        vals.append(acc)
    return Cochain(X, k + 1, c.ring, vals)


def _rank_mod_p(diag, p):
    return sum(1 for d in diag if d % p != 0)


def _subcomplex_cells(X, subcomplex):
    """Normalize a subcomplex argument (label name or cell iterable)."""
    if subcomplex is None:
        return set()
    if isinstance(subcomplex, str):
        cells = set(X.label_cells(subcomplex))
    else:
        cells = {(int(d), int(i)) for d, i in subcomplex}
    for (k, i) in cells:
        if not 0 <= i < X.n_cells(k):
            raise NotASubcomplex(f"cell (dim {k}, {i}) is not in the complex")
        for r in X.boundary_of(k, i):
            if (k - 1, r) not in cells:
                raise NotASubcomplex(
                    f"cells are not boundary-closed at (dim {k}, {i})"
                )
    return cells


def relative_coboundary_matrix(X, A_cells, k):
    """Coboundary on cochains vanishing on a subcomplex.

    Columns: k-cells outside A; rows: (k+1)-cells outside A.  Returns
    (matrix, kept column indices, kept row indices).
    """
    cols = [i for i in range(X.n_cells(k)) if (k, i) not in A_cells]
    rows = [j for j in range(X.n_cells(k + 1)) if (k + 1, j) not in A_cells] \
        if k + 1 <= X.dim else []
    col_pos = {i: t for t, i in enumerate(cols)}
    mat = [[0] * len(cols) for _ in rows]
    for rt, j in enumerate(rows):
        for r, c in X.boundary_of(k + 1, j).items():
            if r in col_pos:
                mat[rt][col_pos[r]] = c
    return mat, cols, rows


def _cohomology_from_matrices(delta_km1, delta_k, n_k, ring):
    """Ranks/torsion of ker(delta_k)/im(delta_{k-1}) over the given ring."""
    snf_up = smith_normal_form(delta_k) if delta_k and delta_k[0:] and len(
        delta_k[0]) else None
    snf_down = smith_normal_form(delta_km1) if delta_km1 and len(
        delta_km1) and len(delta_km1[0]) else None
    diag_up = [d for d in (snf_up.diagonal() if snf_up else []) if d != 0]
    diag_down = [d for d in (snf_down.diagonal() if snf_down else []) if d != 0]
    if ring == RING_Z:
        free = n_k - len(diag_up) - len(diag_down)
        torsion = sorted(d for d in diag_down if d > 1)
        return free, torsion
    if ring == RING_Q:
        free = n_k - len(diag_up) - len(diag_down)
        return free, []
    if _is_zp(ring):
        p = ring[1]
        free = n_k - _rank_mod_p(diag_up, p) - _rank_mod_p(diag_down, p)
        return free, []
    raise ShapeMismatch(f"unknown ring {ring!r}")


def cohomology(X, k, ring=RING_Z):
    """H^k of a finite complex over Z, Z_p or Q (Smith-form computation)."""
    if not 0 <= k <= X.dim:
        raise DegreeOutOfRange(f"degree {k} outside 0..{X.dim}")
    delta_k = coboundary_matrix(X, k) if k < X.dim else []
    delta_km1 = coboundary_matrix(X, k - 1) if k >= 1 else []
    free, torsion = _cohomology_from_matrices(delta_km1, delta_k, X.n_cells(k), ring)
    return CohomologySummary(degree=k, ring=ring, free_rank=free, torsion=torsion)


def relative_cohomology(X, subcomplex, k, ring=RING_Z):
    """H^k(X, A): cohomology of the cochains vanishing on the subcomplex."""
    if not 0 <= k <= X.dim:
        raise DegreeOutOfRange(f"degree {k} outside 0..{X.dim}")
    A_cells = _subcomplex_cells(X, subcomplex)
    if k < X.dim:
        up, cols_k, _ = relative_coboundary_matrix(X, A_cells, k)
    else:
        up, cols_k = [], [i for i in range(X.n_cells(k)) if (k, i) not in A_cells]
    down = []
    if k >= 1:
        down, _, rows = relative_coboundary_matrix(X, A_cells, k - 1)
        # rows of delta_{k-1} are exactly the relative k-cells
    free, torsion = _cohomology_from_matrices(down, up, len(cols_k), ring)
    return CohomologySummary(degree=k, ring=ring, free_rank=free, torsion=torsion)


# -- exactness of the pair sequence --------------------------------------------


def _frac_rank(M):
    """Rank over Q by exact Gaussian elimination on Fractions."""
    if not M or not M[0]:
        return 0
    A = [[Fraction(v) for v in row] for row in M]
    m, n = len(A), len(A[0])
    rank = 0
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        pv = A[row][col]
        for i in range(row + 1, m):
            if A[i][col] != 0:
                f = A[i][col] / pv
                for j in range(col, n):
                    A[i][j] -= f * A[row][j]
        rank += 1
        row += 1
        if row == m:
            break
    return rank


def _rank_mod_p_dense(M, p):
    if not M or not M[0]:
        return 0
    A = [[v % p for v in row] for row in M]
    m, n = len(A), len(A[0])
    rank = 0
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if A[i][col] % p != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        inv = pow(A[row][col], -1, p)
        for i in range(row + 1, m):
            if A[i][col] % p:
                f = (A[i][col] * inv) % p
                for j in range(col, n):
                    A[i][j] = (A[i][j] - f * A[row][j]) % p
        rank += 1
        row += 1
        if row == m:
            break
    return rank


def _field_rank(M, ring):
    if _is_zp(ring):
        return _rank_mod_p_dense(M, ring[1])
    return _frac_rank(M)


def _quotient_map_rank(F, Z_basis, B_target, ring):
    """Rank of the induced map on cohomology over a field.

    ``F``: cochain-level matrix; ``Z_basis``: columns spanning the source
    cocycles; ``B_target``: columns spanning the target coboundaries.
    rank = rank([F Z | B]) - rank(B).
    """
    fz = _mat_mul(F, Z_basis)
    joint = [row_f + row_b for row_f, row_b in zip(fz, B_target)]
    return _field_rank(joint, ring) - _field_rank(B_target, ring)


def _mat_mul(A, B):
    if not A or not B or not B[0]:
        return [[] for _ in A]
    m, n, l = len(A), len(B), len(B[0])
    out = [[0] * l for _ in range(m)]
    for i in range(m):
        Ai = A[i]
        for k in range(n):
            a = Ai[k]
            if a:
                Bk = B[k]
                for j in range(l):
                    out[i][j] += a * Bk[j]
    return out


def _kernel_basis(M, ncols, ring):
    """Columns spanning ker(M) over Q or F_p (exact elimination)."""
    if not M or not M[0]:
        return [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]
    if _is_zp(ring):
        p = ring[1]
        A = [[v % p for v in row] for row in M]
        return _kernel_zp(A, ncols, p)
    A = [[Fraction(v) for v in row] for row in M]
    m, n = len(A), len(A[0])
    pivots = []
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        pv = A[row][col]
        A[row] = [v / pv for v in A[row]]
        for i in range(m):
            if i != row and A[i][col] != 0:
                f = A[i][col]
                A[i] = [v - f * w for v, w in zip(A[i], A[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -A[r][fc]
        basis.append(vec)
    return [list(col) for col in zip(*basis)] if basis else [[] for _ in range(n)]


def _kernel_zp(A, ncols, p):
    m, n = len(A), len(A[0]) if A else ncols
    pivots = []
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if A[i][col] % p != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        inv = pow(A[row][col], -1, p)
        A[row] = [(v * inv) % p for v in A[row]]
        for i in range(m):
            if i != row and A[i][col] % p:
                f = A[i][col]
                A[i] = [(v - f * w) % p for v, w in zip(A[i], A[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * n
        vec[fc] = 1
        for r, pc in enumerate(pivots):
            vec[pc] = (-A[r][fc]) % p
        basis.append(vec)
    return [list(col) for col in zip(*basis)] if basis else [[] for _ in range(n)]


def exactness_check(X, subcomplex, ring=RING_Q):
    """Rank-level exactness of ... -> H^k(X,A) -> H^k(X) -> H^k(A) -> ...

    Works over a field (Q or Z_p; Z requests are checked at rank level via
    Q, which tensoring preserves).  Computes the three induced maps in every
    degree from explicit cochain representatives and verifies
    dim = rank(in) + rank(out) at each node.  Returns a list of per-node
    records and raises nothing: the report carries pass/fail.
    """
    field = ring if _is_zp(ring) else RING_Q
    A_cells = _subcomplex_cells(X, subcomplex)
    # the subcomplex as its own complex: reuse X's cells, keep A columns
    dims = X.dim
    report = []

    def delta_abs(k):
        return coboundary_matrix(X, k) if 0 <= k < dims else []

    def delta_sub(k):
        # coboundary of A (columns/rows = A cells)
        cols = [i for i in range(X.n_cells(k)) if (k, i) in A_cells]
        rows = [j for j in range(X.n_cells(k + 1)) if (k + 1, j) in A_cells] \
            if k + 1 <= dims else []
        col_pos = {i: t for t, i in enumerate(cols)}
        M = [[0] * len(cols) for _ in rows]
        for rt, j in enumerate(rows):
            for r, c in X.boundary_of(k + 1, j).items():
                if r in col_pos:
                    M[rt][col_pos[r]] = c
        return M, cols

    def delta_rel(k):
        if 0 <= k < dims:
            M, cols, _ = relative_coboundary_matrix(X, A_cells, k)
            return M, cols
        cols = [i for i in range(X.n_cells(k)) if (k, i) not in A_cells] \
            if 0 <= k <= dims else []
        return [], cols

    # cocycle bases, coboundary bases, and dims per degree for the 3 theories
    spaces = {}
    for k in range(dims + 1):
        relM, rel_cols = delta_rel(k)
        absM = delta_abs(k)
        subM, sub_cols = delta_sub(k)
        spaces[("rel", k)] = {
            "cols": rel_cols,
            "Z": _kernel_basis(relM, len(rel_cols), field),
            "delta": relM,
        }
        spaces[("abs", k)] = {
            "cols": list(range(X.n_cells(k))),
            "Z": _kernel_basis(absM, X.n_cells(k), field),
            "delta": absM,
        }
        spaces[("sub", k)] = {
            "cols": sub_cols,
            "Z": _kernel_basis(subM, len(sub_cols), field),
            "delta": subM,
        }

    def image_basis(kind, k):
        # coboundaries in degree k as columns: delta_{k-1} applied to all
        # unit cochains = the matrix of delta_{k-1} (its columns)
        if k == 0:
            return [[0] * 0 for _ in spaces[(kind, 0)]["cols"]]
        M = spaces[(kind, k - 1)]["delta"]
        ncols_prev = len(spaces[(kind, k - 1)]["cols"])
        nrows = len(spaces[(kind, k)]["cols"])
        if not M:
            return [[0] * ncols_prev for _ in range(nrows)]
        return M  # rows = degree-k cells, cols = degree-(k-1) cells

    def hdim(kind, k):
        Z = spaces[(kind, k)]["Z"]
        zrank = _field_rank(Z, field) if Z and Z[0:] and len(Z[0]) else 0
        B = image_basis(kind, k)
        brank = _field_rank(B, field) if B and len(B) and len(B[0]) else 0
        return zrank - brank

    # cochain-level matrices of the three maps per degree
    def map_j(k):  # H^k(X, A) -> H^k(X): inclusion of relative cochains
        rel_cols = spaces[("rel", k)]["cols"]
        F = [[0] * len(rel_cols) for _ in range(X.n_cells(k))]
        for t, i in enumerate(rel_cols):
            F[i][t] = 1
        return F

    def map_res(k):  # H^k(X) -> H^k(A): restriction
        sub_cols = spaces[("sub", k)]["cols"]
        F = [[0] * X.n_cells(k) for _ in sub_cols]
        for t, i in enumerate(sub_cols):
            F[t][i] = 1
        return F

    def map_conn(k):  # H^k(A) -> H^{k+1}(X, A): extend by zero, then delta
        sub_cols = spaces[("sub", k)]["cols"]
        rel_cols1 = spaces[("rel", k + 1)]["cols"]
        F = [[0] * len(sub_cols) for _ in rel_cols1]
        pos = {i: t for t, i in enumerate(sub_cols)}
        for rt, j in enumerate(rel_cols1):
            for r, c in X.boundary_of(k + 1, j).items():
                if r in pos:
                    F[rt][pos[r]] = c
        return F

    ranks = {}
    for k in range(dims + 1):
        ranks[("j", k)] = _quotient_map_rank(
            map_j(k), spaces[("rel", k)]["Z"], image_basis("abs", k), field)
        ranks[("res", k)] = _quotient_map_rank(
            map_res(k), spaces[("abs", k)]["Z"], image_basis("sub", k), field)
        if k + 1 <= dims:
            ranks[("conn", k)] = _quotient_map_rank(
                map_conn(k), spaces[("sub", k)]["Z"],
                image_basis("rel", k + 1), field)
        else:
            ranks[("conn", k)] = 0

    ok_all = True
    for k in range(dims + 1):
        nodes = [
            (f"H^{k}(X,A)", hdim("rel", k), ranks[("conn", k - 1)] if k else 0,
             ranks[("j", k)]),
            (f"H^{k}(X)", hdim("abs", k), ranks[("j", k)], ranks[("res", k)]),
            (f"H^{k}(A)", hdim("sub", k), ranks[("res", k)], ranks[("conn", k)]),
        ]
        for name, dim_h, rin, rout in nodes:
            ok = dim_h == rin + rout
            ok_all = ok_all and ok
            report.append({
                "node": name, "dim": dim_h, "rank_in": rin, "rank_out": rout,
                "exact": ok,
            })
    return ok_all, report


# -- distinguished cochains ----------------------------------------------------


def fundamental_class(X, n):
    """The n-cochain taking value 1 on every n-cell of a simplex union.

    The complex must be a disjoint union of single closed n-simplices;
    raises WrongShape otherwise.  An empty union yields the zero cochain.
    """
    count = X.n_cells(n)
    if count:
        if X.dim != n:
            raise WrongShape(f"complex has dimension {X.dim}, not {n}")
        # each component is one closed n-simplex: fixed face counts per dim
        for k in range(n + 1):
            if X.n_cells(k) != _binom(n + 1, k + 1) * count:
                raise WrongShape(
                    "complex is not a disjoint union of single n-simplices"
                )
    return Cochain(X, n, RING_Z, [1] * count)


def _binom(n, k):
    out = 1
    for t in range(k):
        out = out * (n - t) // (t + 1)
    return out


def pullback_cochain(f, c):
    """f^* c: evaluate c on the chain image of every source cell."""
    X = f.source
    k = c.degree
    if k > X.dim:
        raise DegreeOutOfRange(f"degree {k} exceeds source dimension {X.dim}")
    vals = []
    for i in range(X.n_cells(k)):
        acc = 0
        for j, coeff in f.cell_image(k, i).items():
            acc += coeff * c.values[j]
        vals.append(acc)
    return Cochain(X, k, c.ring, vals)


# -- minimal primitives ---------------------------------------------------------


@dataclass
class PrimitiveResult:
    """Outcome of a minimal-primitive search for delta(gamma) = c."""

    certificate: object  # NormCertificate
    gamma: Cochain
    vanishing_on: object = None


def _bellman_potentials(n_nodes, arcs):
    """Solve h_v - h_u <= w for all arcs (u, v, w); None on a negative cycle.

    Virtual-source initialization (all distances 0) keeps every component
    honest; returned potentials are integers.
    """
    dist = [0] * n_nodes
    for it in range(n_nodes):
        changed = False
        for (u, v, w) in arcs:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            return dist
    for (u, v, w) in arcs:
        if dist[u] + w < dist[v]:
            return None
    return dist


def _potential_minimax(edge_ends, w, node_of, n_nodes, ground):
    """Exact min over integer potentials h (h = 0 on ground) of
    max_e |w_e + h(v_e) - h(u_e)|, plus an optimal h.

    Difference-constraint feasibility at bound B is totally unimodular, so
    binary search over integer B is exact.
    """
    if not edge_ends:
        return 0, [0] * n_nodes
    hi = max(abs(v) for v in w)
    lo = 0
    best_h = None

    def feasible(B):
        arcs = []
        for (u, v), we in zip(edge_ends, w):
            arcs.append((u, v, B - we))
            arcs.append((v, u, B + we))
        h = _bellman_potentials(n_nodes, arcs)
        return h

    h_hi = feasible(hi)
    if h_hi is None:
        raise ArithmeticError("potential system infeasible at its own max")
    best_h, best_B = h_hi, hi
    while lo < best_B:
        mid = (lo + best_B) // 2
        h = feasible(mid)
        if h is not None:
            best_h, best_B = h, mid
        else:
            lo = mid + 1
    shift = best_h[ground]
    return best_B, [v - shift for v in best_h]


def min_norm_primitive(c, node_limit=10_000_000, vanishing_on=None):
    """Exact min ||gamma||_inf with delta(gamma) = c over Z (degree-2 c).

    ``vanishing_on``: optional subcomplex (label or cells); the minimum is
    then taken over primitives that vanish there (the relative problem the
    retraction obstruction actually poses).  Raises NotACoboundary when no
    primitive exists.

    The solution set is gamma0 + im(delta^0) + (free cocycle lattice); the
    potential part is minimized exactly by difference-constraint feasibility
    and the free lattice (rank = first Betti number of the pair) by a
    bounded integer scan, so no general branch and bound is needed.
    """
    X, k = c.complex, c.degree
    if c.ring != RING_Z:
        raise NotACoboundary("minimal primitives are an integer computation")
    if k != 2:
        return _min_norm_primitive_generic(c, node_limit, vanishing_on)
    A_cells = _subcomplex_cells(X, vanishing_on)
    M, cols, rows = relative_coboundary_matrix(X, A_cells, k - 1)
    b = [c.values[j] for j in rows]
    for j in range(X.n_cells(k)):
        if (k, j) in A_cells and c.values[j] != 0:
            raise NotACoboundary(
                "cochain is nonzero on the subcomplex its primitive must vanish on"
            )
    feas = solve_integer(M, b)
    if not feas:
        raise NotACoboundary(f"no integer primitive: {feas.obstruction}")
    gamma0 = feas.solution
    optimum, witness, meta = _structured_min(X, A_cells, cols, gamma0,
                                             node_limit=node_limit)
    # certificate at optimum - 1: one exact LP probe; Farkas when tight
    proof = {"kind": "search-exhausted", "bound": optimum - 1,
             "nodes": meta["evaluations"]}
    lp_bound = None
    if optimum == 0:
        proof = {"kind": "trivial", "detail": "optimum is zero"}
        lp_bound = Fraction(0)
    else:
        from .exact_linalg import box_feasibility

        probe, farkas = box_feasibility(M, b, optimum - 1)
        if probe is None:
            proof = {"kind": "lp-dual", "dual": farkas, "bound": optimum - 1}
            lp_bound = Fraction(optimum)
    from .exact_linalg import NormCertificate

    cert = NormCertificate(
        optimum=optimum, witness=witness, infeasibility_proof=proof,
        node_count=meta["evaluations"], lp_bound=lp_bound,
    )
    gamma_vals = [0] * X.n_cells(k - 1)
    for t, i in enumerate(cols):
        gamma_vals[i] = witness[t]
    gamma = Cochain(X, k - 1, RING_Z, gamma_vals)
    if coboundary(gamma).values != list(c.values):
        raise ArithmeticError("primitive verification failed")
    return PrimitiveResult(certificate=cert, gamma=gamma, vanishing_on=vanishing_on)


def _min_norm_primitive_generic(c, node_limit, vanishing_on):
    """Fallback through the generic integer search (non-degree-2 cochains)."""
    X, k = c.complex, c.degree
    A_cells = _subcomplex_cells(X, vanishing_on)
    M, cols, rows = relative_coboundary_matrix(X, A_cells, k - 1)
    b = [c.values[j] for j in rows]
    feas = solve_integer(M, b)
    if not feas:
        raise NotACoboundary(f"no integer primitive: {feas.obstruction}")
    cert = ilp_min_linf(M, b, node_limit=node_limit)
    gamma_vals = [0] * X.n_cells(k - 1)
    for t, i in enumerate(cols):
        gamma_vals[i] = cert.witness[t]
    gamma = Cochain(X, k - 1, RING_Z, gamma_vals)
    if coboundary(gamma).values != list(c.values):
        raise ArithmeticError("primitive verification failed")
    return PrimitiveResult(certificate=cert, gamma=gamma, vanishing_on=vanishing_on)


def _structured_min(X, A_cells, cols, gamma0, node_limit=10_000_000):
    """Minimize ||gamma0 + delta0 h + free-lattice part||_inf exactly.

    Returns (optimum, witness vector over ``cols``, meta).  ``cols`` are the
    non-subcomplex edge indices; potentials live on non-subcomplex vertices
    with subcomplex vertices grounded at zero.  Exceeding ``node_limit``
    lattice evaluations raises NodeLimitExceeded with the best interval.
    """
    from .exact_linalg import (
        _det_unimodular,
        kernel_lattice_basis,
        lattice_quotient_complement,
    )

    col_pos = {e: t for t, e in enumerate(cols)}
    # vertices and grounding
    free_verts = [v for v in range(X.n_cells(0)) if (0, v) not in A_cells]
    node_of = {v: i for i, v in enumerate(free_verts)}
    ground = len(free_verts)
    n_nodes = ground + 1
    edge_ends = []
    for e in cols:
        ends = sorted(X.boundary_of(1, e).items())  # [(vertex, coeff)]
        lo_v = next(v for v, cc in ends if cc < 0)
        hi_v = next(v for v, cc in ends if cc > 0)
        u = node_of.get(lo_v, ground)
        v = node_of.get(hi_v, ground)
        edge_ends.append((u, v))

    def potential_opt(w):
        return _potential_minimax(edge_ends, w, node_of, n_nodes, ground)

    # relative coboundary in degree 0 and its kernel lattice in degree 1
    delta1 = [[0] * len(cols) for _ in range(0)]
    d1_rows = []
    for j in range(X.n_cells(2)):
        if (2, j) in A_cells:
            continue
        row = [0] * len(cols)
        for r, cc in X.boundary_of(2, j).items():
            if r in col_pos:
                row[col_pos[r]] = cc
        d1_rows.append(row)
    K = kernel_lattice_basis(d1_rows) if d1_rows else [
        [1 if i == j else 0 for i in range(len(cols))] for j in range(len(cols))
    ]
    d0_cols = []
    for v in free_verts:
        vec = [0] * len(cols)
        for t, e in enumerate(cols):
            coeff = X.boundary_of(1, e).get(v, 0)
            vec[t] = coeff
        d0_cols.append(vec)
    free_z, torsion = lattice_quotient_complement(K, d0_cols)
    if torsion:
        raise ArithmeticError("degree-1 relative cohomology has torsion")
    beta = len(free_z)
    meta = {"evaluations": 0, "beta": beta}
    if beta == 0:
        B, h = potential_opt(gamma0)
        meta["evaluations"] = 1
        return B, _apply_potentials(gamma0, edge_ends, h, ground), meta
    # probe cycles: free basis of relative 1-cycles mod boundaries
    d1_chain_rows = []
    for v in free_verts:
        row = [0] * len(cols)
        for t, e in enumerate(cols):
            row[t] = X.boundary_of(1, e).get(v, 0)
        d1_chain_rows.append(row)
    Kc = kernel_lattice_basis(d1_chain_rows) if d1_chain_rows else [
        [1 if i == j else 0 for i in range(len(cols))] for j in range(len(cols))
    ]
    bnd_cols = [list(row) for row in d1_rows]  # boundaries of relative faces
    cycles, _ = lattice_quotient_complement(Kc, bnd_cols)
    if len(cycles) != beta:
        raise ArithmeticError("cycle/cocycle rank mismatch")
    P = [[sum(z[t] * Cj[t] for t in range(len(cols))) for Cj in cycles]
         for z in free_z]
    if abs(_det_unimodular(P)) != 1:
        raise ArithmeticError("cocycle/cycle pairing is not unimodular")
    Pinv_T = _int_inverse_transpose(P)
    lengths = [sum(abs(v) for v in Cj) for Cj in cycles]
    g0 = [sum(gamma0[t] * Cj[t] for t in range(len(cols))) for Cj in cycles]

    def t_of_u(u):
        diff = [u[j] - g0[j] for j in range(beta)]
        return [sum(Pinv_T[i][j] * diff[j] for j in range(beta))
                for i in range(beta)]

    def w_of_t(tv):
        w = list(gamma0)
        for i, ti in enumerate(tv):
            if ti:
                zi = free_z[i]
                for t in range(len(cols)):
                    w[t] += ti * zi[t]
        return w

    cache = {}

    def evaluate(u):
        u = tuple(u)
        if u in cache:
            return cache[u]
        meta["evaluations"] += 1
        if meta["evaluations"] > node_limit:
            from .errors import NodeLimitExceeded

            raise NodeLimitExceeded(
                "lattice evaluation budget exhausted",
                lower=0,
                upper=cache[min(cache, key=lambda k: cache[k][0])][0]
                if cache else None,
                node_count=meta["evaluations"],
            )
        B, h = potential_opt(w_of_t(t_of_u(u)))
        cache[u] = (B, h, u)
        return cache[u]

    # descend from u = 0, then sweep the certified box around the incumbent
    cur = tuple([0] * beta)
    best_B, best_h, best_u = evaluate(cur)
    improved = True
    while improved:
        improved = False
        for j in range(beta):
            for step in (1, -1):
                cand = list(best_u)
                cand[j] += step
                B, h, u = evaluate(cand)
                if B < best_B:
                    best_B, best_h, best_u = B, h, u
                    improved = True
    # exhaustive finish: any strictly better point obeys |u_j| <= (B-1)*len_j
    target = best_B - 1
    while target >= 0:
        found = False
        ranges = [range(-target * lengths[j], target * lengths[j] + 1)
                  for j in range(beta)]
        from itertools import product as _prod

        for u in _prod(*ranges):
            quick = max(
                (abs(u[j]) + lengths[j] - 1) // lengths[j] if lengths[j] else 0
                for j in range(beta)
            )
            if quick > target:
                continue
            B, h, uu = evaluate(u)
            if B < best_B:
                best_B, best_h, best_u = B, h, uu
                found = True
        if not found:
            break
        target = best_B - 1
    w = w_of_t(t_of_u(best_u))
    return best_B, _apply_potentials(w, edge_ends, best_h, ground), meta


def _int_inverse_transpose(P):
    from .exact_linalg import _unimodular_inverse

    inv = _unimodular_inverse(P)
    n = len(inv)
    return [[inv[j][i] for j in range(n)] for i in range(n)]


def _apply_potentials(w, edge_ends, h, ground):
    out = []
    hh = list(h) + [0] * (ground + 1 - len(h))
    for (u, v), we in zip(edge_ends, w):
        out.append(we + hh[v] - hh[u])
    return out
