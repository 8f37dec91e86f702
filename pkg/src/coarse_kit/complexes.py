"""Finite regular cell complexes with exact integer incidence data.

A complex stores, per dimension k, an ordered list of k-cells and the integer
boundary matrix taking k-cells to (k-1)-chains.  Simplicial complexes
additionally carry the vertex tuple of every cell, which is what simplicial
maps, subdivisions and gluings work through.  Cells are addressed as
``(dim, index)`` pairs; labels attach semantic roles ("boundary", "p-hole")
to cell sets.

Everything here is immutable after construction and all arithmetic is plain
Python integers, so values can be shared freely between threads.
"""

from dataclasses import dataclass, field
from itertools import combinations

from .errors import (
    DimensionTooHigh,
    NotAChainComplex,
    NotASimplex,
    NotASubcomplex,
    NotAVertex,
    NotIsomorphic,
    NotSimplicial,
    OrientationMismatch,
    ShapeMismatch,
    SizeGuardExceeded,
    TooFewVertices,
)

Cell = tuple  # (dim, index)

DEFAULT_CELL_BUDGET = 2_000_000


def same_structure(X, Y):
    """Same cell counts and boundaries (complexes as immutable values)."""
    if X is Y:
        return True
    return X.counts == Y.counts and all(
        X.boundary_columns(k) == Y.boundary_columns(k) for k in range(1, X.dim + 1)
    )


def _sign_of_sort(seq):
    """Parity sign of the permutation sorting ``seq`` (0 if repeats)."""
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    items = list(seq)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


class CellComplex:
    """A finite regular cell complex with integer boundary matrices.

    Args:
        counts: number of cells per dimension 0..dim.
        boundaries: per dimension k >= 1, a list over k-cells of
            ``{(k-1)-cell index: incidence coefficient}`` dicts.
        simplices: optional per-dimension lists of sorted vertex tuples;
            presence marks simplicial mode.
        labels: mapping label -> iterable of (dim, index) cells.
    """

    def __init__(self, counts, boundaries, simplices=None, labels=None, validate=True):
        self.counts = [int(c) for c in counts]
        while len(self.counts) > 1 and self.counts[-1] == 0:
            self.counts.pop()
        self.dim = len(self.counts) - 1
        self._bnd = [[{} for _ in range(self.counts[0])]]
        for k in range(1, self.dim + 1):
            cols = boundaries[k]
            if len(cols) != self.counts[k]:
                raise ShapeMismatch(
                    f"dimension {k}: {len(cols)} boundary columns for {self.counts[k]} cells"
                )
            frozen = []
            for col in cols:
                clean = {int(r): int(c) for r, c in col.items() if c != 0}
                for r in clean:
                    if not 0 <= r < self.counts[k - 1]:
                        raise ShapeMismatch(f"row {r} out of range in dimension {k}")
                frozen.append(clean)
            self._bnd.append(frozen)
        self.simplices = None
        if simplices is not None:
            self.simplices = [
                [tuple(s) for s in simplices[k]] for k in range(self.dim + 1)
            ]
            self._simplex_index = [
                {s: i for i, s in enumerate(level)} for level in self.simplices
            ]
        self.labels = {}
        if labels:
            for name, cells in labels.items():
                self.labels[name] = tuple(sorted((int(d), int(i)) for d, i in cells))
        if validate:
            self._validate()

    # -- basic queries ---------------------------------------------------

    def n_cells(self, k):
        if 0 <= k <= self.dim:
            return self.counts[k]
        return 0

    def total_cells(self):
        return sum(self.counts)

    def boundary_of(self, k, i):
        """Boundary of the i-th k-cell as a {row: coeff} dict."""
        return self._bnd[k][i]

    def boundary_columns(self, k):
        return self._bnd[k]

    def boundary_matrix(self, k):
        """Dense boundary matrix: rows = (k-1)-cells, columns = k-cells."""
        rows, cols = self.n_cells(k - 1), self.n_cells(k)
        mat = [[0] * cols for _ in range(rows)]
        for j in range(cols):
            for r, c in self._bnd[k][j].items():
                mat[r][j] = c
        return mat

    def euler_characteristic(self):
        return sum((-1) ** k * c for k, c in enumerate(self.counts))

    @property
    def is_simplicial(self):
        return self.simplices is not None

    def simplex(self, k, i):
        if not self.is_simplicial:
            raise NotSimplicial("complex has no simplex tables")
        return self.simplices[k][i]

    def simplex_index(self, verts):
        verts = tuple(sorted(verts))
        k = len(verts) - 1
        if not self.is_simplicial or k > self.dim:
            return None
        return self._simplex_index[k].get(verts)

    def label_cells(self, name):
        if name not in self.labels:
            raise KeyError(f"no label {name!r}")
        return self.labels[name]

    def label_cells_of_dim(self, name, k):
        return tuple(i for d, i in self.label_cells(name) if d == k)

    def relabeled(self, extra):
        """Copy of this complex with additional labels."""
        labels = dict(self.labels)
        labels.update(extra)
        return CellComplex(
            self.counts, self._bnd, simplices=self.simplices, labels=labels,
            validate=False,
        )

    def edges_as_pairs(self):
        """Vertex pairs of all 1-cells (simplicial mode: the stored tuples)."""
        if self.is_simplicial:
            return list(self.simplices[1])
        pairs = []
        for col in self._bnd[1]:
            ends = sorted(col)
            if len(ends) == 2:
                pairs.append((ends[0], ends[1]))
            else:
                pairs.append(None)
        return pairs

    # -- validation ------------------------------------------------------

    def _validate(self):
        for k in range(2, self.dim + 1):
            for j in range(self.counts[k]):
                acc = {}
                for r, c in self._bnd[k][j].items():
                    for r2, c2 in self._bnd[k - 1][r].items():
                        acc[r2] = acc.get(r2, 0) + c * c2
                if any(v != 0 for v in acc.values()):
                    raise NotAChainComplex(
                        f"boundary squared nonzero at cell (dim {k}, index {j})",
                        cell=(k, j),
                    )
        if self.is_simplicial:
            self._validate_simplicial()

    def _validate_simplicial(self):
        for k, level in enumerate(self.simplices):
            if len(level) != self.counts[k]:
                raise ShapeMismatch(f"simplex table size mismatch in dim {k}")
            for verts in level:
                if len(verts) != k + 1 or list(verts) != sorted(set(verts)):
                    raise NotSimplicial(f"bad vertex tuple {verts} in dim {k}")
        if self.dim >= 1:
            for j, col in enumerate(self._bnd[1]):
                vals = sorted(col.values())
                if vals != [-1, 1]:
                    raise NotSimplicial(
                        f"edge {j}: simplicial boundary must have one +1 and one -1"
                    )
        for k in range(1, self.dim + 1):
            for j, col in enumerate(self._bnd[k]):
                if len(col) != k + 1 or any(abs(c) != 1 for c in col.values()):
                    raise NotSimplicial(
                        f"cell (dim {k}, {j}) boundary is not {k + 1} entries of +-1"
                    )
                verts = self.simplices[k][j]
                canonical = {}
                for i in range(k + 1):
                    face = verts[:i] + verts[i + 1:]
                    canonical[self._simplex_index[k - 1][face]] = (-1) ** i
                if col != canonical:
                    raise NotSimplicial(
                        f"cell (dim {k}, {j}) boundary breaks the sorted-tuple "
                        "orientation convention"
                    )

    def __repr__(self):
        kind = "simplicial" if self.is_simplicial else "cell"
        return f"<{kind} complex dim={self.dim} cells={self.counts}>"


def new_complex(cells_per_dim, boundaries, simplices=None, labels=None):
    """Build and validate a complex from raw cell counts and boundary dicts."""
    return CellComplex(cells_per_dim, boundaries, simplices=simplices, labels=labels)


def simplicial_complex(simplices, labels=None):
    """Build a simplicial complex from vertex tuples (closed under faces).

    Vertices are taken to be 0..max referenced index; orientation follows the
    global vertex order with alternating boundary signs.
    """
    closed = set()
    max_v = -1
    for s in simplices:
        verts = tuple(sorted(set(s)))
        if len(verts) != len(s):
            raise NotSimplicial(f"degenerate simplex {s}")
        max_v = max(max_v, verts[-1])
        for r in range(1, len(verts) + 1):
            for sub in combinations(verts, r):
                closed.add(sub)
    n_vertices = max_v + 1
    for v in range(n_vertices):
        closed.add((v,))
    dim = max(len(s) for s in closed) - 1
    by_dim = [[] for _ in range(dim + 1)]
    for s in sorted(closed, key=lambda t: (len(t), t)):
        by_dim[len(s) - 1].append(s)
    index = [{s: i for i, s in enumerate(level)} for level in by_dim]
    boundaries = [None]
    for k in range(1, dim + 1):
        cols = []
        for s in by_dim[k]:
            col = {}
            for i in range(k + 1):
                face = s[:i] + s[i + 1:]
                col[index[k - 1][face]] = (-1) ** i
            cols.append(col)
        boundaries.append(cols)
    counts = [len(level) for level in by_dim]
    return CellComplex(counts, boundaries, simplices=by_dim, labels=labels)


# -- cellular maps -------------------------------------------------------


class CellMap:
    """Cellular chain map between complexes.

    ``assignment[k][i]`` is the image of the i-th source k-cell as a
    ``{target cell index: coefficient}`` dict.  Simplicial maps carry their
    vertex map and their assignment is induced by it.
    """

    def __init__(self, source, target, assignment, vertex_map=None, validate=True):
        self.source = source
        self.target = target
        self.assignment = assignment
        self.vertex_map = list(vertex_map) if vertex_map is not None else None
        if validate:
            self._validate()

    @classmethod
    def from_vertex_map(cls, source, target, vertex_map, validate=True):
        """Simplicial map induced by a vertex assignment."""
        if not (source.is_simplicial and target.is_simplicial):
            raise NotSimplicial("vertex maps need simplicial complexes")
        vm = list(vertex_map)
        if len(vm) != source.n_cells(0):
            raise ShapeMismatch("vertex map length != vertex count")
        assignment = []
        for k in range(source.dim + 1):
            level = []
            for verts in source.simplices[k]:
                images = [vm[v] for v in verts]
                sign = _sign_of_sort(images)
                if sign == 0:
                    level.append({})
                    continue
                idx = target.simplex_index(images)
                if idx is None:
                    raise NotSimplicial(
                        f"image {tuple(sorted(images))} is not a simplex of the target"
                    )
                level.append({idx: sign})
            assignment.append(level)
        return cls(source, target, assignment, vertex_map=vm, validate=validate)

    @classmethod
    def identity(cls, X):
        assignment = [
            [{i: 1} for i in range(X.n_cells(k))] for k in range(X.dim + 1)
        ]
        vm = list(range(X.n_cells(0))) if X.is_simplicial else None
        return cls(X, X, assignment, vertex_map=vm, validate=False)

    def cell_image(self, k, i):
        if k >= len(self.assignment):
            return {}
        return self.assignment[k][i]

    def chain_image(self, k, chain):
        """Push a k-chain (dict index -> coeff) forward to the target."""
        out = {}
        for i, c in chain.items():
            for j, c2 in self.cell_image(k, i).items():
                out[j] = out.get(j, 0) + c * c2
        return {j: c for j, c in out.items() if c != 0}

    def vertex_image(self, v):
        if self.vertex_map is not None:
            return self.vertex_map[v]
        img = self.assignment[0][v]
        if len(img) != 1:
            raise NotAVertex(f"vertex {v} has no single-cell image")
        return next(iter(img))

    def _validate(self):
        if len(self.assignment) < self.source.dim + 1:
            raise ShapeMismatch("assignment missing dimensions")
        for k in range(self.source.dim + 1):
            if len(self.assignment[k]) != self.source.n_cells(k):
                raise ShapeMismatch(f"assignment size mismatch in dim {k}")
        for k in range(1, self.source.dim + 1):
            for i in range(self.source.n_cells(k)):
                lhs = {}
                for j, c in self.assignment[k][i].items():
                    for r, c2 in self.target.boundary_of(k, j).items():
                        lhs[r] = lhs.get(r, 0) + c * c2
                rhs = {}
                for r, c in self.source.boundary_of(k, i).items():
                    for j, c2 in self.assignment[k - 1][r].items():
                        rhs[j] = rhs.get(j, 0) + c * c2
                lhs = {j: c for j, c in lhs.items() if c != 0}
                rhs = {j: c for j, c in rhs.items() if c != 0}
                if lhs != rhs:
                    raise NotAChainComplex(
                        f"chain-map identity fails at cell (dim {k}, {i})", cell=(k, i)
                    )

    def compose(self, other):
        """self after other (other: X -> Y, self: Y -> Z gives X -> Z)."""
        if not same_structure(other.target, self.source):
            raise ShapeMismatch("composition target/source mismatch")
        assignment = []
        for k in range(other.source.dim + 1):
            level = []
            for i in range(other.source.n_cells(k)):
                acc = {}
                for j, c in other.assignment[k][i].items():
                    for m, c2 in self.cell_image(k, j).items():
                        acc[m] = acc.get(m, 0) + c * c2
                level.append({m: c for m, c in acc.items() if c != 0})
            assignment.append(level)
        vm = None
        if self.vertex_map is not None and other.vertex_map is not None:
            vm = [self.vertex_map[w] for w in other.vertex_map]
        return CellMap(other.source, self.target, assignment, vertex_map=vm,
                       validate=False)


# -- elementary constructors ----------------------------------------------


def point():
    return simplicial_complex([(0,)])


def circle(n):
    """Simplicial circle with n vertices and n consistently oriented edges."""
    if n < 3:
        raise TooFewVertices(f"a simplicial circle needs >= 3 vertices, got {n}")
    edges = [(i, (i + 1) % n) for i in range(n)]
    X = simplicial_complex(edges, labels={"rim": [(0, i) for i in range(n)]})
    return X


def path_complex(n):
    """Subdivided interval [0, n]: n+1 vertices, n unit edges."""
    if n < 1:
        raise ShapeMismatch("path needs at least one edge")
    return simplicial_complex([(i, i + 1) for i in range(n)])


def filled_triangle():
    return simplicial_complex([(0, 1, 2)])


def fundamental_cycle(X, vertices=None):
    """Oriented 1-cycle tracing a circle subcomplex once.

    ``vertices``: the cyclically ordered vertex list; defaults to 0..n-1 for
    complexes built by :func:`circle`.  Returns {edge index: +-1}.
    """
    if vertices is None:
        vertices = list(range(X.n_cells(0)))
    chain = {}
    n = len(vertices)
    for t in range(n):
        v, w = vertices[t], vertices[(t + 1) % n]
        idx = X.simplex_index((min(v, w), max(v, w)))
        if idx is None:
            raise NotASubcomplex(f"missing edge {v}-{w} along the cycle")
        chain[idx] = 1 if v < w else -1
    return chain


def cycle_vertices_of_label(X, label):
    """Cyclic vertex order of a labeled circle subcomplex."""
    verts = set(X.label_cells_of_dim(label, 0))
    edges = X.label_cells_of_dim(label, 1)
    adj = {v: [] for v in verts}
    for e in edges:
        a, b = X.simplex(1, e)
        adj[a].append(b)
        adj[b].append(a)
    if any(len(nb) != 2 for nb in adj.values()) or len(edges) != len(verts):
        raise NotASubcomplex(f"label {label!r} is not a circle")
    start = min(verts)
    order = [start]
    prev, cur = None, start
    while True:
        nxt = [w for w in adj[cur] if w != prev]
        step = nxt[0] if prev is not None else min(nxt)
        if step == start:
            break
        order.append(step)
        prev, cur = cur, step
    return order


def labeled_cycle(X, label):
    """Fundamental cycle of a labeled circle subcomplex as {edge: +-1}."""
    order = cycle_vertices_of_label(X, label)
    chain = {}
    for t in range(len(order)):
        v, w = order[t], order[(t + 1) % len(order)]
        idx = X.simplex_index((min(v, w), max(v, w)))
        chain[idx] = 1 if v < w else -1
    return chain


# -- mapping cylinders -----------------------------------------------------


def mapping_cylinder(f):
    """Triangulated mapping cylinder of a simplicial map.

    Returns ``(cylinder, inclusion_domain, retraction_to_target)``.  The
    domain copy is labeled "domain", the target copy "target"; the cylinder
    deformation-retracts to the target, so their homologies agree (tested
    via the Smith-form oracle).
    """
    if f.vertex_map is None:
        raise NotSimplicial("mapping cylinder needs a simplicial map")
    K, L = f.source, f.target
    nk = K.n_cells(0)
    src = lambda v: v            # cylinder indices of domain vertices
    tgt = lambda w: nk + w       # cylinder indices of target vertices
    simp = set()
    for k in range(L.dim + 1):
        for verts in L.simplices[k]:
            simp.add(tuple(sorted(tgt(w) for w in verts)))
    for k in range(K.dim + 1):
        for verts in K.simplices[k]:
            for i in range(len(verts)):
                cand = tuple(src(v) for v in verts[: i + 1]) + tuple(
                    tgt(f.vertex_map[v]) for v in verts[i:]
                )
                simp.add(tuple(sorted(set(cand))))
    cyl = simplicial_complex(sorted(simp, key=lambda t: (len(t), t)))
    dom_cells, tgt_cells = [], []
    for k in range(cyl.dim + 1):
        for i, verts in enumerate(cyl.simplices[k]):
            if all(v < nk for v in verts):
                dom_cells.append((k, i))
            if all(v >= nk for v in verts):
                tgt_cells.append((k, i))
    cyl = cyl.relabeled({"domain": dom_cells, "target": tgt_cells})
    incl = CellMap.from_vertex_map(K, cyl, [src(v) for v in range(nk)],
                                   validate=False)
    retr_vm = [f.vertex_map[v] for v in range(nk)] + list(range(L.n_cells(0)))
    retr = CellMap.from_vertex_map(cyl, L, retr_vm, validate=False)
    return cyl, incl, retr


def annulus_triangulation(a, b):
    """Mapping-cylinder stage between circle(a) and circle(b), a = d*b.

    The collapse restricts to the degree-d map j -> j mod b on the domain
    rim.  Labels: "domain-rim" (the a-circle), "target-rim" (the b-circle).
    Returns ``(complex, collapse map to circle(b))``.
    """
    if b < 3:
        raise TooFewVertices(f"target circle needs >= 3 vertices, got {b}")
    if a % b != 0 or a < b:
        from .errors import NotDivisible

        raise NotDivisible(f"domain size {a} is not a positive multiple of {b}")
    top, bot = circle(a), circle(b)
    f = CellMap.from_vertex_map(top, bot, [j % b for j in range(a)])
    cyl, _, retr = mapping_cylinder(f)
    lbl = {
        "domain-rim": _vertex_span_cells(cyl, range(a)),
        "target-rim": _vertex_span_cells(cyl, range(a, a + b)),
    }
    cyl = cyl.relabeled(lbl)
    retr = CellMap(cyl, bot, retr.assignment, vertex_map=retr.vertex_map,
                   validate=False)
    return cyl, retr


def coarsening_cylinder(a, b):
    """Mapping cylinder of the degree-1 subdivision collapse j -> j // (a/b).

    Used to re-coarsen circle sizes between winding stages without adding
    degree.  Same labeling contract as :func:`annulus_triangulation`.
    """
    if b < 3:
        raise TooFewVertices(f"target circle needs >= 3 vertices, got {b}")
    if a % b != 0 or a < b:
        from .errors import NotDivisible

        raise NotDivisible(f"domain size {a} is not a positive multiple of {b}")
    d = a // b
    top, bot = circle(a), circle(b)
    f = CellMap.from_vertex_map(top, bot, [j // d for j in range(a)])
    cyl, _, retr = mapping_cylinder(f)
    lbl = {
        "domain-rim": _vertex_span_cells(cyl, range(a)),
        "target-rim": _vertex_span_cells(cyl, range(a, a + b)),
    }
    cyl = cyl.relabeled(lbl)
    retr = CellMap(cyl, bot, retr.assignment, vertex_map=retr.vertex_map,
                   validate=False)
    return cyl, retr


def _vertex_span_cells(X, vertices):
    """All cells of X whose vertices lie in the given set."""
    vs = set(vertices)
    cells = []
    for k in range(X.dim + 1):
        for i, verts in enumerate(X.simplices[k]):
            if all(v in vs for v in verts):
                cells.append((k, i))
    return cells


def induced_cells(X, vertices):
    return _vertex_span_cells(X, vertices)


# -- wedge and gluing -------------------------------------------------------


def wedge(X, Y, x0, y0):
    """One-point union identifying vertex y0 of Y with vertex x0 of X."""
    if not (0 <= x0 < X.n_cells(0)):
        raise NotAVertex(f"{x0} is not a vertex of the first summand")
    if not (0 <= y0 < Y.n_cells(0)):
        raise NotAVertex(f"{y0} is not a vertex of the second summand")
    matching = {(0, y0): ((0, x0), 1)}
    return glue(X, Y, matching)


def subcomplex_matching(X, label_x, Y, label_y, vertex_map):
    """Cell matching (with signs) induced by a vertex bijection Y -> X.

    ``vertex_map`` maps the vertices of Y's labeled subcomplex onto the
    vertices of X's.  Raises NotIsomorphic when the map is not a simplicial
    isomorphism of the two subcomplexes.
    """
    cells_x = set(X.label_cells(label_x))
    cells_y = Y.label_cells(label_y)
    if len(cells_y) != len(cells_x):
        raise NotIsomorphic(
            f"subcomplex sizes differ: {len(cells_y)} vs {len(cells_x)}"
        )
    matching = {}
    seen = set()
    for (k, i) in cells_y:
        verts = Y.simplex(k, i)
        try:
            images = [vertex_map[v] for v in verts]
        except KeyError as exc:
            raise NotIsomorphic(f"vertex {exc} not covered by the matching")
        sign = _sign_of_sort(images)
        idx = X.simplex_index(images) if sign != 0 else None
        if sign == 0 or idx is None or (k, idx) not in cells_x:
            raise NotIsomorphic(
                f"cell (dim {k}, {i}) has no matching image in {label_x!r}"
            )
        if (k, idx) in seen:
            raise NotIsomorphic("vertex map is not injective on cells")
        seen.add((k, idx))
        matching[(k, i)] = ((k, idx), sign)
    return matching


def glue(X, Y, matching):
    """Pushout of X and Y along a matched pair of subcomplexes.

    ``matching`` maps Y-cells to X-cells, either ``cell -> cell`` or
    ``cell -> (cell, sign)``.  The matched sets must be boundary-closed and
    the matching must commute with the boundary operators (orientation
    preserving); matched cells are counted once in the result.

    Returns ``(glued complex, cell map table for Y)`` where the table sends
    every Y-cell to its (cell, sign) in the result.
    """
    norm = {}
    for y, tgt in matching.items():
        if isinstance(tgt[0], tuple):
            norm[y] = (tgt[0], tgt[1])
        else:
            norm[y] = (tgt, 1)
    matched_y = set(norm)
    # boundary closure on the Y side
    for (k, i) in list(matched_y):
        for r in Y.boundary_of(k, i):
            if (k - 1, r) not in matched_y:
                raise NotASubcomplex(
                    f"matched set is not boundary-closed at Y-cell (dim {k}, {i})"
                )
    # chain compatibility (orientation)
    for (k, i), ((kx, ix), sign) in norm.items():
        if k != kx:
            raise NotIsomorphic("matched cells have different dimensions")
        if k == 0:
            continue
        lhs = {}
        for r, c in Y.boundary_of(k, i).items():
            (rx_k, rx), s2 = norm[(k - 1, r)]
            lhs[rx] = lhs.get(rx, 0) + c * s2
        rhs = {r: sign * c for r, c in X.boundary_of(k, ix).items()}
        lhs = {r: c for r, c in lhs.items() if c != 0}
        if lhs != rhs:
            raise OrientationMismatch(
                f"matching does not commute with the boundary at Y-cell (dim {k}, {i})"
            )
    if X.is_simplicial and Y.is_simplicial:
        return _glue_simplicial(X, Y, norm)
    dim = max(X.dim, Y.dim)
    counts = []
    y_table = {}
    for k in range(dim + 1):
        base = X.n_cells(k)
        new_index = {}
        for i in range(Y.n_cells(k)):
            if (k, i) in norm:
                y_table[(k, i)] = (norm[(k, i)][0], norm[(k, i)][1])
            else:
                new_index[i] = base + len(new_index)
                y_table[(k, i)] = ((k, new_index[i]), 1)
        counts.append(base + len(new_index))
    boundaries = [None]
    for k in range(1, dim + 1):
        cols = [dict(X.boundary_of(k, j)) for j in range(X.n_cells(k))]
        for i in range(Y.n_cells(k)):
            if (k, i) in norm:
                continue
            col = {}
            for r, c in Y.boundary_of(k, i).items():
                (rk, rj), s = y_table[(k - 1, r)]
                col[rj] = col.get(rj, 0) + c * s
            cols.append({r: c for r, c in col.items() if c != 0})
        boundaries.append(cols)
    labels = dict(X.labels)
    for name, cells in Y.labels.items():
        mapped = tuple(sorted(y_table[c][0] for c in cells))
        key = name
        while key in labels:
            key += "+"
        labels[key] = mapped
    Z = CellComplex(counts, boundaries, labels=labels)
    return Z, y_table


def _glue_simplicial(X, Y, norm):
    """Simplicial pushout rebuilt canonically from merged vertex tuples.

    Keeps every stored boundary in the sorted-tuple alternating-sign
    convention (vertex-map-induced chain maps rely on it); X and Y cell
    indices are remapped through simplex lookups.
    """
    n0 = X.n_cells(0)
    vmap = {}
    fresh = 0
    for i in range(Y.n_cells(0)):
        if (0, i) in norm:
            vmap[i] = norm[(0, i)][0][1]
        else:
            vmap[i] = n0 + fresh
            fresh += 1
    tuples = []
    for k in range(X.dim + 1):
        tuples.extend(X.simplices[k])
    y_tuples = {}
    for k in range(Y.dim + 1):
        for i in range(Y.n_cells(k)):
            verts = tuple(sorted(vmap[v] for v in Y.simplex(k, i)))
            if len(set(verts)) != len(verts):
                raise NotIsomorphic(
                    f"identification degenerates Y-cell (dim {k}, {i})"
                )
            y_tuples[(k, i)] = verts
            if (k, i) not in norm:
                tuples.append(verts)
    Z = simplicial_complex(tuples)
    y_table = {}
    for (k, i), verts in y_tuples.items():
        idx = Z.simplex_index(verts)
        sign = _sign_of_sort([vmap[v] for v in Y.simplex(k, i)])
        y_table[(k, i)] = ((k, idx), sign)
    labels = {}
    for name, cells in X.labels.items():
        labels[name] = tuple(sorted(
            (k, Z.simplex_index(X.simplex(k, i))) for k, i in cells
        ))
    for name, cells in Y.labels.items():
        mapped = tuple(sorted(y_table[c][0] for c in cells))
        key = name
        while key in labels:
            key += "+"
        labels[key] = mapped
    return Z.relabeled(labels), y_table


def remove_cells(X, cells):
    """Delete open cells (cells no remaining cell has on its boundary)."""
    doomed = set(cells)
    for k in range(1, X.dim + 1):
        for i in range(X.n_cells(k)):
            if (k, i) in doomed:
                continue
            for r in X.boundary_of(k, i):
                if (k - 1, r) in doomed:
                    raise NotASubcomplex(
                        f"cell (dim {k - 1}, {r}) is still a face of (dim {k}, {i})"
                    )
    counts = []
    new_index = {}
    for k in range(X.dim + 1):
        kept = [i for i in range(X.n_cells(k)) if (k, i) not in doomed]
        for pos, i in enumerate(kept):
            new_index[(k, i)] = pos
        counts.append(len(kept))
    boundaries = [None]
    for k in range(1, X.dim + 1):
        cols = []
        for i in range(X.n_cells(k)):
            if (k, i) in doomed:
                continue
            cols.append(
                {new_index[(k - 1, r)]: c for r, c in X.boundary_of(k, i).items()}
            )
        boundaries.append(cols)
    simplices = None
    if X.is_simplicial:
        vmap = {i: new_index[(0, i)] for i in range(X.n_cells(0))
                if (0, i) not in doomed}
        simplices = []
        for k in range(X.dim + 1):
            simplices.append([
                tuple(sorted(vmap[v] for v in X.simplices[k][i]))
                for i in range(X.n_cells(k)) if (k, i) not in doomed
            ])
    labels = {}
    for name, lcells in X.labels.items():
        kept = tuple(sorted(
            (k, new_index[(k, i)]) for k, i in lcells if (k, i) not in doomed
        ))
        if kept:
            labels[name] = kept
    return CellComplex(counts, boundaries, simplices=simplices, labels=labels,
                       validate=False)


# -- products ----------------------------------------------------------------


@dataclass
class IntervalProduct:
    """X x [0, n] as a regular cell complex with structured cell indexing.

    k-cells come in two blocks: slice cells sigma x {l} (ordered by level then
    base index) followed by prism cells tau x [l, l+1].
    """

    complex: CellComplex
    base: CellComplex
    n: int

    def slice_cell(self, k, i, level):
        return level * self.base.n_cells(k) + i

    def prism_cell(self, k, i, level):
        # k = dimension of the product cell; the base cell has dim k-1
        off = (self.n + 1) * self.base.n_cells(k)
        return off + level * self.base.n_cells(k - 1) + i

    def n_slice_cells(self, k):
        return (self.n + 1) * self.base.n_cells(k)

    def describe_cell(self, k, j):
        """Inverse of the indexing: ('slice', base cell, level) or ('prism', ...)."""
        cnt = self.base.n_cells(k)
        if j < (self.n + 1) * cnt:
            return ("slice", (k, j % cnt), j // cnt)
        j2 = j - (self.n + 1) * cnt
        cnt2 = self.base.n_cells(k - 1)
        return ("prism", (k - 1, j2 % cnt2), j2 // cnt2)


def interval_product(X, n, size_guard=DEFAULT_CELL_BUDGET):
    """Regular cell structure on X x [0, n] with unit interval subdivision.

    Boundary convention: d(sigma x [l, l+1]) = d(sigma) x [l, l+1]
    + (-1)^dim(sigma) (sigma x {l+1} - sigma x {l}).
    """
    if X.dim > 2:
        raise DimensionTooHigh("products only implemented for base dim <= 2")
    if n < 1:
        raise ShapeMismatch("interval products need n >= 1")
    total = (2 * n + 1) * X.total_cells()
    if total > size_guard:
        raise SizeGuardExceeded(
            f"product would have {total} cells (budget {size_guard})"
        )
    prod = IntervalProduct(None, X, n)
    dim = X.dim + 1
    counts = []
    for k in range(dim + 1):
        counts.append((n + 1) * X.n_cells(k) + n * X.n_cells(k - 1))
    boundaries = [None]
    for k in range(1, dim + 1):
        cols = []
        for l in range(n + 1):
            for i in range(X.n_cells(k)):
                col = {}
                for r, c in X.boundary_of(k, i).items():
                    col[prod.slice_cell(k - 1, r, l)] = c
                cols.append(col)
        for l in range(n):
            for i in range(X.n_cells(k - 1)):
                col = {}
                for r, c in (X.boundary_of(k - 1, i) if k >= 2 else {}).items():
                    col[prod.prism_cell(k - 1, r, l)] = c
                sgn = (-1) ** (k - 1)
                top = prod.slice_cell(k - 1, i, l + 1)
                bot = prod.slice_cell(k - 1, i, l)
                col[top] = col.get(top, 0) + sgn
                col[bot] = col.get(bot, 0) - sgn
                cols.append({r: c for r, c in col.items() if c != 0})
        boundaries.append(cols)
    labels = {}
    for l in range(n + 1):
        labels[f"slice-{l}"] = [
            (k, prod.slice_cell(k, i, l))
            for k in range(X.dim + 1)
            for i in range(X.n_cells(k))
        ]
    Z = CellComplex(counts, boundaries, labels=labels)
    prod.complex = Z
    return prod


def product_interval(X, n, size_guard=DEFAULT_CELL_BUDGET):
    """X x [0, n] as a plain cell complex (slices labeled slice-0, slice-n)."""
    return interval_product(X, n, size_guard=size_guard).complex


def slice_inclusion(prod, level):
    """Chain map X -> X x [0, n] onto the slice at the given level."""
    X = prod.base
    assignment = [
        [{prod.slice_cell(k, i, level): 1} for i in range(X.n_cells(k))]
        for k in range(X.dim + 1)
    ]
    return CellMap(X, prod.complex, assignment)


def product_cellmap(prod_src, prod_dst, f, g):
    """Product of chain maps on interval products: (a x b) -> f(a) x g(b).

    ``f``: base -> base map, ``g``: path(0..n) -> path(0..m) map given as a
    CellMap between :func:`path_complex` complexes.
    """
    Xs, Xd = prod_src.base, prod_dst.base
    assignment = []
    for k in range(prod_src.complex.dim + 1):
        level = []
        for l in range(prod_src.n + 1):
            for i in range(Xs.n_cells(k)):
                acc = {}
                for j, c in f.cell_image(k, i).items():
                    for w, c2 in g.cell_image(0, l).items():
                        idx = prod_dst.slice_cell(k, j, w)
                        acc[idx] = acc.get(idx, 0) + c * c2
                level.append({m: c for m, c in acc.items() if c != 0})
        for l in range(prod_src.n):
            for i in range(Xs.n_cells(k - 1)):
                acc = {}
                for j, c in f.cell_image(k - 1, i).items():
                    for w, c2 in g.cell_image(1, l).items():
                        idx = prod_dst.prism_cell(k, j, w)
                        acc[idx] = acc.get(idx, 0) + c * c2
                level.append({m: c for m, c in acc.items() if c != 0})
        assignment.append(level)
    return CellMap(prod_src.complex, prod_dst.complex, assignment)


# -- subdivisions -------------------------------------------------------------


@dataclass
class Subdivision:
    """A subdivision with carrier bookkeeping.

    ``carrier`` maps every cell of the refined complex to the base cell whose
    interior contains it (dimensions may differ, so this is a table rather
    than a chain map).
    """

    complex: CellComplex
    base: CellComplex
    carrier: dict = field(default_factory=dict)
    middle_faces: dict = field(default_factory=dict)
    apexes: dict = field(default_factory=dict)


def barycentric_subdivision(X):
    """Standard barycentric subdivision of a simplicial complex.

    New vertices are the cells of X; new simplices are flags of proper faces.
    Returns a :class:`Subdivision` whose carrier sends each flag simplex to
    its largest cell.
    """
    if not X.is_simplicial:
        raise NotSimplicial("barycentric subdivision needs a simplicial complex")
    cell_order = [(k, i) for k in range(X.dim + 1) for i in range(X.n_cells(k))]
    vert_of = {c: t for t, c in enumerate(cell_order)}
    flags_by_top = {c: [[c]] for c in cell_order}
    for k in range(X.dim + 1):
        for i in range(X.n_cells(k)):
            verts = set(X.simplices[k][i])
            faces = []
            for r in range(1, k + 1):
                for sub in combinations(sorted(verts), r):
                    faces.append((r - 1, X.simplex_index(sub)))
            for fc in faces:
                for flag in flags_by_top[fc]:
                    flags_by_top[(k, i)].append(flag + [(k, i)])
    simplices = []
    carrier = {}
    all_flags = []
    for c in cell_order:
        all_flags.extend(flags_by_top[c])
    for flag in all_flags:
        simplices.append(tuple(sorted(vert_of[c] for c in flag)))
    sd = simplicial_complex(simplices)
    for k in range(sd.dim + 1):
        for i, verts in enumerate(sd.simplices[k]):
            top = max(cell_order[v] for v in verts)
            carrier[(k, i)] = top
    return Subdivision(sd, X, carrier)


def midpoint_subdivision_global(X):
    """Edge-midpoint subdivision of every cell of a 2-dim simplicial complex.

    Vertices keep their indices; edge e gets midpoint vertex |X0| + e.  Each
    face splits into three corner faces and a middle face; ``middle_faces``
    maps each base face to its middle face in the refinement.
    """
    if not X.is_simplicial:
        raise NotSimplicial("midpoint subdivision needs a simplicial complex")
    if X.dim > 2:
        raise DimensionTooHigh("midpoint subdivision implemented for dim <= 2")
    n0 = X.n_cells(0)
    mid = lambda e: n0 + e
    simplices = []
    for e in range(X.n_cells(1)):
        u, v = X.simplices[1][e]
        simplices.append((u, mid(e)))
        simplices.append((mid(e), v))
    face_mids = {}
    for f in range(X.n_cells(2) if X.dim >= 2 else 0):
        a, b, c = X.simplices[2][f]
        eab = X.simplex_index((a, b))
        eac = X.simplex_index((a, c))
        ebc = X.simplex_index((b, c))
        face_mids[f] = (mid(eab), mid(eac), mid(ebc))
        simplices.append((a, mid(eab), mid(eac)))
        simplices.append((b, mid(eab), mid(ebc)))
        simplices.append((c, mid(eac), mid(ebc)))
        simplices.append((mid(eab), mid(eac), mid(ebc)))
    for v in range(n0):
        simplices.append((v,))
    sd = simplicial_complex(simplices)
    carrier = {}
    for v in range(n0):
        carrier[(0, v)] = (0, v)
    for e in range(X.n_cells(1)):
        carrier[(0, mid(e))] = (1, e)
    edge_carrier = {}
    for e in range(X.n_cells(1)):
        u, v = X.simplices[1][e]
        for pair in ((u, mid(e)), (min(mid(e), v), max(mid(e), v))):
            idx = sd.simplex_index(pair)
            carrier[(1, idx)] = (1, e)
    middle = {}
    for f, (mab, mac, mbc) in face_mids.items():
        a, b, c = X.simplices[2][f]
        for tri in ((a, mab, mac), (b, mab, mbc), (c, mac, mbc), (mab, mac, mbc)):
            idx = sd.simplex_index(tri)
            carrier[(2, idx)] = (2, f)
        for pair in combinations(sorted((mab, mac, mbc)), 2):
            idx = sd.simplex_index(pair)
            carrier[(1, idx)] = (2, f)
        middle[f] = sd.simplex_index(tuple(sorted((mab, mac, mbc))))
    return Subdivision(sd, X, carrier, middle_faces=middle)


def midpoint_subdivision(X):
    """Midpoint subdivision of a single 2-simplex; middle face labeled.

    Returns the refined complex with labels "middle" (the central face) and
    "boundary" (the subdivided boundary circle).
    """
    if not (X.is_simplicial and X.dim == 2 and X.n_cells(2) == 1
            and X.n_cells(0) == 3 and X.n_cells(1) == 3):
        raise NotASimplex("input must be a single 2-simplex")
    sub = midpoint_subdivision_global(X)
    sd = sub.complex
    mid_face = sub.middle_faces[0]
    boundary_cells = []
    mids = set(sd.simplices[2][mid_face])
    for v in range(3):
        boundary_cells.append((0, v))
    for e in range(sd.n_cells(1)):
        u, v = sd.simplices[1][e]
        if not (u in mids and v in mids):
            boundary_cells.append((1, e))
    for v in sorted(mids):
        boundary_cells.append((0, v))
    middle_cells = [(2, mid_face)]
    for pair in combinations(sorted(mids), 2):
        middle_cells.append((1, sd.simplex_index(pair)))
    for v in sorted(mids):
        middle_cells.append((0, v))
    sd = sd.relabeled({
        "middle": [(2, mid_face)],
        "middle-boundary": [c for c in middle_cells if c != (2, mid_face)],
        "boundary": boundary_cells,
    })
    return Subdivision(sd, X, sub.carrier, middle_faces=sub.middle_faces)


def cone_middle_subdivision(X):
    """Midpoint subdivision with every middle face coned from a new apex.

    The standard stage-target subdivision: mesh <= 1/2 of the base.  Carrier
    sends apexes and cone cells to the base face.  ``apexes`` maps each base
    face to its apex vertex.
    """
    sub = midpoint_subdivision_global(X)
    sd = sub.complex
    apex_of = {}
    simplices = []
    for k in range(sd.dim + 1):
        for i, verts in enumerate(sd.simplices[k]):
            if k == 2 and i in set(sub.middle_faces.values()):
                continue
            simplices.append(verts)
    next_v = sd.n_cells(0)
    cone_faces = {}
    for f, midf in sorted(sub.middle_faces.items()):
        apex = next_v
        next_v += 1
        apex_of[f] = apex
        m1, m2, m3 = sd.simplices[2][midf]
        cone_faces[f] = []
        for pair in ((m1, m2), (m1, m3), (m2, m3)):
            cone_faces[f].append(tuple(sorted(pair + (apex,))))
            simplices.append(tuple(sorted(pair + (apex,))))
    tau = simplicial_complex(simplices)
    carrier = {}
    for k in range(tau.dim + 1):
        for i, verts in enumerate(tau.simplices[k]):
            base_cell = None
            if all(v < sd.n_cells(0) for v in verts):
                old = sd.simplex_index(verts)
                if old is not None:
                    base_cell = sub.carrier[(k, old)]
            if base_cell is None:
                # touches an apex: carried by the base face that owns it
                apex_faces = [f for f, a in apex_of.items() if a in verts]
                inherited = []
                for v in verts:
                    if v < sd.n_cells(0):
                        inherited.append(sub.carrier[(0, v)])
                cand = apex_faces[0] if apex_faces else None
                base_cell = (2, cand)
            carrier[(k, i)] = base_cell
    return Subdivision(tau, X, carrier, middle_faces=dict(sub.middle_faces),
                       apexes=apex_of)
