"""Builders for the two-hole winding complexes and their towers.

The centerpiece is the family M(p, q, k): a midpoint-subdivided triangle
whose middle face is replaced by a pair-of-pants whose two cuffs continue
into mapping-cylinder towers winding with total degrees p^k and q^k down to
triangle-sized holes.  The boundary loop is then homotopic to
e = a^(p^k) b^(q^k), which is what drives every norm bound downstream.

Also here: the recursive face-replacement towers (each 2-simplex of a stage
swallowed by a copy of the next bundle), the product certificates
transporting a primitive cochain to X x [0, n], fiber products along light
simplicial maps, and the iterated pull-back stages they generate.
"""

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd

from .complexes import (
    CellComplex,
    CellMap,
    Subdivision,
    annulus_triangulation,
    circle,
    coarsening_cylinder,
    cone_middle_subdivision,
    cycle_vertices_of_label,
    filled_triangle,
    glue,
    interval_product,
    labeled_cycle,
    midpoint_subdivision,
    midpoint_subdivision_global,
    path_complex,
    product_cellmap,
    remove_cells,
    simplicial_complex,
    subcomplex_matching,
    wedge,
)
from .cochains import Cochain, RING_Z, fundamental_class, pullback_cochain
from .errors import (
    DivisibilityViolated,
    InvalidParams,
    NoValidAssignment,
    NotLight,
    NotSimplicial,
    SizeGuardExceeded,
)

DEFAULT_SIZE_GUARD = 300_000

_SMALL_PRIMES = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}


def _is_prime(n):
    if n < 2:
        return False
    if n in _SMALL_PRIMES:
        return True
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


@dataclass
class MkParams:
    """Parameters of the two-hole family.

    ``edge_scale`` replaces the 3 in the edge-count bookkeeping (default 3);
    ``reduce`` keeps every tower circle at edge_scale*p / edge_scale*q edges
    by interposing degree-one coarsening collars, preserving the per-stage
    winding degrees and the p^k / q^k totals at desk-scale cell counts.
    """

    p: int
    q: int
    k: int
    edge_scale: int = 3
    reduce: bool = False

    def __post_init__(self):
        if not (_is_prime(self.p) and _is_prime(self.q)):
            raise InvalidParams(f"p = {self.p} and q = {self.q} must be prime")
        if self.p == self.q:
            raise InvalidParams("p and q must differ")
        if self.k < 1:
            raise InvalidParams("level k must be >= 1")
        if self.edge_scale < 3:
            raise InvalidParams("edge_scale must be >= 3 (simplicial circles)")
        if self.p <= self.q ** 2:
            warnings.warn(
                f"p = {self.p} <= q^2 = {self.q ** 2}: the norm bounds lose "
                "their slack in this regime",
                stacklevel=3,
            )


@dataclass
class TowerStage:
    """One stage of a tower: complex, projection data, Lipschitz bound.

    ``projection`` is the honest simplicial map to the previous stage (the
    subdivision approximation); ``tau_map`` lands in the mesh-1/2 subdivision
    ``tau`` of the projection target, which is what certifies the 1/2 bound
    per stage.  Pull-back stages carry their fiber data separately.
    """

    complex: CellComplex
    projection: CellMap = None
    lipschitz_bound: Fraction = Fraction(1, 2)
    level: int = 0
    tau: Subdivision = None
    tau_map: CellMap = None
    bundle: object = None
    fiber_subdivision: Subdivision = None
    fiber_map: CellMap = None


@dataclass
class MkBundle:
    """The built complex plus the maps and labels the verifications use."""

    complex: CellComplex
    params: MkParams
    phi: CellMap
    tau: Subdivision
    rho: CellMap
    q_map: CellMap
    obstruction: Cochain
    boundary_label: str = "boundary"
    p_hole_label: str = "p-hole"
    q_hole_label: str = "q-hole"
    notes: dict = field(default_factory=dict)

    def boundary_cycle(self):
        return labeled_cycle(self.complex, self.boundary_label)

    def hole_cycle(self, which):
        label = self.p_hole_label if which == "p" else self.q_hole_label
        return labeled_cycle(self.complex, label)


def _relabel_only(X, labels):
    """Same complex with exactly the given labels."""
    return CellComplex(
        X.counts,
        [None] + [X.boundary_columns(k) for k in range(1, X.dim + 1)],
        simplices=X.simplices,
        labels=labels,
        validate=False,
    )


def _map_label(y_table, Y, name):
    return tuple(sorted(y_table[c][0] for c in Y.label_cells(name)))


def _cycle_from(X, label, start, reverse=False):
    order = cycle_vertices_of_label(X, label)
    i = order.index(start)
    order = order[i:] + order[:i]
    if reverse:
        order = [order[0]] + list(reversed(order[1:]))
    return order


def build_Tp(p, i, params=None):
    """One winding stage of the degree-p tower.

    Default sizes p^{i+1} -> p^i (scaled up by edge_scale when the target
    would drop below a triangle); reduce mode uses edge_scale * those.
    Returns the cylinder and its collapse to the target circle.
    """
    if not _is_prime(p):
        raise InvalidParams(f"p = {p} must be prime")
    if i < 1:
        raise InvalidParams("stage index must be >= 1")
    esc = params.edge_scale if params is not None else 3
    scale = 1
    if (params is not None and params.reduce) or p ** i < 3:
        scale = esc
    a, b = scale * p ** (i + 1), scale * p ** i
    guard = DEFAULT_SIZE_GUARD
    if 2 * (a + b) > guard:
        raise SizeGuardExceeded(
            f"stage would need {a + b} rim vertices; pass reduce mode"
        )
    return annulus_triangulation(a, b)


def _tower_chain(u, params):
    """Tower of degree-u cylinders from a collar circle down to a small hole.

    Returns a complex labeled "hole" (edge_scale edges) and "collar"
    (the outer rim), with composite winding u^k from collar to hole.
    In reduce mode every circle is edge_scale or edge_scale*u; otherwise the
    stage sizes run edge_scale^k * u^i with a final coarsening to the hole.
    """
    esc, k = params.edge_scale, params.k
    pieces = []  # (complex, attach_label, free_label), glued in order
    if params.reduce:
        S, _ = annulus_triangulation(esc * u, esc)
        chain = _relabel_only(S, {
            "hole": S.label_cells("target-rim"),
            "top": S.label_cells("domain-rim"),
        })
        for _ in range(k - 1):
            C, _ = coarsening_cylinder(esc * u, esc)
            chain = _attach_cyl(chain, C, attach="domain-rim", free="target-rim")
            S2, _ = annulus_triangulation(esc * u, esc)
            chain = _attach_cyl(chain, S2, attach="target-rim", free="domain-rim")
    else:
        base = esc ** k
        S, _ = annulus_triangulation(base * u, base)
        if base > esc:
            C0, _ = coarsening_cylinder(base, esc)
            chain = _relabel_only(C0, {
                "hole": C0.label_cells("target-rim"),
                "top": C0.label_cells("domain-rim"),
            })
            chain = _attach_cyl(chain, S, attach="target-rim", free="domain-rim")
        else:
            chain = _relabel_only(S, {
                "hole": S.label_cells("target-rim"),
                "top": S.label_cells("domain-rim"),
            })
        for i in range(2, k + 1):
            Si, _ = annulus_triangulation(base * u ** i, base * u ** (i - 1))
            chain = _attach_cyl(chain, Si, attach="target-rim", free="domain-rim")
    return chain


def _attach_cyl(chain, piece, attach, free):
    """Glue a cylinder's ``attach`` rim onto the chain's "top"; relabel.

    All labels of the chain except "top" survive; the new "top" is the
    piece's other rim.
    """
    top_order = cycle_vertices_of_label(chain, "top")
    rim_order = cycle_vertices_of_label(piece, attach)
    if len(top_order) != len(rim_order):
        raise InvalidParams(
            f"cannot chain: rim sizes {len(rim_order)} vs {len(top_order)}"
        )
    vm = {rim_order[t]: top_order[t] for t in range(len(rim_order))}
    matching = subcomplex_matching(chain, "top", piece, attach, vm)
    Z, ytab = glue(chain, piece, matching)
    labels = {name: Z.label_cells(name) for name in chain.labels
              if name != "top"}
    labels["top"] = _map_label(ytab, piece, free)
    return _relabel_only(Z, labels)


def _pants(ap, aq):
    """Triangulated mapping cylinder of the two-point collapse.

    Domain rim: circle(ap + aq); target: wedge of circles with ap and aq
    edges meeting at the image of the two collapsed points.  Labels:
    "domain-rim", "wedge" (the whole target), "p-loop", "q-loop".
    """
    W, ytab = wedge(circle(ap), circle(aq), 0, 0)
    # wedge complex: X-circle keeps vertices 0..ap-1; Y-vertex u >= 1 lands
    # at ap + u - 1; the wedge point is 0
    dom = circle(ap + aq)
    vm = [0] * (ap + aq)
    for t in range(ap):
        vm[t] = t
    for u in range(1, aq):
        vm[ap + u] = ap + u - 1
    from .complexes import mapping_cylinder

    f = CellMap.from_vertex_map(dom, W, vm)
    cyl, _, retr = mapping_cylinder(f)
    nk = ap + aq
    p_loop_verts = set(range(nk, nk + ap))
    q_loop_verts = {nk} | set(range(nk + ap, nk + ap + aq - 1))
    from .complexes import _vertex_span_cells

    labels = {
        "domain-rim": cyl.label_cells("domain"),
        "wedge": cyl.label_cells("target"),
        "p-loop": _vertex_span_cells(cyl, p_loop_verts),
        "q-loop": _vertex_span_cells(cyl, q_loop_verts),
    }
    return _relabel_only(cyl, labels)


def _max_valence(X, cells=None):
    counts = {}
    for e in range(X.n_cells(1)):
        for v in X.simplex(1, e):
            counts[v] = counts.get(v, 0) + 1
    return max(counts.values(), default=0)


def build_Mk(params, size_guard=DEFAULT_SIZE_GUARD):
    """Assemble the two-hole winding complex M(p, q, k).

    Pieces, glued hole-outward: two tower chains wedged at their collars, a
    pair-of-pants cylinder over the wedge, a degree-one coarsening collar
    down to a triangle, and the midpoint-subdivided triangle with its middle
    face removed.  The boundary is the subdivided triangle boundary; phi
    collapses everything inside the middle hole onto one midpoint vertex and
    is the identity on the outer part.
    """
    p, q, k, esc = params.p, params.q, params.k, params.edge_scale
    ap = esc * p if params.reduce else (esc * p) ** k
    aq = esc * q if params.reduce else (esc * q) ** k
    est = 6 * (ap + aq) * (k + 1)
    if est > size_guard:
        raise SizeGuardExceeded(
            f"estimated {est} cells exceeds the budget {size_guard}; "
            "rebuild with reduce=True for desk-scale sizes"
        )
    # tower chains, wedged at their collar base points
    TP = _tower_chain(p, params)
    TQ = _tower_chain(q, params)
    TP = _relabel_only(TP, {"p-hole": TP.label_cells("hole"),
                            "collar-p": TP.label_cells("top")})
    TQ = _relabel_only(TQ, {"q-hole": TQ.label_cells("hole"),
                            "collar-q": TQ.label_cells("top")})
    base_p = cycle_vertices_of_label(TP, "collar-p")[0]
    base_q = cycle_vertices_of_label(TQ, "collar-q")[0]
    W, ytab = wedge(TP, TQ, base_p, base_q)
    wedge_vertex = base_p
    labels = {
        "p-hole": W.label_cells("p-hole"),
        "q-hole": _map_label(ytab, TQ, "q-hole"),
        "collar-p": W.label_cells("collar-p"),
        "collar-q": _map_label(ytab, TQ, "collar-q"),
    }
    W = _relabel_only(W, labels)
    # pair of pants over the wedge of collars
    P = _pants(ap, aq)
    pants_valence = _max_valence(P)
    p_order = _cycle_from(W, "collar-p", wedge_vertex)
    q_order = _cycle_from(W, "collar-q", wedge_vertex)
    loop_p = _cycle_from(P, "p-loop", ap + aq)
    loop_q = _cycle_from(P, "q-loop", ap + aq)
    vm = {}
    for t, v in enumerate(loop_p):
        vm[v] = p_order[t]
    for t, v in enumerate(loop_q):
        vm[v] = q_order[t]
    wedge_cells = tuple(sorted(set(P.label_cells("p-loop"))
                               | set(P.label_cells("q-loop"))))
    P = _relabel_only(P, {"wedge": wedge_cells,
                          "domain-rim": P.label_cells("domain-rim")})
    collar_cells = tuple(sorted(set(W.label_cells("collar-p"))
                                | set(W.label_cells("collar-q"))))
    W = _relabel_only(W, {**{n: W.label_cells(n) for n in
                             ("p-hole", "q-hole")},
                          "collar-wedge": collar_cells})
    matching = subcomplex_matching(W, "collar-wedge", P, "wedge", vm)
    M1, ytab = glue(W, P, matching)
    M1 = _relabel_only(M1, {
        "p-hole": M1.label_cells("p-hole"),
        "q-hole": M1.label_cells("q-hole"),
        "pants-rim": _map_label(ytab, P, "domain-rim"),
    })
    # coarsening collar down to the middle triangle size
    K, _ = coarsening_cylinder(ap + aq, esc)
    guts = _attach_cyl(
        _relabel_only(M1, {"hole": (), "top": M1.label_cells("pants-rim"),
                           "p-hole": M1.label_cells("p-hole"),
                           "q-hole": M1.label_cells("q-hole")}),
        K, attach="domain-rim", free="target-rim",
    )
    guts = _relabel_only(guts, {
        "p-hole": guts.label_cells("p-hole"),
        "q-hole": guts.label_cells("q-hole"),
        "guts-boundary": guts.label_cells("top"),
    })
    # the holed subdivided triangle
    tau = midpoint_subdivision(filled_triangle())
    (middle,) = tau.complex.label_cells("middle")
    D = remove_cells(tau.complex, [middle])
    vm2 = {}
    g_order = cycle_vertices_of_label(guts, "guts-boundary")
    d_order = cycle_vertices_of_label(D, "middle-boundary")
    for t, v in enumerate(g_order):
        vm2[v] = d_order[t]
    matching2 = subcomplex_matching(D, "middle-boundary", guts,
                                    "guts-boundary", vm2)
    M, ytab2 = glue(D, guts, matching2)
    M = _relabel_only(M, {
        "boundary": M.label_cells("boundary"),
        "middle-boundary": M.label_cells("middle-boundary"),
        "p-hole": _map_label(ytab2, guts, "p-hole"),
        "q-hole": _map_label(ytab2, guts, "q-hole"),
    })
    # phi: identity on the subdivided-triangle part, everything else onto
    # one midpoint vertex of the middle face
    n_outer = tau.complex.n_cells(0)
    mid_vertex = 3  # midpoint of edge (0, 1) in the subdivision
    phi_vm = [v if v < n_outer else mid_vertex for v in range(M.n_cells(0))]
    phi = CellMap.from_vertex_map(M, tau.complex, phi_vm)
    rho = simplicial_approx_identity(tau)
    q_map = rho.compose(phi)
    mu = fundamental_class(filled_triangle(), 2)
    obstruction = pullback_cochain(q_map, mu)
    bundle = MkBundle(
        complex=M, params=params, phi=phi, tau=tau, rho=rho, q_map=q_map,
        obstruction=obstruction,
        notes={"pants_max_valence": pants_valence,
               "collar_sizes": (ap, aq)},
    )
    _check_bundle(bundle)
    return bundle


def _check_bundle(bundle):
    M, params = bundle.complex, bundle.params
    esc = params.edge_scale
    for label in (bundle.p_hole_label, bundle.q_hole_label):
        edges = M.label_cells_of_dim(label, 1)
        if len(edges) != esc:
            raise InvalidParams(
                f"{label} has {len(edges)} edges, expected {esc}"
            )
    # phi restricted to the boundary is the identity onto the subdivided rim
    for (kk, i) in M.label_cells(bundle.boundary_label):
        img = bundle.phi.cell_image(kk, i)
        if list(img.values()) != [1]:
            raise InvalidParams("phi does not fix the boundary pointwise")
    if bundle.notes["pants_max_valence"] > max(params.p, 6):
        warnings.warn(
            "pants triangulation exceeds the vertex-valence target: "
            f"{bundle.notes['pants_max_valence']} > {params.p}",
            stacklevel=2,
        )


def simplicial_approx_identity(sub):
    """Simplicial approximation of the identity on a subdivision.

    Sends every new vertex to the smallest vertex of its carrier cell; the
    carrier-containment condition is verified on every simplex and
    NoValidAssignment raised if the carrier data cannot support it.
    """
    tau, base = sub.complex, sub.base
    vm = []
    for v in range(tau.n_cells(0)):
        c = sub.carrier.get((0, v))
        if c is None:
            raise NoValidAssignment(f"no carrier for vertex {v}")
        vm.append(base.simplices[c[0]][c[1]][0])
    rho = CellMap.from_vertex_map(tau, base, vm)
    for k in range(tau.dim + 1):
        for i in range(tau.n_cells(k)):
            carrier = sub.carrier.get((k, i))
            if carrier is None:
                raise NoValidAssignment(f"no carrier for cell (dim {k}, {i})")
            carrier_verts = set(base.simplices[carrier[0]][carrier[1]])
            image_verts = {vm[v] for v in tau.simplices[k][i]}
            if not image_verts <= carrier_verts:
                raise NoValidAssignment(
                    f"approximation escapes the carrier at cell (dim {k}, {i})"
                )
    return rho


def collapse_map_xi(n):
    """Collapse [0, n] onto [0, 1]: everything below n-1 to 0, last edge iso."""
    if n < 1:
        raise InvalidParams("n must be >= 1")
    src = path_complex(n)
    dst = path_complex(1)
    vm = [0] * n + [1]
    return CellMap.from_vertex_map(src, dst, vm)


# -- the product certificate -----------------------------------------------


@dataclass
class BetaCertificate:
    """A bounded primitive on X x [0, n] for the product obstruction."""

    beta: Cochain
    product: object  # IntervalProduct
    n: int
    gamma: Cochain


def build_beta(gamma, n, size_guard=DEFAULT_SIZE_GUARD):
    """Transport a primitive gamma to a bounded 2-cochain on X x [0, n].

    Prisms e x [i*m_e, i*m_e + 1] with m_e = n / |gamma(e)| carry sgn(gamma(e));
    interior slices carry -beta(d(sigma) x [0, l]); the two end slices are
    zero.  Requires |gamma(e)| to divide n for every edge (use n = lcm or a
    factorial of the norm).
    """
    X = gamma.complex
    if gamma.degree != 1 or gamma.ring != RING_Z:
        raise InvalidParams("gamma must be an integer 1-cochain")
    for e, v in enumerate(gamma.values):
        if v != 0 and n % abs(v) != 0:
            raise DivisibilityViolated(
                f"|gamma| = {abs(v)} on edge {e} does not divide n = {n}"
            )
    prod = interval_product(X, n, size_guard=size_guard)
    Z = prod.complex
    values = [0] * Z.n_cells(2)
    # prisms over edges
    for e, v in enumerate(gamma.values):
        if v == 0:
            continue
        m = n // abs(v)
        s = 1 if v > 0 else -1
        for i in range(abs(v)):
            values[prod.prism_cell(2, e, i * m)] = s
    # running sums beta(e x [0, l]) for slice values
    running = [[0] * (n + 1) for _ in range(X.n_cells(1))]
    for e in range(X.n_cells(1)):
        acc = 0
        for l in range(1, n + 1):
            acc += values[prod.prism_cell(2, e, l - 1)]
            running[e][l] = acc
    for f in range(X.n_cells(2)):
        bnd = X.boundary_of(2, f)
        for l in range(1, n):
            acc = 0
            for e, c in bnd.items():
                acc += c * running[e][l]
            values[prod.slice_cell(2, f, l)] = -acc
    beta = Cochain(Z, 2, RING_Z, values)
    return BetaCertificate(beta=beta, product=prod, n=n, gamma=gamma)


def product_obstruction_cocycle(bundle, prod):
    """(q x xi)^* of the product fundamental cocycle on M x [0, n].

    The target is the triangle times a unit interval; its single 3-cell
    carries 1 and the pullback along q_map x collapse evaluates it on every
    prism of the product.
    """
    n = prod.n
    xi = collapse_map_xi(n)
    target_prod = interval_product(bundle.q_map.target, 1)
    g = product_cellmap(prod, target_prod, bundle.q_map, xi)
    one = Cochain(target_prod.complex, 3, RING_Z,
                  [1] * target_prod.complex.n_cells(3))
    return pullback_cochain(g, one), g


def lcm_of_values(gamma):
    out = 1
    for v in gamma.values:
        if v != 0:
            out = out * abs(v) // gcd(out, abs(v))
    return out


def pick_n(gamma, mode="lcm"):
    """The interval length for the product certificate."""
    m = gamma.norm()
    if m == 0:
        return 1
    if mode == "factorial":
        return factorial(m)
    if mode == "lcm":
        return lcm_of_values(gamma)
    raise InvalidParams(f"unknown n mode {mode!r}")


# -- recursive face-replacement towers ---------------------------------------


def _guts_of(bundle):
    """The bundle complex minus its subdivided-triangle part.

    What remains is everything inside the middle hole, with the middle
    triangle itself as the labeled rim "guts-boundary"; replacing a midpoint
    subdivision's middle face with this reproduces the bundle inside any
    host face.
    """
    M = bundle.complex
    # the subdivided-triangle part: cells with all vertices < 6 (the glue
    # kept those vertex indices); everything else is inside the middle hole
    from .complexes import _vertex_span_cells

    d_cells = set(_vertex_span_cells(M, range(6)))
    keep_rim = set(M.label_cells("middle-boundary"))
    doomed = sorted(d_cells - keep_rim, reverse=True)
    guts = remove_cells(M, doomed)
    return _relabel_only(guts, {
        "guts-boundary": guts.label_cells("middle-boundary"),
        bundle.p_hole_label: guts.label_cells(bundle.p_hole_label),
        bundle.q_hole_label: guts.label_cells(bundle.q_hole_label),
    })


def replace_faces(host, bundle, size_guard=DEFAULT_SIZE_GUARD):
    """Swallow every 2-simplex of the host with a copy of the bundle.

    Midpoint-subdivides the whole host, deletes each middle face, and glues
    one copy of the bundle guts along each middle triangle.  Returns
    (stage, tau, tau_map, projection): the projection is simplicial into the
    cone subdivision of the host (mesh <= 1/2) and composes with the
    approximation of the identity into an honest host-valued simplicial map.
    """
    if not host.is_simplicial or host.dim != 2:
        raise NotSimplicial("face replacement needs a 2-dim simplicial host")
    sub = midpoint_subdivision_global(host)
    guts = _guts_of(bundle)
    n_faces = host.n_cells(2)
    est = sub.complex.total_cells() + n_faces * guts.total_cells()
    if est > size_guard:
        raise SizeGuardExceeded(
            f"stage would have about {est} cells (budget {size_guard})"
        )
    S = sub.complex
    middles = sub.middle_faces
    g_order = cycle_vertices_of_label(guts, "guts-boundary")
    rim_cells = set(guts.label_cells("guts-boundary"))
    interior_verts = [v for v in range(guts.n_cells(0))
                      if (0, v) not in rim_cells]
    n_interior = len(interior_verts)
    base0 = S.n_cells(0)
    inter_pos = {v: t for t, v in enumerate(interior_verts)}

    def vert_in_copy(f, v, mids):
        if (0, v) in rim_cells:
            return mids[g_order.index(v)]
        return base0 + f * n_interior + inter_pos[v]

    tuples = []
    doomed_faces = set(middles.values())
    for k in range(3):
        for i in range(S.n_cells(k)):
            if k == 2 and i in doomed_faces:
                continue
            tuples.append(S.simplices[k][i])
    copy_tuples = [dict() for _ in range(n_faces)]  # guts cell -> new tuple
    for f in range(n_faces):
        mids = S.simplices[2][middles[f]]
        for k in range(guts.dim + 1):
            for i in range(guts.n_cells(k)):
                verts = tuple(sorted(
                    vert_in_copy(f, v, mids) for v in guts.simplices[k][i]
                ))
                copy_tuples[f][(k, i)] = verts
                if (k, i) not in rim_cells:
                    tuples.append(verts)
    stage_labels = {}
    stage = simplicial_complex(tuples)
    for f in range(n_faces):
        for name in (bundle.p_hole_label, bundle.q_hole_label):
            cells = []
            for (k, i) in guts.label_cells(name):
                cells.append((k, stage.simplex_index(copy_tuples[f][(k, i)])))
            stage_labels[f"{name}-{f}"] = cells
    stage = stage.relabeled(stage_labels)
    # projection into the cone subdivision of the host
    tau = cone_middle_subdivision(host)
    vm = [None] * stage.n_cells(0)
    for i in range(base0):
        vm[i] = i  # the cone subdivision keeps the midpoint-subdivision ids
    for f in range(n_faces):
        apex = tau.apexes[f]
        for v in interior_verts:
            vm[base0 + f * n_interior + inter_pos[v]] = apex
    tau_map = CellMap.from_vertex_map(stage, tau.complex, vm)
    rho = simplicial_approx_identity(tau)
    projection = rho.compose(tau_map)
    return stage, tau, tau_map, projection


def check_stage_carriers(stage, q=None):
    """Verify a q-map is a simplicial approximation of the stage's tau map.

    For every simplex s: q(s) must land inside the host carrier of the cell
    tau_map(s) lands in.  ``q`` defaults to the stage projection (the
    face-replacement towers); pull-back stages pass their triangle-valued
    approximation explicitly.  Returns (ok, offending cell or None).
    """
    X = stage.complex
    tau, tau_map = stage.tau, stage.tau_map
    q = q if q is not None else stage.projection
    host = tau.base
    vm_tau = tau_map.vertex_map
    vm_q = q.vertex_map
    tauC = tau.complex
    for k in range(X.dim + 1):
        for i in range(X.n_cells(k)):
            verts = X.simplices[k][i]
            t_imgs = tuple(sorted({vm_tau[v] for v in verts}))
            t_idx = tauC.simplex_index(t_imgs)
            if t_idx is None:
                return False, (k, i)
            carrier = tau.carrier[(len(t_imgs) - 1, t_idx)]
            carrier_verts = set(host.simplices[carrier[0]][carrier[1]])
            if not {vm_q[v] for v in verts} <= carrier_verts:
                return False, (k, i)
    return True, None


def open_star_refinement_witnesses(stage):
    """Per-vertex witnesses for proj(Ost(v)) inside a single host open star.

    For every vertex v of the stage complex, intersects the host carriers of
    the tau-images of all simplices containing v; any vertex in the
    intersection witnesses Ost(v) c proj^{-1}(Ost(u, host)).  Returns
    (all_found, witness dict).
    """
    X = stage.complex
    tau, tau_map = stage.tau, stage.tau_map
    host = tau.base
    tauC = tau.complex
    vm = tau_map.vertex_map
    incident = [[] for _ in range(X.n_cells(0))]
    for k in range(X.dim + 1):
        for i in range(X.n_cells(k)):
            for v in X.simplices[k][i]:
                incident[v].append((k, i))
    witnesses = {}
    ok = True
    for v in range(X.n_cells(0)):
        cand = None
        for (k, i) in incident[v]:
            imgs = tuple(sorted({vm[u] for u in X.simplices[k][i]}))
            t_idx = tauC.simplex_index(imgs)
            carrier = tau.carrier[(len(imgs) - 1, t_idx)]
            cv = set(host.simplices[carrier[0]][carrier[1]])
            cand = cv if cand is None else cand & cv
            if not cand:
                break
        if cand:
            witnesses[v] = min(cand)
        else:
            ok = False
            witnesses[v] = None
    return ok, witnesses


def build_tower(params, depth, size_guard=DEFAULT_SIZE_GUARD):
    """Recursive face-replacement tower, depth+1 stages.

    Stage 0 is M(p, q, k); stage j swallows every 2-simplex of stage j-1
    with a copy of the level k-j bundle.  Every stage carries the simplicial
    projection to its predecessor and the per-stage 1/2 bound.
    """
    if depth >= params.k:
        raise InvalidParams("tower depth must stay below the level k")
    bundle = build_Mk(params, size_guard=size_guard)
    stages = [TowerStage(complex=bundle.complex, projection=None,
                         lipschitz_bound=Fraction(1, 2), level=0,
                         bundle=bundle)]
    for j in range(1, depth + 1):
        sub_params = MkParams(params.p, params.q, params.k - j,
                              params.edge_scale, params.reduce)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inner = build_Mk(sub_params, size_guard=size_guard)
        host = stages[-1].complex
        stage, tau, tau_map, projection = replace_faces(
            host, inner, size_guard=size_guard)
        stages.append(TowerStage(
            complex=stage, projection=projection, tau=tau, tau_map=tau_map,
            lipschitz_bound=Fraction(1, 2), level=j, bundle=inner,
        ))
    return stages


# -- fiber products over light maps -------------------------------------------


def is_light(f):
    """A simplicial map is light when injective on every closed simplex."""
    if f.vertex_map is None:
        return False
    for k in range(f.source.dim + 1):
        for verts in f.source.simplices[k]:
            images = {f.vertex_map[v] for v in verts}
            if len(images) != len(verts):
                return False
    return True


@dataclass
class PullbackResult:
    """Fiber product along a light map, with both projections.

    ``proj_fiber`` lands in the pulled-back subdivision of the light side
    (a genuine simplicial map; its carrier data reaches the undivided
    complex), ``proj_base`` is the light projection to the other factor.
    """

    complex: CellComplex
    proj_base: CellMap
    proj_fiber: CellMap
    fiber_subdivision: Subdivision
    pair_index: dict

    @property
    def fiber_map(self):
        return self.proj_fiber


def pullback_subdivision(chi, tau):
    """Pull the subdivision tau of the target back through a light map.

    For every cell m of the source with chi(m) equal to the carrier of a
    tau-cell, the tau-cell lifts into m; lifts glue along shared faces.
    Returns a Subdivision of chi's source whose complex carries the induced
    light map to tau (stored in the ``apexes`` slot as a vertex map).
    """
    M, Delta = chi.source, chi.target
    tauC = tau.complex
    if not is_light(chi):
        raise NotLight("the map to the simplex must be injective on simplices")
    # source cells by their exact image simplex
    by_image = {}
    for k in range(M.dim + 1):
        for i, verts in enumerate(M.simplices[k]):
            img = tuple(sorted(chi.vertex_map[v] for v in verts))
            by_image.setdefault(img, []).append((k, i))
    verts_new = []
    vert_index = {}
    for w in range(tauC.n_cells(0)):
        cw = tau.carrier[(0, w)]
        c_img = tuple(sorted(Delta.simplices[cw[0]][cw[1]]))
        for m in by_image.get(c_img, []):
            vert_index[(w, m)] = len(verts_new)
            verts_new.append((w, m))
    simplices = []
    carrier = {}
    for k in range(tauC.dim + 1):
        for t, tverts in enumerate(tauC.simplices[k]):
            ct = tau.carrier[(k, t)]
            c_img = tuple(sorted(Delta.simplices[ct[0]][ct[1]]))
            for m in by_image.get(c_img, []):
                # face of m over each vertex carrier, through chi's iso
                mk, mi = m
                mverts = M.simplices[mk][mi]
                inv = {chi.vertex_map[v]: v for v in mverts}
                lift = []
                for w in tverts:
                    cw = tau.carrier[(0, w)]
                    wv = Delta.simplices[cw[0]][cw[1]]
                    sub_m = tuple(sorted(inv[x] for x in wv))
                    face = M.simplex_index(sub_m)
                    lift.append(vert_index[(w, (len(sub_m) - 1, face))])
                simplices.append(tuple(sorted(lift)))
    tau_M = simplicial_complex(sorted(set(simplices)))
    for k in range(tau_M.dim + 1):
        for i, verts in enumerate(tau_M.simplices[k]):
            cells = [verts_new[v][1] for v in verts]
            top = max(cells)
            carrier[(k, i)] = top
    chi_tilde_vm = [verts_new[v][0] for v in range(len(verts_new))]
    sub = Subdivision(tau_M, M, carrier)
    sub.apexes = chi_tilde_vm  # vertex map of the induced light map to tau
    return sub, verts_new, vert_index


def pullback_complex(chi, phi, tau, size_guard=DEFAULT_SIZE_GUARD):
    """Fiber product of a light map chi: M -> simplex and phi: M' -> tau.

    ``tau`` is the Subdivision of chi's target that phi maps into.  The
    result projects simplicially onto M' (light, since chi is) and onto the
    pulled-back subdivision of M.
    """
    if not is_light(chi):
        raise NotLight("chi must be light (injective on closed simplices)")
    if phi.vertex_map is None:
        raise NotSimplicial("phi must be simplicial")
    sub, verts_new, vert_index = pullback_subdivision(chi, tau)
    tau_M = sub.complex
    chi_vm = sub.apexes
    Mp = phi.source
    # tau_M simplices indexed by image vertex set in tau
    by_img = {}
    for k in range(tau_M.dim + 1):
        for i, verts in enumerate(tau_M.simplices[k]):
            img = tuple(sorted({chi_vm[v] for v in verts}))
            by_img.setdefault(img, []).append((k, i))
    pair_verts = []
    pair_index = {}
    for v in range(Mp.n_cells(0)):
        w = phi.vertex_map[v]
        for (kk, i) in by_img.get((w,), []):
            x = tau_M.simplices[0][i][0] if kk == 0 else None
            if kk == 0:
                pair_index[(v, x)] = len(pair_verts)
                pair_verts.append((v, x))
    est = 0
    simplices = []
    for k in range(Mp.dim + 1):
        for i, verts in enumerate(Mp.simplices[k]):
            img = tuple(sorted({phi.vertex_map[v] for v in verts}))
            for (kk, t) in by_img.get(img, []):
                if kk != len(img) - 1:
                    continue
                tverts = tau_M.simplices[kk][t]
                inv = {chi_vm[x]: x for x in tverts}
                cand = tuple(
                    sorted(pair_index[(v, inv[phi.vertex_map[v]])] for v in verts)
                )
                simplices.append(cand)
                est += 1
                if est > size_guard:
                    raise SizeGuardExceeded(
                        f"pullback exceeds {size_guard} simplices"
                    )
    P = simplicial_complex(sorted(set(simplices)))
    # projections: first coordinate to M', second to tau_M
    vm_base = [pair_verts[t][0] for t in range(len(pair_verts))]
    vm_fiber = [pair_verts[t][1] for t in range(len(pair_verts))]
    # P's vertices were renumbered by simplicial_complex? No: vertices are
    # the pair indices used in the simplices, dense by construction order
    proj_base = CellMap.from_vertex_map(P, Mp, vm_base)
    proj_fiber = CellMap.from_vertex_map(P, tau_M, vm_fiber)
    if not is_light(proj_base):
        raise NotLight("fiber projection lost lightness (internal error)")
    return PullbackResult(
        complex=P, proj_base=proj_base, proj_fiber=proj_fiber,
        fiber_subdivision=sub, pair_index=pair_index,
    )


def pullback_section(result, chi, phi, tau, top_cell):
    """Section of the base projection induced by a section of chi.

    ``top_cell``: index of a top simplex of chi's source mapped isomorphically
    onto the whole simplex (any one defines a section s with chi . s = id).
    Returns the vertex map M' -> P of the induced section.
    """
    M = chi.source
    n = M.dim
    verts = M.simplices[n][top_cell]
    if len({chi.vertex_map[v] for v in verts}) != n + 1:
        raise NotLight("chosen cell is not a sheet over the whole simplex")
    inv = {chi.vertex_map[v]: v for v in verts}
    tau_M = result.fiber_subdivision.complex
    chi_vm = result.fiber_subdivision.apexes
    # tau_M vertices inside the chosen sheet: carrier is a face of top_cell
    sheet_vertex = {}
    sheet_faces = set()
    for r in range(1, n + 2):
        from itertools import combinations

        for sub_v in combinations(sorted(verts), r):
            idx = M.simplex_index(sub_v)
            sheet_faces.add((r - 1, idx))
    for x in range(tau_M.n_cells(0)):
        cell = result.fiber_subdivision.carrier[(0, x)]
        if cell in sheet_faces:
            sheet_vertex[chi_vm[x]] = x
    vm = []
    Mp = phi.source
    for v in range(Mp.n_cells(0)):
        w = phi.vertex_map[v]
        x = sheet_vertex.get(w)
        if x is None:
            raise NoValidAssignment("section sheet misses a tau vertex")
        vm.append(result.pair_index[(v, x)])
    return CellMap.from_vertex_map(Mp, result.complex, vm)


def dimension_coloring(sd):
    """The light map of a barycentric subdivision: color by carrier dimension."""
    X = sd.complex
    n = sd.base.dim
    target = simplicial_complex([tuple(range(n + 1))])
    vm = [sd.carrier[(0, v)][0] for v in range(X.n_cells(0))]
    return CellMap.from_vertex_map(X, target, vm)


def build_Y_stage(params, stages, size_guard=DEFAULT_SIZE_GUARD):
    """Finite initial segment of the iterated pull-back tower.

    Stage 1 is the level-1 bundle; stage t is the fiber product of the
    barycentrically subdivided level-t bundle (with its dimension-coloring
    light map) against the previous stage's triangle-valued map.  Each stage
    records the simplicial projection to its predecessor and the per-stage
    mesh bound 1/2 (composites are (1/2)^(t-1)-Lipschitz per simplex).
    """
    if stages < 1:
        raise InvalidParams("need at least one stage")
    base_params = MkParams(params.p, params.q, 1, params.edge_scale,
                           params.reduce)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b1 = build_Mk(base_params, size_guard=size_guard)
    out = [TowerStage(complex=b1.complex, projection=None,
                      lipschitz_bound=Fraction(1, 2), level=1, bundle=b1)]
    phi_prev = b1.phi
    tau_prev = b1.tau
    for t in range(2, stages + 1):
        lvl_params = MkParams(params.p, params.q, t, params.edge_scale,
                              params.reduce)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bt = build_Mk(lvl_params, size_guard=size_guard)
        from .complexes import barycentric_subdivision

        sd = barycentric_subdivision(bt.complex)
        chi = dimension_coloring(sd)
        result = pullback_complex(chi, phi_prev, tau_prev,
                                  size_guard=size_guard)
        # triangle-valued map of the new stage: compose with the projection
        vm = [None] * result.complex.n_cells(0)
        for (v, x), idx in result.pair_index.items():
            vm[idx] = phi_prev.vertex_map[v]
        phi_t = CellMap.from_vertex_map(result.complex, tau_prev.complex, vm)
        stage = TowerStage(
            complex=result.complex, projection=result.proj_base,
            lipschitz_bound=Fraction(1, 2) ** (t - 1), level=t,
            bundle=bt, tau=tau_prev, tau_map=phi_t,
            fiber_subdivision=result.fiber_subdivision,
            fiber_map=result.proj_fiber,
        )
        out.append(stage)
        phi_prev = phi_t
    return out


def simplicial_ost_witnesses(proj):
    """Open-star refinement witnesses for a plainly simplicial projection.

    For a simplicial map, proj(Ost(v)) lands in Ost(proj(v)); this verifies
    the containment cell by cell and returns (ok, {vertex: witness}).
    """
    X = proj.source
    vm = proj.vertex_map
    ok = True
    witnesses = {}
    for k in range(X.dim + 1):
        for i in range(X.n_cells(k)):
            verts = X.simplices[k][i]
            imgs = {vm[v] for v in verts}
            for v in verts:
                if vm[v] not in imgs:
                    ok = False
    for v in range(X.n_cells(0)):
        witnesses[v] = vm[v]
    return ok, witnesses


def staircase_prism_triangulation(prod):
    """Simplicial triangulation of a 2-dim base times an interval.

    Standard staircase scheme per prism; provided for completeness (the
    product certificates run on the untriangulated prism structure).
    """
    X, n = prod.base, prod.n
    if not X.is_simplicial or X.dim > 2:
        raise NotSimplicial("staircase triangulation needs a 2-dim base")
    n0 = X.n_cells(0)

    def v_at(v, l):
        return l * n0 + v

    simplices = []
    for l in range(n + 1):
        for k in range(X.dim + 1):
            for verts in X.simplices[k]:
                simplices.append(tuple(v_at(v, l) for v in verts))
    for l in range(n):
        for k in range(1, X.dim + 1):
            for verts in X.simplices[k]:
                vs = sorted(verts)
                for t in range(len(vs)):
                    bottom = [v_at(v, l) for v in vs[: t + 1]]
                    top = [v_at(v, l + 1) for v in vs[t:]]
                    simplices.append(tuple(sorted(bottom + top)))
    return simplicial_complex(sorted(set(simplices)))
