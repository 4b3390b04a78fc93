"""Piecewise-Euclidean 2-complexes from a small text format.

A complex is a set of convex Euclidean polygons (cells) whose sides are
glued along shared edges by length-preserving identifications. The file
format has three sections:

    vertices        one vertex id per line
    edges           id tail head length
    cells           blocks of:  cell ID / polygon x,y x,y ... / word tok ...

A word token is an edge id, with a trailing dash for the side that runs
against the edge direction (`a-`). Side k of the polygon runs from polygon
point k to point k+1, counterclockwise; its length must equal the named
edge's length, and the polygon corners must land on consistent vertices.

Edges may bound one side (free boundary), two (surface point) or more
(branch edge). The nonpositive-curvature certification is the classical
link test: points in open cells and open edges always satisfy it, so the
only check is that every vertex link, a weighted multigraph with one node
per incident edge-end and one arc per cell corner, has girth at least 2 pi.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Isometry, angle_between, validate_cell_polygon
from .tolerances import GEOM_TOL

TWO_PI = 2.0 * math.pi


class ComplexFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    eid: str
    tail: str
    head: str
    length: float


@dataclass(frozen=True)
class Slot:
    """One incidence of a cell side with an edge."""

    cell: str
    side: int

    def key(self):
        return (self.cell, self.side)


@dataclass(frozen=True)
class Point:
    """A point of the complex, in the local chart of one cell."""

    cell: str
    x: float
    y: float

    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class PolygonShape:
    cid: str
    points: np.ndarray
    word: list
    angles: np.ndarray = field(init=False)
    side_len: np.ndarray = field(init=False)
    corner_vertex: list = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.angles = validate_cell_polygon(self.points)
        n = len(self.points)
        if len(self.word) != n:
            raise ComplexFormatError(
                f"cell {self.cid}: {n} sides but {len(self.word)} word tokens"
            )
        diffs = np.roll(self.points, -1, axis=0) - self.points
        self.side_len = np.hypot(diffs[:, 0], diffs[:, 1])

    @property
    def n_sides(self) -> int:
        return len(self.points)

    def side_points(self, i: int):
        """Side i endpoints in polygon order (counterclockwise)."""
        return self.points[i], self.points[(i + 1) % self.n_sides]

    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


class LinkGraph:
    """Weighted multigraph of directions at a vertex.

    Nodes are edge-ends (edge id, end) with end 0 = tail, 1 = head; arcs are
    cell corners weighted by their interior angle. Arc offsets run from the
    node of the corner's incoming side (toward polygon point i-1) to the
    node of its outgoing side (toward point i+1).
    """

    def __init__(self, vertex: str):
        self.vertex = vertex
        self.nodes: list = []
        self._index: dict = {}
        self.arcs: list = []  # (ua, ub, weight, corner_key)
        self._adj = None

    def node_id(self, node) -> int:
        if node not in self._index:
            self._index[node] = len(self.nodes)
            self.nodes.append(node)
        return self._index[node]

    def add_corner(self, node_in, node_out, angle: float, corner_key):
        ua = self.node_id(node_in)
        ub = self.node_id(node_out)
        self.arcs.append((ua, ub, float(angle), corner_key))
        self._adj = None

    def adjacency(self):
        if self._adj is None:
            adj = [[] for _ in self.nodes]
            for k, (ua, ub, w, _) in enumerate(self.arcs):
                adj[ua].append((ub, w, k))
                adj[ub].append((ua, w, k))
            self._adj = adj
        return self._adj

    def _dijkstra(self, src: int, skip_arc: int = -1):
        adj = self.adjacency()
        n = len(self.nodes)
        dist = [math.inf] * n
        prev = [(-1, -1)] * n  # (prev node, arc index)
        dist[src] = 0.0
        pq = [(0.0, src)]
        while pq:
            d, u = heapq.heappop(pq)
            if d > dist[u]:
                continue
            for v, w, k in adj[u]:
                if k == skip_arc:
                    continue
                nd = d + w
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = (u, k)
                    heapq.heappush(pq, (nd, v))
        return dist, prev

    def girth(self) -> float:
        """Length of the shortest cycle; inf for a forest."""
        best = math.inf
        for k, (ua, ub, w, _) in enumerate(self.arcs):
            if ua == ub:
                best = min(best, w)
                continue
            dist, _ = self._dijkstra(ua, skip_arc=k)
            best = min(best, w + dist[ub])
        return best

    def is_circle(self) -> bool:
        """True when the link is a single cycle (a surface vertex)."""
        if not self.arcs or not self.nodes:
            return False
        deg = [0] * len(self.nodes)
        for ua, ub, _, _ in self.arcs:
            deg[ua] += 1
            deg[ub] += 1
        if any(d != 2 for d in deg):
            return False
        # connected: walk arcs from node 0
        seen = {0}
        stack = [0]
        adj = self.adjacency()
        while stack:
            u = stack.pop()
            for v, _, _ in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)

    def total_angle(self) -> float:
        return sum(w for _, _, w, _ in self.arcs)

    def distance_points(self, p, q):
        """Link distance between two link points, with the realizing path.

        A link point is ('node', (edge, end)) or ('corner', corner_key,
        offset). Returns (distance, steps); steps is a list of
        (corner_key, offset_from, offset_to) arcs traversed in order.
        Distance is inf when the points are in different link components.
        """
        splits = {}
        for label, pt in (("p", p), ("q", q)):
            if pt[0] == "corner":
                splits.setdefault(pt[1], []).append((pt[2], label))

        # rebuild the graph with query points spliced into their arcs
        nodes = list(self.nodes)
        index = dict(self._index)
        arcs = []
        arc_corner = []
        qnode = {}

        def add(u, v, w, ck, off_u, off_v):
            arcs.append((u, v, w))
            arc_corner.append((ck, off_u, off_v))

        for ua, ub, w, ck in self.arcs:
            if ck in splits:
                pts = sorted(splits[ck])
                last_node, last_off = ua, 0.0
                for off, label in pts:
                    if off < -GEOM_TOL or off > w + GEOM_TOL:
                        raise ValueError(
                            f"offset {off} outside corner of angle {w}"
                        )
                    nid = len(nodes)
                    nodes.append(("query", label))
                    add(last_node, nid, max(0.0, off - last_off), ck, last_off, off)
                    qnode[label] = nid
                    last_node, last_off = nid, off
                add(last_node, ub, max(0.0, w - last_off), ck, last_off, w)
            else:
                add(ua, ub, w, ck, 0.0, w)

        for label, pt in (("p", p), ("q", q)):
            if pt[0] == "node":
                nid = index.get(pt[1])
                if nid is None:
                    raise ValueError(f"{pt[1]} is not a node of this link")
                qnode[label] = nid

        n = len(nodes)
        adj = [[] for _ in range(n)]
        for k, (u, v, w) in enumerate(arcs):
            adj[u].append((v, w, k, False))
            adj[v].append((u, w, k, True))
        src, dst = qnode["p"], qnode["q"]
        dist = [math.inf] * n
        prev = [None] * n
        dist[src] = 0.0
        pq = [(0.0, src)]
        while pq:
            d, u = heapq.heappop(pq)
            if d > dist[u]:
                continue
            if u == dst:
                break
            for v, w, k, rev in adj[u]:
                nd = d + w
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = (u, k, rev)
                    heapq.heappush(pq, (nd, v))
        if math.isinf(dist[dst]):
            return math.inf, []
        steps = []
        v = dst
        while v != src:
            u, k, rev = prev[v]
            ck, off_u, off_v = arc_corner[k]
            if rev:
                steps.append((ck, off_v, off_u))
            else:
                steps.append((ck, off_u, off_v))
            v = u
        steps.reverse()
        # drop zero-length stubs from splicing
        steps = [s for s in steps if abs(s[1] - s[2]) > GEOM_TOL]
        return dist[dst], steps


class ComplexSpec:
    """A parsed and validated complex with derived gluing tables."""

    def __init__(self, vertices, edges, cells):
        self.vertex_ids = sorted(vertices)
        self.edges = dict(sorted(edges.items()))
        self.cells = dict(sorted(cells.items()))
        self._validate_refs()
        self._resolve_corners()
        self.edge_slots = self._build_slots()
        self._links = None

    # -- construction checks ------------------------------------------------

    def _validate_refs(self):
        vs = set(self.vertex_ids)
        for e in self.edges.values():
            if e.tail not in vs or e.head not in vs:
                raise ComplexFormatError(
                    f"edge {e.eid} references undeclared vertex"
                )
            if e.length <= GEOM_TOL:
                raise ComplexFormatError(f"edge {e.eid} has nonpositive length")
        for cell in self.cells.values():
            for i, (eid, sign) in enumerate(cell.word):
                if eid not in self.edges:
                    raise ComplexFormatError(
                        f"cell {cell.cid} side {i}: unknown edge {eid}"
                    )
                want = self.edges[eid].length
                got = cell.side_len[i]
                if abs(got - want) > GEOM_TOL * max(1.0, want):
                    raise ComplexFormatError(
                        f"cell {cell.cid} side {i}: polygon side length "
                        f"{got:.12g} does not match edge {eid} length {want:.12g}"
                    )

    def _resolve_corners(self):
        for cell in self.cells.values():
            n = cell.n_sides
            corners = []
            for i in range(n):
                eid, sign = cell.word[i]
                e = self.edges[eid]
                start_v = e.tail if sign > 0 else e.head
                peid, psign = cell.word[i - 1]
                pe = self.edges[peid]
                prev_end_v = pe.head if psign > 0 else pe.tail
                if start_v != prev_end_v:
                    raise ComplexFormatError(
                        f"cell {cell.cid} corner {i}: side {i - 1} ends at "
                        f"{prev_end_v} but side {i} starts at {start_v}"
                    )
                corners.append(start_v)
            cell.corner_vertex = corners

    def _build_slots(self):
        slots = {eid: [] for eid in self.edges}
        for cid in self.cells:
            cell = self.cells[cid]
            for i, (eid, _) in enumerate(cell.word):
                slots[eid].append(Slot(cid, i))
        for eid in slots:
            slots[eid].sort(key=lambda s: s.key())
        return slots

    # -- simple accessors ----------------------------------------------------

    def cell(self, cid: str) -> PolygonShape:
        return self.cells[cid]

    def side_sign(self, slot: Slot) -> int:
        return self.cells[slot.cell].word[slot.side][1]

    def side_edge(self, slot: Slot) -> str:
        return self.cells[slot.cell].word[slot.side][0]

    def min_edge_length(self) -> float:
        return min(e.length for e in self.edges.values())

    def branch_edges(self):
        return sorted(
            eid for eid, slots in self.edge_slots.items() if len(slots) >= 3
        )

    def boundary_edges(self):
        return sorted(
            eid for eid, slots in self.edge_slots.items() if len(slots) == 1
        )

    def side_param_points(self, slot: Slot):
        """Side endpoints ordered by edge parameter (t=0 at the edge tail)."""
        p0, p1 = self.cells[slot.cell].side_points(slot.side)
        if self.side_sign(slot) > 0:
            return p0, p1
        return p1, p0

    def mates(self, slot: Slot):
        """Other slots glued along the same edge, sorted."""
        eid = self.side_edge(slot)
        return [s for s in self.edge_slots[eid] if s != slot]

    def transition(self, from_slot: Slot, to_slot: Slot) -> Isometry:
        """Isometry placing to_slot's cell across from_slot's side.

        Maps to_slot cell-local coordinates into from_slot cell-local
        coordinates, matching edge parameters; the handedness is chosen so
        the two cell interiors land on opposite sides of the shared side.
        """
        if self.side_edge(from_slot) != self.side_edge(to_slot):
            raise ValueError("slots are not glued to the same edge")
        a0, a1 = self.side_param_points(from_slot)
        b0, b1 = self.side_param_points(to_slot)
        flip = self.side_sign(from_slot) == self.side_sign(to_slot)
        return Isometry.from_segment_map(b0, b1, a0, a1, flip=flip)

    # -- links and curvature --------------------------------------------------

    def corner_link_nodes(self, cid: str, i: int):
        """(node_in, node_out) edge-end link nodes of corner i of cell cid.

        node_in is the direction along side i-1 toward polygon point i-1;
        node_out is the direction along side i toward point i+1.
        """
        cell = self.cells[cid]
        peid, psign = cell.word[i - 1]
        eid, sign = cell.word[i]
        # a node (e, end) is the direction from the vertex into edge e when
        # the vertex sits at that end; side i-1 with sign + arrives at its
        # head, so the vertex is the head end, and dually for side i
        node_in = (peid, 1) if psign > 0 else (peid, 0)
        node_out = (eid, 0) if sign > 0 else (eid, 1)
        return node_in, node_out

    def link(self, vertex: str) -> LinkGraph:
        if self._links is None:
            self._links = {}
            for v in self.vertex_ids:
                self._links[v] = LinkGraph(v)
            for cid in self.cells:
                cell = self.cells[cid]
                for i in range(cell.n_sides):
                    v = cell.corner_vertex[i]
                    node_in, node_out = self.corner_link_nodes(cid, i)
                    self._links[v].add_corner(
                        node_in, node_out, cell.angles[i], (cid, i)
                    )
        return self._links[vertex]

    def corner_offset(self, cid: str, i: int, direction) -> float:
        """Link offset of a direction vector inside corner i of cell cid.

        Offsets run from the incoming-side node (toward point i-1); the
        direction must lie within the corner wedge.
        """
        cell = self.cells[cid]
        prev_leg = cell.points[i - 1] - cell.points[i]
        ang = angle_between(prev_leg, direction)
        if ang > cell.angles[i] + 1e-7:
            raise ValueError("direction outside corner wedge")
        return min(ang, cell.angles[i])

    def vertex_points(self):
        """Representative Point per vertex: lexicographically first corner."""
        reps = {}
        for cid in self.cells:
            cell = self.cells[cid]
            for i in range(cell.n_sides):
                v = cell.corner_vertex[i]
                if v not in reps:
                    reps[v] = Point(cid, float(cell.points[i][0]), float(cell.points[i][1]))
        return reps


@dataclass
class CurvatureRow:
    vertex: str
    girth: float
    is_circle: bool
    total_angle: float
    ok: bool


@dataclass
class CurvatureReport:
    ok: bool
    rows: list

    def summary(self) -> str:
        lines = []
        for r in self.rows:
            g = "inf" if math.isinf(r.girth) else f"{r.girth:.6f}"
            kind = "circle" if r.is_circle else "graph"
            lines.append(
                f"vertex {r.vertex}: link girth {g} ({kind}, total angle "
                f"{r.total_angle:.6f}) {'ok' if r.ok else 'VIOLATION'}"
            )
        lines.append("curvature check: " + ("pass" if self.ok else "FAIL"))
        return "\n".join(lines)


def check_nonpositive_curvature(spec: ComplexSpec) -> CurvatureReport:
    """Certify the link condition at every vertex.

    Interior points of cells are locally Euclidean, and an edge-interior
    point's link is a union of arcs of length pi joining the two edge
    directions, so cycles there already measure at least 2 pi; vertex links
    are the only place the condition can fail.
    """
    rows = []
    ok = True
    for v in spec.vertex_ids:
        lk = spec.link(v)
        g = lk.girth()
        row_ok = g >= TWO_PI - GEOM_TOL
        ok = ok and row_ok
        rows.append(CurvatureRow(v, g, lk.is_circle(), lk.total_angle(), row_ok))
    return CurvatureReport(ok, rows)


# -- parsing -----------------------------------------------------------------


def _parse_token(tok: str):
    if tok.endswith("-"):
        return tok[:-1], -1
    return tok, 1


def parse_complex(text: str) -> ComplexSpec:
    """Parse the text format described in the module docstring."""
    vertices = []
    edges = {}
    cells = {}
    section = None
    cur_id = None
    cur_poly = None
    cur_word = None
    line_no = 0

    def fail(msg):
        raise ComplexFormatError(f"line {line_no}: {msg}")

    def close_cell():
        nonlocal cur_id, cur_poly, cur_word
        if cur_id is None:
            return
        if cur_poly is None or cur_word is None:
            fail(f"cell {cur_id} needs both a polygon and a word line")
        if cur_id in cells:
            fail(f"duplicate cell id {cur_id}")
        try:
            cells[cur_id] = PolygonShape(cur_id, cur_poly, cur_word)
        except (ValueError, ComplexFormatError) as exc:
            fail(f"cell {cur_id}: {exc}")
        cur_id = cur_poly = cur_word = None

    for raw in text.splitlines():
        line_no += 1
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("vertices", "edges", "cells") and len(parts) == 1:
            close_cell()
            section = parts[0]
            continue
        if section == "vertices":
            if len(parts) != 1:
                fail("vertex lines hold a single id")
            if parts[0] in vertices:
                fail(f"duplicate vertex id {parts[0]}")
            vertices.append(parts[0])
        elif section == "edges":
            if len(parts) != 4:
                fail("edge lines are: id tail head length")
            eid, tail, head, raw_len = parts
            if eid in edges:
                fail(f"duplicate edge id {eid}")
            try:
                length = float(raw_len)
            except ValueError:
                fail(f"bad edge length {raw_len!r}")
            edges[eid] = Edge(eid, tail, head, length)
        elif section == "cells":
            if parts[0] == "cell":
                close_cell()
                if len(parts) != 2:
                    fail("cell lines are: cell ID")
                cur_id = parts[1]
            elif parts[0] == "polygon":
                if cur_id is None:
                    fail("polygon line outside a cell block")
                pts = []
                for chunk in parts[1:]:
                    xy = chunk.split(",")
                    if len(xy) != 2:
                        fail(f"bad polygon point {chunk!r}")
                    try:
                        pts.append((float(xy[0]), float(xy[1])))
                    except ValueError:
                        fail(f"bad polygon point {chunk!r}")
                cur_poly = np.array(pts)
            elif parts[0] == "word":
                if cur_id is None:
                    fail("word line outside a cell block")
                cur_word = [_parse_token(t) for t in parts[1:]]
            else:
                fail(f"unexpected line in cells section: {parts[0]!r}")
        else:
            fail(f"content before any section header: {parts[0]!r}")
    line_no += 1
    close_cell()
    if not cells:
        raise ComplexFormatError("complex has no cells")
    return ComplexSpec(vertices, edges, cells)


def load_complex(path) -> ComplexSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_complex(fh.read())


def bundled_complex(name: str) -> ComplexSpec:
    """Load one of the complexes shipped inside the package."""
    from importlib import resources

    ref = resources.files("catzero.data").joinpath(name + ".cx")
    return parse_complex(ref.read_text(encoding="utf-8"))
