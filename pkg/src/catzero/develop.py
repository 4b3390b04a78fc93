"""Developing balls of the universal cover of a nonpositively curved complex.

A `DevelopedBall` is a finite, simply connected region of the universal
cover, built by repeatedly gluing copies of the spec cells ("instances")
across edge instances.  The bookkeeping exploits that covering projections
restrict to isomorphisms on vertex links: each vertex instance carries a
partial copy of its spec link (`node_map` for edge-end directions, `arcs`
for cell corners), discovered progressively.  When a newly glued cell turns
a corner that is already known, the adjacent side reuses the existing edge
instance instead of creating a fresh one, so wedges close up exactly and no
edge ever needs to be merged after the fact.

Growth is closest-first.  Vertex instances within the requested radius have
their full star glued in one contiguous sweep around the link, which keeps
every vertex's known wedge connected; edges whose interior is reachable but
whose endpoints are not (long edges) admit single-cell gluings.  A final
exact pass measures straightened geodesic distances to the remaining
frontier edges and keeps growing until everything within the radius is
present.  Inside the grown region local geodesics are global ones, so the
exact distances used for classification are true distances of the cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexes import ComplexSpec, LinkGraph, Point, Slot
from .geometry import point_in_convex
from .paths import SubdivisionGraph, shortest_geodesic
from .tolerances import GEODESIC_PITCH, GEOM_TOL


class DevelopError(RuntimeError):
    pass


@dataclass
class _Cell:
    iid: int
    cell: str
    sides: dict  # side index -> eiid
    corner_vid: dict  # corner index -> viid (resolve through find())


@dataclass
class _Edge:
    eiid: int
    edge: str
    slots: dict  # spec Slot -> iid or None
    tail: int  # viid (resolve through find())
    head: int


@dataclass
class _Vertex:
    viid: int
    vertex: str
    node_map: dict = field(default_factory=dict)  # spec (edge, end) -> eiid
    arcs: dict = field(default_factory=dict)  # spec (cell, corner) -> iid


class DevelopedBall:
    """A developed region of the universal cover around a base point.

    After construction, `placed` lists the cell instances whose distance to
    the base point is at most `radius`; the region itself may extend a bit
    further so that those distances are exact.
    """

    def __init__(self, spec: ComplexSpec, base: Point, radius: float, h=None):
        if base.cell not in spec.cells:
            raise ValueError(f"unknown base cell {base.cell!r}")
        cell = spec.cell(base.cell)
        if not point_in_convex(cell.points, base.xy(), tol=GEOM_TOL):
            raise ValueError("base point lies outside its cell")
        self.spec = spec
        self.base = base
        self.radius = float(radius)
        self.h = float(h) if h else GEODESIC_PITCH * spec.min_edge_length()
        self._cells = {}
        self._edges = {}
        self._verts = {}
        self._parent = {}
        self._merges = []  # (kept, dropped) in order
        self._link_cache = {}
        self._saturated = set()
        self.sub = SubdivisionGraph(self, self.h)
        self._field_cache = None
        self.base_iid = self._instantiate(base.cell, {}, {})
        self.placed = []
        self.cell_min_dist = {}

    # -- union-find over vertex instances -----------------------------------

    def find(self, viid: int) -> int:
        p = self._parent
        root = viid
        while p[root] != root:
            root = p[root]
        while p[viid] != root:
            p[viid], viid = root, p[viid]
        return root

    def _merge_vertices(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        keep, drop = (ra, rb) if ra < rb else (rb, ra)
        vk, vd = self._verts[keep], self._verts[drop]
        if vk.vertex != vd.vertex:
            raise DevelopError(
                "attempt to merge instances of different vertices"
            )
        for nd, ei in vd.node_map.items():
            if vk.node_map.get(nd, ei) != ei:
                raise DevelopError(
                    f"link direction {nd} maps to two edge instances"
                )
            vk.node_map[nd] = ei
        for ak, iid in vd.arcs.items():
            if vk.arcs.get(ak, iid) != iid:
                raise DevelopError(f"corner {ak} registered twice")
            vk.arcs[ak] = iid
        self._parent[drop] = keep
        self._merges.append((keep, drop))
        self.sub.merge_vertex_nodes(keep, drop)
        self._link_cache.clear()
        self._field_cache = None
        return keep

    # -- provider API used by the path machinery -----------------------------

    def instance_cell(self, iid: int) -> str:
        return self._cells[iid].cell

    def instance_side_edge(self, iid: int, side: int) -> int:
        return self._cells[iid].sides[side]

    def edge_record(self, eiid: int):
        rec = self._edges[eiid]
        return rec.edge, rec.slots, self.find(rec.tail), self.find(rec.head)

    def vertex_arcs(self, vid: int):
        rec = self._verts[self.find(vid)]
        return sorted((iid, k) for (_, k), iid in rec.arcs.items())

    def instance_corner_at(self, iid: int, vid: int) -> int:
        vid = self.find(vid)
        cell = self._cells[iid]
        hits = [k for k, v in cell.corner_vid.items() if self.find(v) == vid]
        if len(hits) != 1:
            raise DevelopError(
                f"instance {iid} meets vertex instance {vid} "
                f"{len(hits)} times"
            )
        return hits[0]

    def link_instance(self, vid: int) -> LinkGraph:
        vid = self.find(vid)
        lk = self._link_cache.get(vid)
        if lk is None:
            rec = self._verts[vid]
            lk = LinkGraph(rec.vertex)
            for (cid, k), iid in sorted(rec.arcs.items(), key=lambda t: t[1]):
                node_in, node_out = self.spec.corner_link_nodes(cid, k)
                lk.add_corner(
                    (rec.node_map[node_in], node_in[1]),
                    (rec.node_map[node_out], node_out[1]),
                    self.spec.cell(cid).angles[k],
                    (iid, k),
                )
            self._link_cache[vid] = lk
        return lk

    def instances_of_cell(self, cid: str):
        return sorted(i for i, c in self._cells.items() if c.cell == cid)

    def sorted_instances(self):
        return sorted(self._cells)

    def vertex_instances(self):
        """Canonical vertex instance ids, sorted."""
        return sorted(v for v in self._verts if self.find(v) == v)

    def edge_instances(self):
        return sorted(self._edges)

    def vertex_corner_cycle(self, vid: int):
        """Corners around a vertex instance in link order.

        Only meaningful when the instance link is a single circle; returns
        a list of (iid, corner) starting from the smallest.
        """
        lk = self.link_instance(vid)
        if not lk.is_circle():
            raise DevelopError("vertex link is not a circle")
        succ = {}
        for ua, ub, _, ck in lk.arcs:
            succ.setdefault(ua, []).append((ub, ck))
            succ.setdefault(ub, []).append((ua, ck))
        start_ck = min(ck for _, _, _, ck in lk.arcs)
        order = []
        arc = next((ua, ub, ck) for ua, ub, _, ck in lk.arcs if ck == start_ck)
        node = arc[1]
        order.append(start_ck)
        prev_ck = start_ck
        while True:
            nxt = [(nb, ck) for nb, ck in succ[node] if ck != prev_ck]
            node, ck = nxt[0]
            if ck == start_ck:
                break
            order.append(ck)
            prev_ck = ck
        return order

    # -- construction ---------------------------------------------------------

    def _new_vertex(self, vertex: str) -> int:
        viid = len(self._verts)
        self._verts[viid] = _Vertex(viid, vertex)
        self._parent[viid] = viid
        return viid

    def _new_edge(self, eid: str, tail: int, head: int) -> int:
        eiid = len(self._edges)
        slots = {s: None for s in self.spec.edge_slots[eid]}
        self._edges[eiid] = _Edge(eiid, eid, slots, tail, head)
        return eiid

    def _adopt(self, cid, n, side_e, corner_v, j, eiid2):
        """Attach side j of the cell being glued to existing instance eiid2."""
        slot = Slot(cid, j)
        rec = self._edges[eiid2]
        if rec.edge != self.spec.side_edge(slot):
            raise DevelopError("link direction points at the wrong edge")
        if slot not in rec.slots:
            raise DevelopError("edge instance has no slot for this side")
        if rec.slots[slot] is not None:
            raise DevelopError(
                f"slot {slot.key()} of edge instance {eiid2} is occupied"
            )
        side_e[j] = eiid2
        sgn = self.spec.side_sign(slot)
        t, hd = self.find(rec.tail), self.find(rec.head)
        pair = ((j, t), ((j + 1) % n, hd)) if sgn > 0 else (
            (j, hd), ((j + 1) % n, t))
        for k, v in pair:
            if k in corner_v:
                got = self.find(corner_v[k])
                if got != v:
                    # the corner joins two wedges of one cover point
                    corner_v[k] = self._merge_vertices(got, v)
            else:
                corner_v[k] = v

    def _instantiate(self, cid, side_e, corner_v) -> int:
        spec = self.spec
        cell = spec.cell(cid)
        n = cell.n_sides
        iid = len(self._cells)
        for i in range(n):
            if i not in corner_v:
                corner_v[i] = self._new_vertex(cell.corner_vertex[i])
        for j in range(n):
            if j not in side_e:
                slot = Slot(cid, j)
                a, b = corner_v[j], corner_v[(j + 1) % n]
                if spec.side_sign(slot) > 0:
                    side_e[j] = self._new_edge(spec.side_edge(slot), a, b)
                else:
                    side_e[j] = self._new_edge(spec.side_edge(slot), b, a)
        for j in range(n):
            rec = self._edges[side_e[j]]
            slot = Slot(cid, j)
            if rec.slots[slot] is not None:
                raise DevelopError(
                    f"slot {slot.key()} of edge instance {side_e[j]} "
                    "is occupied"
                )
            rec.slots[slot] = iid
        for i in range(n):
            vcan = self.find(corner_v[i])
            rec = self._verts[vcan]
            node_in, node_out = spec.corner_link_nodes(cid, i)
            for nd, ei in ((node_in, side_e[(i - 1) % n]), (node_out, side_e[i])):
                if rec.node_map.get(nd, ei) != ei:
                    raise DevelopError(
                        f"link direction {nd} maps to two edge instances"
                    )
                rec.node_map[nd] = ei
            if (cid, i) in rec.arcs:
                raise DevelopError(f"corner ({cid}, {i}) registered twice")
            rec.arcs[(cid, i)] = iid
            self._link_cache.pop(vcan, None)
            corner_v[i] = vcan
        self._cells[iid] = _Cell(iid, cid, dict(side_e), dict(corner_v))
        self.sub.add_instance(iid)
        self._field_cache = None
        return iid

    def _glue_cell(self, eiid: int, slot: Slot):
        """Glue a fresh instance of slot.cell across edge instance eiid.

        Returns the new instance id, or None when the slot is already
        occupied.  Sides whose far corner is already known reuse existing
        edge instances, which is what closes wedges around vertices.
        """
        rec = self._edges[eiid]
        if rec.slots[slot] is not None:
            return None
        cid = slot.cell
        cell = self.spec.cell(cid)
        n = cell.n_sides
        side_e = {slot.side: eiid}
        corner_v = {}
        t, hd = self.find(rec.tail), self.find(rec.head)
        if self.spec.side_sign(slot) > 0:
            corner_v[slot.side] = t
            corner_v[(slot.side + 1) % n] = hd
        else:
            corner_v[slot.side] = hd
            corner_v[(slot.side + 1) % n] = t
        changed = True
        while changed:
            changed = False
            for i in range(n):
                if i not in corner_v:
                    continue
                vrec = self._verts[self.find(corner_v[i])]
                node_in, node_out = self.spec.corner_link_nodes(cid, i)
                j_in = (i - 1) % n
                if j_in not in side_e and node_in in vrec.node_map:
                    self._adopt(
                        cid, n, side_e, corner_v, j_in, vrec.node_map[node_in]
                    )
                    changed = True
                if i not in side_e and node_out in vrec.node_map:
                    self._adopt(
                        cid, n, side_e, corner_v, i, vrec.node_map[node_out]
                    )
                    changed = True
        return self._instantiate(cid, side_e, corner_v)

    # -- growth ----------------------------------------------------------------

    def _field(self):
        token = (len(self.sub._adj_u), len(self.sub.nodes))
        if self._field_cache is None or self._field_cache[0] != token:
            dist, pred = self.sub.field_from(self.base_iid, self.base.xy())
            self._field_cache = (token, dist, pred)
        return self._field_cache[1], self._field_cache[2]

    def _vertex_node_dist(self, dist, viid):
        nid = self.sub.node_index.get(("v", viid))
        if nid is None or nid >= len(dist):
            return math.inf
        return float(dist[nid])

    def _edge_node_dist(self, dist, eiid):
        ids = self.sub._edge_nodes.get(eiid)
        if ids is None:
            return math.inf
        return float(min(dist[n] for n in ids if n < len(dist)))

    def _saturate(self, viid: int, max_instances: int):
        """Glue every cell of the full link around one vertex instance."""
        viid = self.find(viid)
        if viid in self._saturated:
            return
        spec = self.spec
        vname = self._verts[viid].vertex
        spec_lk = spec.link(vname)
        targets = sorted(ck for _, _, _, ck in spec_lk.arcs)
        guard = 0
        while True:
            guard += 1
            if guard > 4 * len(targets) + 8:
                raise DevelopError("vertex saturation failed to converge")
            rec = self._verts[self.find(viid)]
            missing = [ck for ck in targets if ck not in rec.arcs]
            if not missing:
                break
            progressed = False
            for cid, i in missing:
                rec = self._verts[self.find(viid)]
                if (cid, i) in rec.arcs:
                    continue
                node_in, node_out = spec.corner_link_nodes(cid, i)
                n = spec.cell(cid).n_sides
                if node_in in rec.node_map:
                    eiid2, side = rec.node_map[node_in], (i - 1) % n
                elif node_out in rec.node_map:
                    eiid2, side = rec.node_map[node_out], i
                else:
                    continue
                slot = Slot(cid, side)
                if self._edges[eiid2].slots[slot] is not None:
                    raise DevelopError(
                        "occupied slot without a registered corner at "
                        f"vertex instance {viid}"
                    )
                if len(self._cells) >= max_instances:
                    raise DevelopError("instance budget exhausted")
                self._glue_cell(eiid2, slot)
                progressed = True
            if progressed:
                continue
            # remaining corners sit in link components not yet reached:
            # the cover point carries them all, so start one afresh and
            # identify the matching corners
            cid, i = missing[0]
            if len(self._cells) >= max_instances:
                raise DevelopError("instance budget exhausted")
            iid2 = self._instantiate(cid, {}, {})
            other = self._cells[iid2].corner_vid[i]
            self._merge_vertices(viid, other)
        self._saturated.add(self.find(viid))

    def _process_events(self, thr: float, max_instances: int):
        """Closest-first star saturations and long-edge gluings up to thr."""
        while True:
            dist, _ = self._field()
            events = []
            for viid in self.vertex_instances():
                if viid in self._saturated:
                    continue
                d = self._vertex_node_dist(dist, viid)
                if d <= thr:
                    events.append((d, 0, viid))
            free_edges = {}
            for eiid in sorted(self._edges):
                rec = self._edges[eiid]
                if any(v is None for v in rec.slots.values()):
                    d = self._edge_node_dist(dist, eiid)
                    if d <= thr:
                        events.append((d, 1, eiid))
                        free_edges[eiid] = rec
            if not events:
                return
            events.sort()
            acted = False
            for d, kind, ident in events:
                if kind == 0:
                    self._saturate(ident, max_instances)
                    acted = True
                    break
                rec = free_edges[ident]
                ends = {self.find(rec.tail), self.find(rec.head)}
                defer = any(
                    v not in self._saturated
                    and self._vertex_node_dist(dist, v) <= thr
                    for v in ends
                )
                if defer:
                    continue
                for slot in sorted(rec.slots, key=lambda s: s.key()):
                    if rec.slots[slot] is None:
                        if len(self._cells) >= max_instances:
                            raise DevelopError("instance budget exhausted")
                        self._glue_cell(ident, slot)
                acted = True
                break
            if not acted:
                return

    def _exact_edge_dist(self, eiid: int, accept: float):
        """Least straightened distance from the base to an edge instance.

        Stops early once a value at most `accept` is found; otherwise
        refines until the argument bracket is negligible.  The distance is
        convex along the edge, so a golden section search applies.
        """
        rec = self._edges[eiid]
        occ = sorted(
            (s for s, v in rec.slots.items() if v is not None),
            key=lambda s: s.key(),
        )
        slot = occ[0]
        iid = rec.slots[slot]
        a0, a1 = self.spec.side_param_points(slot)
        # side_param_points orders by edge parameter for the occupant; any
        # consistent parametrization works here
        length = self.spec.edges[rec.edge].length
        dist, pred = self._field()

        def f(t):
            xy = a0 + (t / length) * (a1 - a0)
            g = shortest_geodesic(
                self,
                self.sub,
                (self.base_iid, self.base.xy()),
                (iid, xy),
                field_cache=(dist, pred),
            )
            return g.length if g is not None else math.inf

        lo, hi = 0.0, length
        inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
        c = hi - inv_phi * (hi - lo)
        d = lo + inv_phi * (hi - lo)
        fc, fd = f(c), f(d)
        best = min(f(0.0), f(length), fc, fd)
        while best > accept and hi - lo > 1e-9 * max(1.0, length):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - inv_phi * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + inv_phi * (hi - lo)
                fd = f(d)
            best = min(best, fc, fd)
        return best

    def _grow(self, max_instances: int):
        thr = self.radius + 1e-9
        rounds = 0
        while True:
            rounds += 1
            if rounds > max_instances:
                raise DevelopError("growth failed to converge")
            self._process_events(thr, max_instances)
            glued = False
            for eiid in sorted(self._edges):
                rec = self._edges[eiid]
                if all(v is not None for v in rec.slots.values()):
                    continue
                m = self._exact_edge_dist(eiid, self.radius + 1e-9)
                if m <= thr:
                    for slot in sorted(rec.slots, key=lambda s: s.key()):
                        if rec.slots[slot] is None:
                            if len(self._cells) >= max_instances:
                                raise DevelopError(
                                    "instance budget exhausted"
                                )
                            self._glue_cell(eiid, slot)
                    glued = True
            if not glued:
                return

    def _exact_cell_dist(self, iid: int, accept: float):
        best = math.inf
        for s in range(self.spec.cell(self.instance_cell(iid)).n_sides):
            eiid = self.instance_side_edge(iid, s)
            best = min(best, self._exact_edge_dist(eiid, accept))
            if best <= accept:
                break
        return best

    def _classify(self):
        R = self.radius
        dist, _ = self._field()
        band = 12.0 * self.h
        placed = []
        for iid in self.sorted_instances():
            ids, _ = self.sub.inst_nodes[iid]
            u = float(min(dist[n] for n in ids))
            self.cell_min_dist[iid] = u
            if iid == self.base_iid or u <= R:
                placed.append(iid)
                continue
            if u > R + band:
                continue
            m = self._exact_cell_dist(iid, R + 1e-9)
            self.cell_min_dist[iid] = m
            if m <= R + 1e-9:
                placed.append(iid)
        self.placed = placed


def develop_ball(
    spec: ComplexSpec,
    base: Point,
    radius: float,
    h=None,
    max_instances: int = 20000,
) -> DevelopedBall:
    """Develop the ball of the given radius around a base point.

    Returns a DevelopedBall whose `placed` list holds every cell instance
    within `radius` of the base point; distances within the region agree
    with distances of the universal cover.
    """
    ball = DevelopedBall(spec, base, radius, h=h)
    ball._grow(max_instances)
    ball._classify()
    return ball
