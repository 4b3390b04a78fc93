"""Exact geodesics inside a developed region.

The pipeline: a weighted graph over subdivided cell boundaries gives upper
bounds and a first corridor (sequence of cell instances); the corridor is
unfolded isometrically into the plane; string pulling (funnel) gives the
shortest path through the unfolded sleeve; every remaining bend sits at a
vertex instance, where the turn is certified against the link metric (a
path is a local geodesic iff incoming and outgoing directions are at link
distance >= pi). Failed certifications reroute the corridor through the
short link path and the loop repeats. A certified path in a simply
connected nonpositively curved region is globally minimal there, so the
returned length is exact, independent of how rough the initial corridor
was.

The region object (`ball`) is duck typed; see develop.DevelopedBall for
the canonical provider.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from ._kernels import csr_dijkstra, dijkstra_path
from .geometry import Isometry, angle_between
from .tolerances import GEOM_TOL, STRAIGHTEN_MAX_ROUNDS

_AREA_EPS = 1e-12
_PI_CERT_TOL = 1e-9


class StraightenError(RuntimeError):
    pass


def _area2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _slot_of(ball, iid, side):
    from .complexes import Slot

    return Slot(ball.instance_cell(iid), side)


class SubdivisionGraph:
    """Grow-only boundary graph of a developed region.

    Nodes are vertex instances and evenly spaced samples on edge instances;
    weights are straight chords inside cells (valid upper bounds because
    cells are convex) plus exact spans along edges. Instances are added as
    the region grows; `finalize` snapshots CSR arrays for the kernel.
    """

    def __init__(self, ball, h: float):
        self.ball = ball
        self.h = float(h)
        self.nodes = []  # ('v', vid) or ('e', eiid, k)
        self.node_index = {}
        self._adj_u = []
        self._adj_v = []
        self._adj_w = []
        self._edge_nodes = {}  # eiid -> node ids ordered by edge param
        self._edge_params = {}  # eiid -> np.array of params
        self.inst_nodes = {}  # iid -> (node id list, local coords (n,2))
        self._csr = None
        self._csr_edge_count = 0

    def _node(self, key):
        idx = self.node_index.get(key)
        if idx is None:
            idx = len(self.nodes)
            self.node_index[key] = idx
            self.nodes.append(key)
        return idx

    def _link(self, u, v, w):
        self._adj_u.append(u)
        self._adj_v.append(v)
        self._adj_w.append(w)

    def _ensure_edge(self, eiid):
        if eiid in self._edge_nodes:
            return
        ball = self.ball
        edge_id, _, tail_vid, head_vid = ball.edge_record(eiid)
        L = ball.spec.edges[edge_id].length
        nseg = max(1, int(math.ceil(L / self.h - 1e-12)))
        params = np.linspace(0.0, L, nseg + 1)
        ids = []
        for k in range(nseg + 1):
            if k == 0:
                ids.append(self._node(("v", tail_vid)))
            elif k == nseg:
                ids.append(self._node(("v", head_vid)))
            else:
                ids.append(self._node(("e", eiid, k)))
        step = L / nseg
        for a, b in zip(ids, ids[1:]):
            self._link(a, b, step)
        self._edge_nodes[eiid] = ids
        self._edge_params[eiid] = params

    def add_instance(self, iid):
        """Register a cell instance: create its edge samples and chords."""
        if iid in self.inst_nodes:
            return
        ball = self.ball
        cell = ball.spec.cell(ball.instance_cell(iid))
        n = cell.n_sides
        groups = []
        all_ids = []
        all_xy = []
        local_of = {}
        for s in range(n):
            eiid = ball.instance_side_edge(iid, s)
            self._ensure_edge(eiid)
            ids = self._edge_nodes[eiid]
            params = self._edge_params[eiid]
            a0, a1 = ball.spec.side_param_points(_slot_of(ball, iid, s))
            L = params[-1]
            coords = a0[None, :] + (params / L)[:, None] * (a1 - a0)[None, :]
            group = []
            for nid, xy in zip(ids, coords):
                if nid not in local_of:
                    local_of[nid] = len(all_ids)
                    all_ids.append(nid)
                    all_xy.append(np.asarray(xy, float))
                group.append(local_of[nid])
            groups.append(group)
        all_xy = np.asarray(all_xy)
        # chords between samples on different sides; same-side pairs are
        # already spanned exactly by the along-edge links
        done = set()
        for i in range(n):
            for j in range(i + 1, n):
                for a in groups[i]:
                    for b in groups[j]:
                        if a == b:
                            continue
                        key = (a, b) if a < b else (b, a)
                        if key in done:
                            continue
                        done.add(key)
                        w = float(np.hypot(*(all_xy[a] - all_xy[b])))
                        if w > GEOM_TOL:
                            self._link(all_ids[a], all_ids[b], w)
        self.inst_nodes[iid] = (all_ids, all_xy)
        self._csr = None

    def merge_vertex_nodes(self, vid_a, vid_b):
        """Join the nodes of two identified vertex instances."""
        self._link(self._node(("v", vid_a)), self._node(("v", vid_b)), 0.0)
        self._csr = None

    def finalize(self):
        if self._csr is not None and self._csr_edge_count == len(self._adj_u):
            return self._csr
        n = len(self.nodes)
        au = np.asarray(self._adj_u, np.int64)
        av = np.asarray(self._adj_v, np.int64)
        aw = np.asarray(self._adj_w, np.float64)
        u = np.concatenate([au, av])
        v = np.concatenate([av, au])
        w = np.concatenate([aw, aw])
        order = np.argsort(u, kind="stable")
        u, v, w = u[order], v[order], w[order]
        indptr = np.zeros(n + 1, np.int64)
        np.add.at(indptr, u + 1, 1)
        np.cumsum(indptr, out=indptr)
        self._csr = (indptr, v, w)
        self._csr_edge_count = len(self._adj_u)
        return self._csr

    def seeds_for_point(self, iid, xy):
        """Seed arrays for a point inside instance iid: chords to its rim."""
        ids, coords = self.inst_nodes[iid]
        offs = np.hypot(coords[:, 0] - xy[0], coords[:, 1] - xy[1])
        return np.asarray(ids, np.int64), np.asarray(offs, np.float64)

    def field_from(self, iid, xy, cutoff=math.inf, target=-1):
        """Dijkstra upper-bound field from a point of instance iid."""
        indptr, indices, weights = self.finalize()
        seeds, offs = self.seeds_for_point(iid, np.asarray(xy, float))
        return csr_dijkstra(
            indptr, indices, weights, seeds, offs, np.int64(target), float(cutoff)
        )

    def field_from_seeds(self, seeds, offs, cutoff=math.inf, target=-1):
        indptr, indices, weights = self.finalize()
        return csr_dijkstra(
            indptr,
            indices,
            weights,
            np.asarray(seeds, np.int64),
            np.asarray(offs, np.float64),
            np.int64(target),
            float(cutoff),
        )

    def best_target_node(self, dist, iid, xy):
        """Node of instance iid minimizing dist[node] + chord to xy."""
        ids, coords = self.inst_nodes[iid]
        ids = np.asarray(ids)
        offs = np.hypot(coords[:, 0] - xy[0], coords[:, 1] - xy[1])
        tot = dist[ids] + offs
        k = int(np.argmin(tot))
        return int(ids[k]), float(tot[k])

    def incident_instances(self, node_id):
        key = self.nodes[node_id]
        ball = self.ball
        if key[0] == "e":
            _, slots, _, _ = ball.edge_record(key[1])
            return sorted({i for i in slots.values() if i is not None})
        return sorted({i for (i, _) in ball.vertex_arcs(key[1])})


@dataclass
class Corridor:
    visits: list
    crossings: list  # edge instance ids, len == len(visits) - 1

    def cleanup(self):
        # collapse consecutive duplicates, then immediate returns over the
        # same edge instance (A, B, A folds flat and only wastes portals)
        changed = True
        while changed:
            changed = False
            for j in range(len(self.visits) - 1):
                if self.visits[j] == self.visits[j + 1]:
                    del self.visits[j + 1]
                    del self.crossings[j]
                    changed = True
                    break
            else:
                for j in range(len(self.visits) - 2):
                    if (
                        self.visits[j] == self.visits[j + 2]
                        and self.crossings[j] == self.crossings[j + 1]
                    ):
                        del self.visits[j + 1 : j + 3]
                        del self.crossings[j : j + 2]
                        changed = True
                        break


def _common_instance(ball, sub, n1, n2):
    i2 = set(sub.incident_instances(n2))
    for i in sub.incident_instances(n1):
        if i in i2:
            return i
    return None


def _vertex_fan(ball, vid, iid_from, iid_to):
    """Cells and crossings threading a vertex between two incident cells.

    Returns None when the two cells sit in different components of the
    vertex link; a path between them must then pass through the vertex
    point itself (a cone passage, certified for free since the turn cannot
    be shortened around).
    """
    lk = ball.link_instance(vid)
    k_from = ball.instance_corner_at(iid_from, vid)
    k_to = ball.instance_corner_at(iid_to, vid)
    cf = ball.spec.cell(ball.instance_cell(iid_from))
    ct = ball.spec.cell(ball.instance_cell(iid_to))
    p = ("corner", (iid_from, k_from), 0.5 * float(cf.angles[k_from]))
    q = ("corner", (iid_to, k_to), 0.5 * float(ct.angles[k_to]))
    d, steps = lk.distance_points(p, q)
    if math.isinf(d):
        return None
    cells, crossings = _fan_from_steps(ball, lk, steps)
    if not cells or cells[0] != iid_from or cells[-1] != iid_to:
        raise StraightenError("vertex fan does not join the two cells")
    return cells, crossings


def _fan_from_steps(ball, lk, steps):
    """Convert link path steps into (cells, crossings between them)."""
    arcmap = {ck: (ua, ub, w) for ua, ub, w, ck in lk.arcs}
    cells = []
    crossings = []
    for idx, (ck, f, t) in enumerate(steps):
        iid = ck[0]
        if cells and cells[-1] == iid:
            continue
        if cells:
            pck, pf, pt = steps[idx - 1]
            ua, ub, w = arcmap[pck]
            node = lk.nodes[ua] if abs(pt) <= abs(pt - w) else lk.nodes[ub]
            crossings.append(node[0])
        cells.append(iid)
    return cells, crossings


def _sections_from_pred(ball, sub, pred, end_node, start_iid, end_iid):
    """Corridor sections of a predecessor walk, split at cone passages.

    Returns (sections, pinches): len(sections) == len(pinches) + 1, where
    pinches[i] is the vertex instance the path passes through between
    section i and i+1.
    """
    node_path = dijkstra_path(pred, end_node)
    sections = []
    pinches = []
    visits = [start_iid]
    crossings = []

    def cross_to(nid, target):
        nonlocal visits, crossings
        cur = visits[-1]
        if target == cur:
            return
        key = sub.nodes[nid]
        if key[0] == "e":
            crossings.append(key[1])
            visits.append(target)
            return
        fan = _vertex_fan(ball, key[1], cur, target)
        if fan is None:
            sections.append(Corridor(visits, crossings))
            pinches.append(key[1])
            visits = [target]
            crossings = []
            return
        fan_cells, fan_cross = fan
        for c, x in zip(fan_cells[1:], fan_cross):
            crossings.append(x)
            visits.append(c)

    for a, b in zip(node_path, node_path[1:]):
        ka, kb = sub.nodes[a], sub.nodes[b]
        if ka[0] == "e" and kb[0] == "e" and ka[1] == kb[1]:
            continue  # slide along one edge instance
        if ka[0] == "v" and kb[0] == "e" and a in (
            sub._edge_nodes[kb[1]][0],
            sub._edge_nodes[kb[1]][-1],
        ):
            continue  # step from an endpoint into the same edge
        if kb[0] == "v" and ka[0] == "e" and b in (
            sub._edge_nodes[ka[1]][0],
            sub._edge_nodes[ka[1]][-1],
        ):
            continue
        com = _common_instance(ball, sub, a, b)
        if com is None:
            raise StraightenError("disconnected node pair in corridor walk")
        cross_to(a, com)
    cross_to(node_path[-1], end_iid)
    sections.append(Corridor(visits, crossings))
    for s in sections:
        s.cleanup()
    return sections, pinches


def corridor_from_pred(ball, sub, pred, end_node, start_iid, end_iid):
    """Single-corridor variant; raises if the walk pinches at a vertex."""
    sections, pinches = _sections_from_pred(
        ball, sub, pred, end_node, start_iid, end_iid
    )
    if pinches:
        raise StraightenError("walk passes through a disconnecting vertex")
    return sections[0]


def unfold_corridor(ball, corr: Corridor):
    """Place corridor cells isometrically in the plane.

    Returns (placements, portals); portal j, between visits j and j+1, is a
    dict with unfolded endpoints L/R (left and right as seen walking the
    corridor), their vertex instance ids, and the edge instance id.
    """
    spec = ball.spec
    placements = [Isometry.identity()]
    portals = []
    for j, eiid in enumerate(corr.crossings):
        a_iid, b_iid = corr.visits[j], corr.visits[j + 1]
        if a_iid == b_iid:
            raise StraightenError("corridor glues a cell instance to itself")
        edge_id, slots, tail_vid, head_vid = ball.edge_record(eiid)
        slot_a = slot_b = None
        for s in sorted(slots, key=lambda s: (s.cell, s.side)):
            if slots[s] == a_iid:
                slot_a = s
            if slots[s] == b_iid:
                slot_b = s
        if slot_a is None or slot_b is None:
            raise StraightenError(
                f"corridor crossing {eiid} not shared by visits {a_iid},{b_iid}"
            )
        t = spec.transition(slot_a, slot_b)
        place_b = placements[j].compose(t)
        placements.append(place_b)
        cellb = spec.cell(ball.instance_cell(b_iid))
        p0, p1 = cellb.side_points(slot_b.side)
        nb = cellb.n_sides
        if place_b.flip:
            lxy, rxy = place_b.apply(p1), place_b.apply(p0)
            lr_corners = ((slot_b.side + 1) % nb, slot_b.side)
        else:
            lxy, rxy = place_b.apply(p0), place_b.apply(p1)
            lr_corners = (slot_b.side, (slot_b.side + 1) % nb)
        a0, a1 = spec.side_param_points(slot_a)
        u0, u1 = placements[j].apply(a0), placements[j].apply(a1)
        if (
            min(
                np.hypot(*(u0 - lxy)) + np.hypot(*(u1 - rxy)),
                np.hypot(*(u0 - rxy)) + np.hypot(*(u1 - lxy)),
            )
            > 1e-6
        ):
            raise StraightenError("inconsistent unfolding across a portal")
        sign_b = spec.side_sign(slot_b)
        if sign_b > 0:
            corner_vid = {
                slot_b.side: tail_vid,
                (slot_b.side + 1) % nb: head_vid,
            }
        else:
            corner_vid = {
                slot_b.side: head_vid,
                (slot_b.side + 1) % nb: tail_vid,
            }
        portals.append(
            {
                "L": lxy,
                "R": rxy,
                "L_vid": corner_vid[lr_corners[0]],
                "R_vid": corner_vid[lr_corners[1]],
                "eiid": eiid,
            }
        )
    return placements, portals


def funnel(start, portals, end):
    """Shortest path through a sleeve of portal segments.

    portals: list of (L, R) pairs of plane points, left and right relative
    to travel. Returns a list of (point, pins) where pins is a list of
    (portal_index, 'L' or 'R') bends merged at that point; endpoints
    usually carry no pins.
    """
    Ls = [np.asarray(start, float)] + [np.asarray(p[0], float) for p in portals]
    Rs = [np.asarray(start, float)] + [np.asarray(p[1], float) for p in portals]
    Ls.append(np.asarray(end, float))
    Rs.append(np.asarray(end, float))
    raw = [(np.asarray(start, float), None)]
    apex = np.asarray(start, float)
    lpt, rpt = apex, apex
    li = ri = 0
    i = 1
    guard = 0
    limit = 4 * len(Ls) * len(Ls) + 64
    while i < len(Ls):
        guard += 1
        if guard > limit:
            raise StraightenError("funnel failed to converge")
        nl, nr = Ls[i], Rs[i]
        # tighten the right boundary
        if _area2(apex, rpt, nr) >= -_AREA_EPS:
            if np.array_equal(apex, rpt) or _area2(apex, lpt, nr) <= _AREA_EPS:
                rpt, ri = nr, i
            else:
                raw.append((lpt, (li - 1, "L")))
                apex = lpt
                lpt = rpt = apex
                i = li + 1
                li = ri = i - 1
                continue
        # tighten the left boundary
        if _area2(apex, lpt, nl) <= _AREA_EPS:
            if np.array_equal(apex, lpt) or _area2(apex, rpt, nl) >= -_AREA_EPS:
                lpt, li = nl, i
            else:
                raw.append((rpt, (ri - 1, "R")))
                apex = rpt
                lpt = rpt = apex
                i = ri + 1
                li = ri = i - 1
                continue
        i += 1
    raw.append((np.asarray(end, float), None))
    # merge coincident points, accumulating their pins in order
    merged = [(raw[0][0], [])]
    for pt, meta in raw[1:]:
        last_pt, last_pins = merged[-1]
        if np.hypot(*(pt - last_pt)) <= 1e-12:
            if meta is not None:
                last_pins.append(meta)
            continue
        merged.append((pt, [] if meta is None else [meta]))
    return merged


@dataclass
class Geodesic:
    """A certified shortest path between two points of a region."""

    length: float
    p: tuple  # (iid, (x, y))
    q: tuple
    waypoints: np.ndarray  # unfolded polyline
    corridor: Corridor = field(repr=False)
    placements: list = field(repr=False)
    breakpoints: list = field(repr=False)  # (vid, waypoint index, link dist)
    pieces: list = field(repr=False)  # (s_from, s_to, visit index)
    _cum: np.ndarray = field(repr=False, default=None)
    _piece_starts: list = field(repr=False, default=None)

    def __post_init__(self):
        seg = np.hypot(*np.diff(self.waypoints, axis=0).T)
        self._cum = np.concatenate([[0.0], np.cumsum(np.atleast_1d(seg))])
        self._piece_starts = [p[0] for p in self.pieces]

    def direction_at_start(self):
        """Unit direction of departure in the start cell's local frame."""
        d = self.waypoints[1] - self.waypoints[0]
        n = np.hypot(*d)
        if n == 0.0:
            raise ValueError("zero length geodesic has no direction")
        return d / n

    def direction_at_end(self):
        """Unit direction of arrival in the end cell's local frame."""
        d = self.waypoints[-1] - self.waypoints[-2]
        n = np.hypot(*d)
        if n == 0.0:
            raise ValueError("zero length geodesic has no direction")
        return self.placements[-1].inverse().apply_linear(d / n)

    def point_at(self, s: float):
        """(instance id, local xy) of the point at arclength s from p."""
        s = min(max(s, 0.0), self.length)
        k = min(bisect_right(self._cum, s) - 1, len(self.waypoints) - 2)
        k = max(k, 0)
        denom = self._cum[k + 1] - self._cum[k]
        t = (s - self._cum[k]) / denom if denom > 0 else 0.0
        xy = self.waypoints[k] * (1 - t) + self.waypoints[k + 1] * t
        pi = min(bisect_right(self._piece_starts, s + 1e-12) - 1, len(self.pieces) - 1)
        pi = max(pi, 0)
        vi = self.pieces[pi][2]
        inst = self.corridor.visits[vi]
        local = self.placements[vi].inverse().apply(xy)
        return inst, local

    def sample(self, step: float):
        """Points every `step` along the path, endpoints included."""
        n = max(1, int(math.ceil(self.length / step - 1e-12)))
        return [self.point_at(self.length * k / n) for k in range(n + 1)]


def _portal_cross_param(w0, w1, a, b):
    """Param t in [0,1] along w0->w1 where it crosses the line through a,b."""
    d = w1 - w0
    e = b - a
    denom = d[0] * e[1] - d[1] * e[0]
    if abs(denom) < 1e-300:
        return 0.0
    t = ((a[0] - w0[0]) * e[1] - (a[1] - w0[1]) * e[0]) / denom
    return min(max(t, 0.0), 1.0)


def _build_pieces(points, pins, portals, n_visits, cum):
    """Exact arclength intervals per corridor visit.

    Visit j lies between portals j-1 and j. A segment from a waypoint
    pinned at portal p0 to one pinned at portal p1 crosses portals
    p0+1 .. p1-1 transversally; the crossing arclengths split the segment
    into per-visit pieces.
    """
    pieces = []
    cur_visit = 0
    for k in range(len(points) - 1):
        if pins[k]:
            cur_visit = pins[k][-1][0] + 1
        if pins[k + 1]:
            target_visit = pins[k + 1][0][0]
        else:
            target_visit = n_visits - 1
        w0, w1 = points[k], points[k + 1]
        s0, s1 = cum[k], cum[k + 1]
        s_prev = s0
        for j in range(cur_visit, target_visit):
            t = _portal_cross_param(w0, w1, portals[j]["L"], portals[j]["R"])
            s_cross = min(max(s0 + t * (s1 - s0), s_prev), s1)
            pieces.append((s_prev, s_cross, j))
            s_prev = s_cross
        pieces.append((s_prev, s1, target_visit))
        cur_visit = target_visit
    return pieces


def _clamped_offset(cell, corner, direction):
    prev_leg = cell.points[corner - 1] - cell.points[corner]
    ang = angle_between(prev_leg, direction)
    return min(max(ang, 0.0), float(cell.angles[corner]))


def straighten(ball, corr: Corridor, p, q, max_rounds: int = STRAIGHTEN_MAX_ROUNDS):
    """Funnel, certify, and reroute until the corridor path is geodesic.

    p and q are (iid, xy) with iid the first and last corridor visit.
    Returns a Geodesic whose length is the exact distance within the
    region, provided the region contains the true geodesic (callers
    guarantee this by developing far enough).
    """
    spec = ball.spec
    p_iid, p_xy = p
    q_iid, q_xy = q
    if corr.visits[0] != p_iid or corr.visits[-1] != q_iid:
        raise StraightenError("corridor endpoints do not match the query")
    for _ in range(max_rounds):
        placements, portals = unfold_corridor(ball, corr)
        start = np.asarray(p_xy, float)
        end = placements[-1].apply(np.asarray(q_xy, float))
        if portals:
            merged = funnel(start, [(pt["L"], pt["R"]) for pt in portals], end)
        else:
            merged = [(start, []), (np.asarray(end, float), [])]
        points = [pt for pt, _ in merged]
        pins = [pn for _, pn in merged]
        if len(points) == 1:
            points = [points[0], points[0]]
            pins = [pins[0], []]
        violation = None
        breakpoints = []
        for k in range(1, len(points) - 1):
            if not pins[k]:
                raise StraightenError("interior waypoint without a portal pin")
            p_first, side_first = pins[k][0]
            p_last, side_last = pins[k][-1]
            portal_f = portals[p_first]
            portal_l = portals[p_last]
            vid = portal_f["L_vid"] if side_first == "L" else portal_f["R_vid"]
            vid_l = portal_l["L_vid"] if side_last == "L" else portal_l["R_vid"]
            if vid != vid_l:
                raise StraightenError("bend pins disagree on the vertex instance")
            cell_in = corr.visits[p_first]
            cell_out = corr.visits[p_last + 1]
            k_in = ball.instance_corner_at(cell_in, vid)
            k_out = ball.instance_corner_at(cell_out, vid)
            lk = ball.link_instance(vid)
            c_in = spec.cell(ball.instance_cell(cell_in))
            c_out = spec.cell(ball.instance_cell(cell_out))
            din = placements[p_first].inverse().apply_linear(points[k - 1] - points[k])
            dout = placements[p_last + 1].inverse().apply_linear(
                points[k + 1] - points[k]
            )
            off_in = _clamped_offset(c_in, k_in, din)
            off_out = _clamped_offset(c_out, k_out, dout)
            d_link, steps = lk.distance_points(
                ("corner", (cell_in, k_in), off_in),
                ("corner", (cell_out, k_out), off_out),
            )
            if d_link >= math.pi - _PI_CERT_TOL:
                breakpoints.append((vid, k, float(d_link)))
                continue
            violation = (p_first, p_last, lk, steps, cell_in, cell_out)
            break
        if violation is None:
            pts = np.asarray(points)
            cum = np.concatenate(
                [[0.0], np.cumsum(np.atleast_1d(np.hypot(*np.diff(pts, axis=0).T)))]
            )
            pieces = _build_pieces(points, pins, portals, len(corr.visits), cum)
            return Geodesic(
                length=float(cum[-1]),
                p=(p_iid, tuple(np.asarray(p_xy, float))),
                q=(q_iid, tuple(np.asarray(q_xy, float))),
                waypoints=pts,
                corridor=corr,
                placements=placements,
                breakpoints=breakpoints,
                pieces=pieces,
            )
        p_first, p_last, lk, steps, cell_in, cell_out = violation
        fan_cells, fan_cross = _fan_from_steps(ball, lk, steps)
        if not fan_cells or fan_cells[0] != cell_in or fan_cells[-1] != cell_out:
            raise StraightenError("reroute fan does not join the corridor cells")
        visits = corr.visits[: p_first + 1] + fan_cells[1:-1] + corr.visits[p_last + 1 :]
        crossings = corr.crossings[:p_first] + fan_cross + corr.crossings[p_last + 1 :]
        corr = Corridor(visits, crossings)
        corr.cleanup()
    raise StraightenError(f"straightening did not converge in {max_rounds} rounds")


@dataclass
class PathChain:
    """Geodesic forced through cone vertices: certified sections end to end.

    Each junction vertex disconnects its link between the adjacent section
    cells, so no shortcut around it exists and the concatenation is a local,
    hence global, geodesic.
    """

    sections: list
    pinch_vids: list

    @property
    def length(self):
        return float(sum(g.length for g in self.sections))

    @property
    def p(self):
        return self.sections[0].p

    @property
    def q(self):
        return self.sections[-1].q

    @property
    def breakpoints(self):
        out = []
        for i, g in enumerate(self.sections):
            out.extend(g.breakpoints)
            if i < len(self.pinch_vids):
                out.append((self.pinch_vids[i], None, math.inf))
        return out

    def direction_at_start(self):
        return self.sections[0].direction_at_start()

    def direction_at_end(self):
        return self.sections[-1].direction_at_end()

    def point_at(self, s: float):
        s = min(max(s, 0.0), self.length)
        for g in self.sections:
            if s <= g.length or g is self.sections[-1]:
                return g.point_at(s)
            s -= g.length
        return self.sections[-1].point_at(self.sections[-1].length)

    def sample(self, step: float):
        n = max(1, int(math.ceil(self.length / step - 1e-12)))
        return [self.point_at(self.length * k / n) for k in range(n + 1)]


def _corner_xy(ball, iid, vid):
    cell = ball.spec.cell(ball.instance_cell(iid))
    k = ball.instance_corner_at(iid, vid)
    return np.asarray(cell.points[k], float)


def shortest_geodesic(ball, sub: SubdivisionGraph, p, q, field_cache=None):
    """Full pipeline: graph init plus straightening. p, q are (iid, xy).

    Returns a certified Geodesic (or PathChain when the path must pass
    through disconnecting vertices), or None when q is unreachable in the
    region graph.
    """
    p_iid, p_xy = p
    q_iid, q_xy = q
    p_xy = np.asarray(p_xy, float)
    q_xy = np.asarray(q_xy, float)
    if p_iid == q_iid:
        d = float(np.hypot(*(q_xy - p_xy)))
        return Geodesic(
            length=d,
            p=(p_iid, tuple(p_xy)),
            q=(q_iid, tuple(q_xy)),
            waypoints=np.vstack([p_xy, q_xy]),
            corridor=Corridor([p_iid], []),
            placements=[Isometry.identity()],
            breakpoints=[],
            pieces=[(0.0, d, 0)],
        )
    if field_cache is not None:
        dist, pred = field_cache
    else:
        dist, pred = sub.field_from(p_iid, p_xy)
    node, ub = sub.best_target_node(dist, q_iid, q_xy)
    if not math.isfinite(ub):
        return None
    sections, pinches = _sections_from_pred(ball, sub, pred, node, p_iid, q_iid)
    if not pinches:
        return straighten(ball, sections[0], (p_iid, p_xy), (q_iid, q_xy))
    geos = []
    cur_p = (p_iid, p_xy)
    for i, sec in enumerate(sections):
        if i < len(pinches):
            vid = pinches[i]
            end_iid = sec.visits[-1]
            cur_q = (end_iid, _corner_xy(ball, end_iid, vid))
        else:
            cur_q = (q_iid, q_xy)
        geos.append(straighten(ball, sec, cur_p, cur_q))
        if i < len(pinches):
            nxt_iid = sections[i + 1].visits[0]
            cur_p = (nxt_iid, _corner_xy(ball, nxt_iid, pinches[i]))
    return PathChain(geos, pinches)
