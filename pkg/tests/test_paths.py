"""Geodesic pipeline tests against closed-form distances.

Both tori are flat, so every distance equals a Euclidean distance between
lifts in the plane; the three-page complex is a union of flat squares along
one shared side, so crossings reduce to a reflection unfolding.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catzero.complexes import Point, bundled_complex, parse_complex
from catzero.develop import develop_ball
from catzero.geometry import point_in_convex
from catzero.paths import (
    Corridor,
    Geodesic,
    PathChain,
    funnel,
    shortest_geodesic,
    straighten,
)

from test_develop import BOWTIE, hex_lattice_dist

SQRT3 = math.sqrt(3.0)


# -- funnel ------------------------------------------------------------------


def test_funnel_straight_sleeve():
    portals = [((1.0, 1.0), (1.0, -1.0)), ((2.0, 1.0), (2.0, -1.0))]
    pts = funnel((0.0, 0.0), portals, (3.0, 0.0))
    assert len(pts) == 2
    assert np.allclose(pts[0][0], (0.0, 0.0))
    assert np.allclose(pts[1][0], (3.0, 0.0))


def test_funnel_bends_at_corner():
    # the sleeve narrows so the taut path wraps the left post at (1, 0)
    portals = [((1.0, 0.0), (1.0, -3.0)), ((1.0, 0.0), (4.0, 0.0))]
    pts = funnel((0.0, -1.0), portals, (2.0, 1.0))
    way = [p for p, _ in pts]
    assert len(pts) == 3
    assert np.allclose(way[1], (1.0, 0.0))
    pins = pts[1][1]
    assert [side for _, side in pins] == ["L", "L"]
    length = sum(
        float(np.hypot(*(np.asarray(b) - np.asarray(a))))
        for a, b in zip(way, way[1:])
    )
    expect = math.hypot(1.0, 1.0) + math.hypot(1.0, 1.0)
    assert abs(length - expect) < 1e-12


def test_funnel_alternating_pins():
    portals = [
        ((0.5, 0.2), (0.5, -2.0)),
        ((1.5, 2.0), (1.5, -0.2)),
        ((2.5, 0.2), (2.5, -2.0)),
    ]
    pts = funnel((0.0, 0.0), portals, (3.0, 0.0))
    way = [p for p, _ in pts]
    assert np.allclose(way[1], (0.5, 0.2))
    assert np.allclose(way[2], (1.5, -0.2))
    assert np.allclose(way[3], (2.5, 0.2))


# -- flat torus --------------------------------------------------------------


def grid_dist(p, q):
    best = math.inf
    for i in range(-4, 5):
        for j in range(-4, 5):
            best = min(best, math.hypot(q[0] + i - p[0], q[1] + j - p[1]))
    return best


@pytest.fixture(scope="module")
def torus_ball():
    spec = bundled_complex("torus")
    return develop_ball(spec, Point("sq", 0.5, 0.5), 2.8)


def ball_point_dist(ball, q_cell, q_xy):
    """Least geodesic length to any placed lift of a cell point."""
    best = math.inf
    geo = None
    for iid in ball.instances_of_cell(q_cell):
        if iid not in ball.placed:
            continue
        g = shortest_geodesic(
            ball, ball.sub, (ball.base_iid, ball.base.xy()), (iid, q_xy)
        )
        if g is not None and g.length < best:
            best, geo = g.length, g
    return best, geo


TORUS_PROBES = [
    (0.5, 0.5),
    (0.9, 0.1),
    (0.05, 0.95),
    (0.25, 0.5),
    (0.61803, 0.41421),
    (0.99, 0.5),
]


@pytest.mark.parametrize("qx,qy", TORUS_PROBES)
def test_torus_distances_match_lattice(torus_ball, qx, qy):
    expect = grid_dist((0.5, 0.5), (qx, qy))
    got, _ = ball_point_dist(torus_ball, "sq", (qx, qy))
    assert abs(got - expect) < 1e-9


@settings(max_examples=30, deadline=None)
@given(
    qx=st.floats(0.01, 0.99, allow_nan=False),
    qy=st.floats(0.01, 0.99, allow_nan=False),
)
def test_torus_distance_property(torus_ball, qx, qy):
    expect = grid_dist((0.5, 0.5), (qx, qy))
    got, _ = ball_point_dist(torus_ball, "sq", (qx, qy))
    assert abs(got - expect) < 1e-9


def test_torus_geodesic_endpoints_and_samples(torus_ball):
    ball = torus_ball
    got, geo = ball_point_dist(ball, "sq", (0.05, 0.95))
    iid0, xy0 = geo.point_at(0.0)
    assert iid0 == ball.base_iid
    assert np.allclose(xy0, (0.5, 0.5))
    iid1, xy1 = geo.point_at(geo.length)
    assert np.allclose(xy1, (0.05, 0.95))
    for s in np.linspace(0.0, geo.length, 17):
        iid, xy = geo.point_at(float(s))
        poly = ball.spec.cell(ball.instance_cell(iid)).points
        assert point_in_convex(poly, xy, tol=1e-7)


def test_torus_direction_of_straight_run(torus_ball):
    # q chosen so the geodesic leaves the base cell through its right side
    got, geo = ball_point_dist(torus_ball, "sq", (0.25, 0.5))
    # shortest lift is one step to the right: direction (0.75, 0)
    d = geo.direction_at_start()
    assert np.allclose(d / np.hypot(*d), (1.0, 0.0), atol=1e-9)
    assert abs(got - 0.75) < 1e-12


# -- hexagonal torus ---------------------------------------------------------


@pytest.fixture(scope="module")
def hexa_ball():
    spec = bundled_complex("hexagonal")
    return develop_ball(spec, Point("hexagon", 0.1, 0.05), 2.2)


HEX_PROBES = [
    (0.0, 0.0),
    (0.9, 0.0),
    (-0.4, 0.7),
    (0.3, -0.75),
    (-0.85, 0.1),
]


@pytest.mark.parametrize("qx,qy", HEX_PROBES)
def test_hexagonal_distances_match_lattice(hexa_ball, qx, qy):
    expect = hex_lattice_dist((0.1, 0.05), (qx, qy))
    got, _ = ball_point_dist(hexa_ball, "hexagon", (qx, qy))
    assert abs(got - expect) < 1e-9


def test_reroute_fixes_a_detour(hexa_ball):
    """A corridor that circles a vertex the long way must straighten out."""
    ball = hexa_ball
    dist, _ = ball._field()
    vid = next(
        v
        for v in ball.vertex_instances()
        if v in ball._saturated and ball._vertex_node_dist(dist, v) <= 1.6
    )
    cycle = ball.vertex_corner_cycle(vid)
    visits = [iid for iid, _ in cycle]
    crossings = []
    for (ia, ka), (ib, kb) in zip(cycle, cycle[1:]):
        ea = {
            ball.instance_side_edge(ia, (ka - 1) % 6),
            ball.instance_side_edge(ia, ka),
        }
        eb = {
            ball.instance_side_edge(ib, (kb - 1) % 6),
            ball.instance_side_edge(ib, kb),
        }
        crossings.append(sorted(ea & eb)[0])
    # endpoints near the shared vertex, in the first and last wedge
    ca = ball.spec.cell(ball.instance_cell(visits[0]))
    cb = ball.spec.cell(ball.instance_cell(visits[-1]))
    ka = ball.instance_corner_at(visits[0], vid)
    kb = ball.instance_corner_at(visits[-1], vid)
    pa = 0.8 * ca.points[ka] + 0.2 * ca.centroid()
    pb = 0.8 * cb.points[kb] + 0.2 * cb.centroid()
    geo = straighten(
        ball, Corridor(visits, crossings), (visits[0], pa), (visits[-1], pb)
    )
    # the straightened path crosses a single edge between the two wedges
    assert len(geo.corridor.crossings) == 1
    assert geo.length < 0.5


# -- three flat pages along a spine ------------------------------------------


@pytest.fixture(scope="module")
def book_ball():
    spec = bundled_complex("triplane")
    return develop_ball(spec, Point("page1", 24.0, 1.0), 20.0)


def test_book_places_all_three_pages(book_ball):
    cells = sorted(book_ball.instance_cell(i) for i in book_ball.placed)
    assert cells == ["page1", "page2", "page3"]


@pytest.mark.parametrize(
    "cell,qx,qy",
    [
        ("page2", 24.0, 5.0),
        ("page2", 10.0, 2.0),
        ("page3", 30.0, 0.5),
        ("page3", 38.0, 3.0),
    ],
)
def test_book_crossing_distances(book_ball, cell, qx, qy):
    # unfold the far page across the spine: reflect its y coordinate
    expect = math.hypot(qx - 24.0, qy + 1.0)
    got, geo = ball_point_dist(book_ball, cell, (qx, qy))
    assert abs(got - expect) < 1e-9
    assert isinstance(geo, Geodesic)
    assert len(geo.corridor.visits) == 2


def test_book_same_page_distance(book_ball):
    got, geo = ball_point_dist(book_ball, "page1", (30.0, 5.0))
    assert abs(got - math.hypot(6.0, 4.0)) < 1e-12
    assert len(geo.corridor.visits) == 1


# -- pinched pair of squares --------------------------------------------------


def test_pinch_distance_is_a_chain():
    spec = parse_complex(BOWTIE)
    ball = develop_ball(spec, Point("A", 0.5, 0.5), 2.0)
    biid = next(
        i for i in ball.placed if ball.instance_cell(i) == "B"
    )
    geo = shortest_geodesic(
        ball,
        ball.sub,
        (ball.base_iid, ball.base.xy()),
        (biid, (0.5, 0.5)),
    )
    assert isinstance(geo, PathChain)
    assert abs(geo.length - math.sqrt(2.0)) < 1e-9
    assert len(geo.sections) == 2
    # the junction is recorded with an uncontestable turn
    vids = [v for v, _, ang in geo.breakpoints if math.isinf(ang)]
    assert len(vids) == 1
    mid = geo.point_at(geo.length / 2)
    assert mid[0] in (ball.base_iid, biid)
