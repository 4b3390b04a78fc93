"""Shared numeric tolerances.

All comparisons in the package funnel through these constants so a run
can be audited against a single table.
"""

# Exact-arithmetic surrogates: differences below this are treated as zero
# when comparing coordinates, angles and isometry entries.
GEOM_TOL = 1e-9

# Convergence threshold for iterative geodesic straightening, in length units.
LENGTH_EPS = 1e-6

# Tolerance for checking that a region of a complex is isometric to a piece
# of the Euclidean plane (distance spot checks inside flat charts).
FLAT_TOL = 1e-7

# Stabilization threshold for upper-angle probes: stop once two successive
# probe scales agree to this.
ANGLE_STAB_TOL = 1e-4

# Smallest probe scale used for angle measurement, as a fraction of the
# shorter side. 2**-14 of the side keeps the comparison triangle well above
# float noise while being far smaller than any cell.
ANGLE_PROBE_MIN = 2.0 ** -14

# Relative subdivision pitch for the boundary graph used to initialize
# geodesics: h = GEODESIC_PITCH * (shortest edge length).
GEODESIC_PITCH = 0.05

# Iteration cap for geodesic straightening. Hitting it raises; it does not
# silently return an uncertified path.
STRAIGHTEN_MAX_ROUNDS = 100
