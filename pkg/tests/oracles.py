"""Independent reference computations used to freeze expected test values.

None of these call into the package: areas come from integrating the arc
length of a circle clipped to the fundamental square, and spanning trees
from brute-force enumeration.
"""

import itertools
import math

import numpy as np
from scipy import integrate


def clipped_arc_length(s, L):
    """Length of the circle of radius s (centred in an L-square) inside the square."""
    h = L / 2
    if s <= h:
        return 2 * math.pi * s
    if s >= h * math.sqrt(2):
        return 0.0
    return 8 * s * (math.pi / 4 - math.acos(h / s))


def ball_area_by_arcs(r, L):
    h = L / 2
    pts = [0.0, min(r, h), r]
    return sum(integrate.quad(clipped_arc_length, a, b, args=(L,), epsabs=1e-13, epsrel=1e-13)[0]
               for a, b in zip(pts, pts[1:]) if b > a)


def density_mass(r, beta, L):
    """Integral of (A(d)+1)^-beta over torus points within distance r."""
    h = L / 2
    f = lambda s: clipped_arc_length(s, L) * (ball_area_by_arcs(s, L) + 1.0) ** -beta
    pts = [0.0, min(r, h), r]
    return sum(integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-11, limit=200)[0]
               for a, b in zip(pts, pts[1:]) if b > a)


def torus_dist(a, b, L):
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    dx = min(dx, L - dx)
    dy = min(dy, L - dy)
    return math.hypot(dx, dy)


def prufer_to_edges(seq, k):
    degree = [1] * k
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(k) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(k) if degree[i] == 1]
    edges.append((u, v))
    return edges


def cayley_min_spanning_length(points, L):
    """Minimum over all k^(k-2) labeled spanning trees (Prufer enumeration)."""
    k = len(points)
    if k < 2:
        return 0.0
    if k == 2:
        return torus_dist(points[0], points[1], L)
    d = [[torus_dist(points[i], points[j], L) for j in range(k)] for i in range(k)]
    best = math.inf
    for seq in itertools.product(range(k), repeat=k - 2):
        total = math.fsum(d[a][b] for a, b in prufer_to_edges(seq, k))
        best = min(best, total)
    return best


def linear_scan_nearest(p, positions, L):
    d = [torus_dist(p, q, L) for q in positions]
    return int(np.argmin(d)), min(d)
