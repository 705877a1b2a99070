"""Random instance generators shared by the test modules."""
import numpy as np

from cdtdijkstra.encoding import CdtEncoding


def point_in_polygon(rng, poly):
    v = np.asarray(poly.vertices, dtype=float)
    w = rng.dirichlet(np.ones(len(v)))
    return tuple(w @ v)


def random_walk(rng, d, start, steps):
    """Reduced random walk (never re-crosses the cutline it just crossed)."""
    nodes, cuts = [start], []
    adj = d.graph.adjacency
    for _ in range(steps):
        opts = [(n, c) for n, c in adj[nodes[-1]] if not cuts or c != cuts[-1]]
        if not opts:
            break
        n, c = opts[rng.integers(len(opts))]
        nodes.append(n)
        cuts.append(c)
    return CdtEncoding(tuple(nodes), tuple(cuts))


def random_instance(rng, d, max_steps=12):
    """(encoding, x_s, x_e) with endpoints inside the walk's terminal polygons."""
    start = int(rng.integers(len(d.polygons)))
    enc = random_walk(rng, d, start, int(rng.integers(0, max_steps + 1)))
    xs = point_in_polygon(rng, d.polygons[enc.first])
    xe = point_in_polygon(rng, d.polygons[enc.last])
    return enc, xs, xe
