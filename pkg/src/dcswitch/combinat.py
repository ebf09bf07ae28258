"""Combinatorial kernels on the complete bipartite graph of an N x N switch.

All solvers compare weights with plain Python arithmetic, so integer and
``Fraction`` inputs are optimised exactly. Zero-weight edges are never part
of a returned selection.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import FrameSchedule, InfeasibleError, ValidationError, empty_matching

_INF = float("inf")


def _weights(w) -> list[list]:
    arr = np.asarray(w)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"weight matrix must be square, got shape {arr.shape}")
    rows = arr.tolist()
    for row in rows:
        for x in row:
            if x < 0:
                raise ValidationError("weights must be nonnegative")
    return rows


def _check_bound(t: int, name: str = "t") -> None:
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)) or t < 1:
        raise ValidationError(f"{name} must be a positive integer, got {t!r}")


def selection_weight(w, selection) -> object:
    """Sum of ``w`` over the ones of a 0/1 selection, in the weights' own arithmetic."""
    rows = _weights(w)
    sel = np.asarray(selection)
    return sum((rows[i][j] for i, j in zip(*np.nonzero(sel))), 0)


def max_weight_matching(w) -> np.ndarray:
    """Maximum-weight matching of the bipartite graph with edge weights ``w``.

    Shortest-augmenting-path Hungarian method on costs ``-w``. Because weights
    are nonnegative a maximum-weight perfect assignment is also a maximum
    weight matching; assignments of zero weight are dropped afterwards.
    Rows are inserted in index order and columns scanned left to right, which
    fixes the tie-break deterministically.
    """
    rows = _weights(w)
    n = len(rows)
    # 1-based arrays; column 0 is the virtual root of each augmentation tree.
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = 0
            row = rows[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = -row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    m = empty_matching(n)
    for j in range(1, n + 1):
        i = p[j] - 1
        if rows[i][j - 1] > 0:
            m[i, j - 1] = 1
    return m


def max_weight_degree_constrained_subgraph(w, t: int) -> np.ndarray:
    """Max-weight 0/1 selection with every row and column sum at most ``t``.

    Solved as min-cost flow: source -> input (capacity t), input -> output
    (capacity 1, cost -w, positive weights only), output -> sink (capacity t).
    Successive shortest paths with Dijkstra on reduced costs; augmentation
    stops as soon as the best path no longer strictly increases the weight.
    Flow integrality makes the result an exact optimum.
    """
    _check_bound(t)
    rows = _weights(w)
    n = len(rows)
    src, sink = 0, 2 * n + 1
    size = 2 * n + 2
    # inputs are nodes 1..n, outputs n+1..2n
    sel = [[False] * n for _ in range(n)]
    out_flow = [0] * n  # flow source -> input i
    in_flow = [0] * n  # flow output j -> sink

    # Initial potentials: exact shortest distances in the acyclic start graph.
    pot = [0] * size
    for j in range(n):
        col = [-rows[i][j] for i in range(n) if rows[i][j] > 0]
        pot[n + 1 + j] = min(col) if col else 0
    pot[sink] = min([0] + pot[n + 1 : 2 * n + 1])

    while True:
        dist = [_INF] * size
        prev = [-1] * size
        done = [False] * size
        dist[src] = 0
        while True:
            x = -1
            best = _INF
            for k in range(size):
                if not done[k] and dist[k] < best:
                    best = dist[k]
                    x = k
            if x < 0:
                break
            done[x] = True
            dx = dist[x]
            px = pot[x]
            if x == src:
                for i in range(n):
                    if out_flow[i] < t:
                        y = 1 + i
                        nd = dx + px - pot[y]
                        if nd < dist[y]:
                            dist[y], prev[y] = nd, x
            elif x <= n:
                i = x - 1
                if out_flow[i] > 0:
                    nd = dx + px - pot[src]
                    if nd < dist[src]:
                        dist[src], prev[src] = nd, x
                row = rows[i]
                for j in range(n):
                    if not sel[i][j] and row[j] > 0:
                        y = n + 1 + j
                        nd = dx + px - row[j] - pot[y]
                        if nd < dist[y]:
                            dist[y], prev[y] = nd, x
            elif x < sink:
                j = x - n - 1
                for i in range(n):
                    if sel[i][j]:
                        y = 1 + i
                        nd = dx + px + rows[i][j] - pot[y]
                        if nd < dist[y]:
                            dist[y], prev[y] = nd, x
                if in_flow[j] < t:
                    nd = dx + px - pot[sink]
                    if nd < dist[sink]:
                        dist[sink], prev[sink] = nd, x
            else:
                for j in range(n):
                    if in_flow[j] > 0:
                        y = n + 1 + j
                        nd = dx + px - pot[y]
                        if nd < dist[y]:
                            dist[y], prev[y] = nd, x
        if dist[sink] == _INF:
            break
        path_cost = dist[sink] + pot[sink] - pot[src]
        if path_cost >= 0:
            break
        for k in range(size):
            if dist[k] != _INF:
                pot[k] += dist[k]
        y = sink
        while y != src:
            x = prev[y]
            if x == src:
                out_flow[y - 1] += 1
            elif y == src:
                out_flow[x - 1] -= 1
            elif y == sink:
                in_flow[x - n - 1] += 1
            elif x == sink:
                in_flow[y - n - 1] -= 1
            elif x <= n:
                sel[x - 1][y - n - 1] = True
            else:
                sel[y - 1][x - n - 1] = False
            y = x

    return np.array(sel, dtype=np.int8).reshape(n, n)


def edge_color_bipartite(edges: Sequence[tuple[int, int]], max_colors: int) -> list[int]:
    """Proper edge colouring of a bipartite multigraph with colours ``0..max_colors-1``.

    ``edges`` are (input, output) pairs; the returned list gives each edge's
    colour in input order. Uses alternating-path recolouring, so no more than
    the maximum degree of colours is ever used.
    """
    _check_bound(max_colors, "max_colors")
    edges = [(int(a), int(b)) for a, b in edges]
    deg_l: dict[int, int] = {}
    deg_r: dict[int, int] = {}
    for a, b in edges:
        deg_l[a] = deg_l.get(a, 0) + 1
        deg_r[b] = deg_r.get(b, 0) + 1
    delta = max(list(deg_l.values()) + list(deg_r.values()) + [0])
    if delta > max_colors:
        raise InfeasibleError(f"maximum degree {delta} exceeds {max_colors} colours")

    # at[side][node] maps colour -> edge index; side 0 = inputs, 1 = outputs
    at: tuple[dict, dict] = ({}, {})
    color = [-1] * len(edges)

    def first_free(side, node):
        used = at[side].get(node, {})
        c = 0
        while c in used:
            c += 1
        return c

    for e, (a, b) in enumerate(edges):
        ca = first_free(0, a)
        cb = first_free(1, b)
        if ca not in at[1].get(b, {}):
            c = ca
        elif cb not in at[0].get(a, {}):
            c = cb
        else:
            # Walk the ca/cb alternating path out of b and swap its colours;
            # the path cannot reach a, so ca becomes free at both ends.
            path = []
            side, node, c = 1, b, ca
            while c in at[side].get(node, {}):
                f = at[side][node][c]
                path.append(f)
                fa, fb = edges[f]
                side, node = (0, fa) if side == 1 else (1, fb)
                c = cb if c == ca else ca
            for f in path:
                fa, fb = edges[f]
                del at[0][fa][color[f]]
                del at[1][fb][color[f]]
            for f in path:
                fa, fb = edges[f]
                color[f] = cb if color[f] == ca else ca
                at[0][fa][color[f]] = f
                at[1][fb][color[f]] = f
            c = ca
        color[e] = c
        at[0].setdefault(a, {})[c] = e
        at[1].setdefault(b, {})[c] = e
    return color


def decompose_subpermutation(m, k: int) -> list[np.ndarray]:
    """Split a 0/1 matrix with line sums <= k into exactly k disjoint matchings."""
    _check_bound(k, "k")
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or not np.all((arr == 0) | (arr == 1)):
        raise ValidationError("expected a square 0/1 matrix")
    n = arr.shape[0]
    positions = list(zip(*np.nonzero(arr)))
    colors = edge_color_bipartite(positions, k)
    out = [empty_matching(n) for _ in range(k)]
    for (i, j), c in zip(positions, colors):
        out[c][i, j] = 1
    return out


def solve_t_disjoint_max_weight(w, t: int) -> FrameSchedule:
    """Optimal T-disjoint matching: degree-bounded selection, then edge colouring.

    The selection has maximum degree at most ``t``, so it splits into ``t``
    matchings (padded with empty ones) covering exactly the selected edges.
    """
    c = max_weight_degree_constrained_subgraph(w, t)
    return FrameSchedule(tuple(decompose_subpermutation(c, t)))


def greedy_iterative_mwm(w, t: int) -> FrameSchedule:
    """Baseline: take a max-weight matching ``t`` times, deleting used edges.

    Deleted edges are zeroed, which removes them from later iterations since
    zero-weight edges are never selected. Possibly suboptimal.
    """
    _check_bound(t)
    residual = _weights(w)
    out = []
    for _ in range(t):
        m = max_weight_matching(residual)
        for i, j in zip(*np.nonzero(m)):
            residual[i][j] = 0
        out.append(m)
    return FrameSchedule(tuple(out))


def incidence_matrix(n: int) -> np.ndarray:
    """2N x N^2 incidence matrix of K_{N,N}; rows are inputs then outputs, edge (i, j) at column i*N + j."""
    L = np.zeros((2 * n, n * n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            L[i, i * n + j] = 1
            L[n + j, i * n + j] = 1
    return L


def build_appendix_b_matrix(n: int, t: int) -> np.ndarray:
    """Constraint matrix of the relaxed T-disjoint matching LP.

    Variables b[t][i][j] are vectorised with j fastest, then i, then t. The
    first 2NT rows hold one block-diagonal incidence matrix per slot; the last
    N^2 rows tie every position across slots.
    """
    _check_bound(n, "n")
    _check_bound(t)
    L = incidence_matrix(n)
    top = np.kron(np.eye(t, dtype=np.int64), L)
    bottom = np.tile(np.eye(n * n, dtype=np.int64), (1, t))
    return np.vstack([top, bottom])


def integer_determinant(a) -> int:
    """Exact determinant of an integer matrix (fraction-free Bareiss elimination)."""
    m = [[int(x) for x in row] for row in np.asarray(a).tolist()]
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValidationError("determinant needs a square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1
