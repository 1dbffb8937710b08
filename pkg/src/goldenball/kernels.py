"""Hot loops: objectives, random neighbourhood moves, training, OX/HX.

Everything here is written in the subset of Python that numba compiles; with
acceleration disabled the very same functions run as plain Python.  Problems
are passed as a flat bundle ``(code, routed, mat, mat2, a, b, c, params)``:

========  =========================================================
code      problem (see the ``P_*`` constants)
routed    whether label 0 is a route separator
mat       cost matrix (valley matrix for AC-VRP)
mat2      peak-hour matrix (AC-VRP only, otherwise any 2-D array)
a, b      per-node float data (demand/delivery/size, pickup)
c         per-node int data (VRPB class, AC-VRP cluster id)
params    float parameters, layout documented per problem below
========  =========================================================
"""
import numpy as np

from ._jit import njit

P_TSP = 0
P_NQP = 1
P_BPP = 2
P_CVRP = 3
P_VRPB = 4
P_MATSP = 5
P_ACVRP = 6

TWO_OPT = 0
THREE_OPT = 1
VI_INTRA = 2
VI_INTER = 3
SWAP_INTRA = 4
SWAP_INTER = 5
MOVE_NAMES = ("2-opt", "3-opt", "vi-intra", "vi-inter", "swap-intra", "swap-inter")

FORBIDDEN_COST = 1e10

# AC-VRP params layout
ACV_Q = 0
ACV_START = 1
ACV_PEAK_START = 2
ACV_PEAK_END = 3
ACV_END = 4
ACV_MIN_PER_UNIT = 5
ACV_ENFORCE_END = 6


# ---------------------------------------------------------------------------
# objectives; each returns (cost, feasible)


@njit
def _tsp(g, mat):
    n = g.shape[0]
    s = 0.0
    for i in range(n - 1):
        s += mat[g[i], g[i + 1]]
    s += mat[g[n - 1], g[0]]
    return s


@njit
def _nqp(g):
    n = g.shape[0]
    hits = 0
    for i in range(n):
        for j in range(i + 1, n):
            if abs(g[i] - g[j]) == j - i:
                hits += 1
    return hits


@njit
def _bpp(g, sizes, cap):
    bins = 1
    acc = 0.0
    for i in range(g.shape[0]):
        s = sizes[g[i]]
        if acc + s > cap:
            bins += 1
            acc = s
        else:
            acc += s
    return bins


@njit
def _cvrp(g, mat, dem, cap):
    cost = 0.0
    feas = True
    prev = 0
    load = 0.0
    for i in range(g.shape[0]):
        v = g[i]
        if v == 0:
            if prev != 0:
                cost += mat[prev, 0]
            if load > cap:
                feas = False
            prev = 0
            load = 0.0
        else:
            cost += mat[prev, v]
            load += dem[v]
            prev = v
    if prev != 0:
        cost += mat[prev, 0]
    if load > cap:
        feas = False
    return cost, feas


@njit
def _vrpb(g, mat, dlv, pck, cls, cap):
    # cls: 1 linehaul, 2 backhaul
    cost = 0.0
    feas = True
    prev = 0
    dsum = 0.0
    psum = 0.0
    seen_back = False
    for i in range(g.shape[0] + 1):
        v = 0 if i == g.shape[0] else g[i]
        if v == 0:
            if prev != 0:
                cost += mat[prev, 0]
            if dsum > cap or psum > cap:
                feas = False
            prev = 0
            dsum = 0.0
            psum = 0.0
            seen_back = False
        else:
            cost += mat[prev, v]
            if cls[v] == 2:
                seen_back = True
                psum += pck[v]
            else:
                if seen_back:
                    feas = False
                dsum += dlv[v]
            prev = v
    return cost, feas


@njit
def _matsp(g, mat, k, qmax):
    # routes counted with empties: exactly k non-empty routes of <= qmax
    cost = 0.0
    feas = True
    prev = 0
    length = 0
    routes = 0
    for i in range(g.shape[0] + 1):
        v = 0 if i == g.shape[0] else g[i]
        if v == 0:
            routes += 1
            if length == 0 or length > qmax:
                feas = False
            if prev != 0:
                cost += mat[prev, 0]
            prev = 0
            length = 0
        else:
            cost += mat[prev, v]
            length += 1
            prev = v
    if routes != k:
        feas = False
    return cost, feas


@njit
def _acvrp_route(g, s, e, mat, peak, dlv, pck, params):
    """Price one route g[s:e] and check its load, arcs and clock."""
    cap = params[ACV_Q]
    clock = params[ACV_START]
    pk0 = params[ACV_PEAK_START]
    pk1 = params[ACV_PEAK_END]
    mpu = params[ACV_MIN_PER_UNIT]
    feas = True
    load = 0.0
    for i in range(s, e):
        load += dlv[g[i]]
    if load > cap:
        feas = False
    cost = 0.0
    prev = 0
    for i in range(s, e + 1):
        v = 0 if i == e else g[i]
        if clock >= pk0 and clock < pk1:
            leg = peak[prev, v]
        else:
            leg = mat[prev, v]
        if leg >= FORBIDDEN_COST:
            feas = False
        cost += leg
        clock += leg * mpu
        if v != 0:
            load += pck[v] - dlv[v]
            if load > cap:
                feas = False
        prev = v
    if params[ACV_ENFORCE_END] > 0.0 and clock > params[ACV_END]:
        feas = False
    return cost, feas


@njit
def _acvrp(g, mat, peak, dlv, pck, clus, params):
    n = g.shape[0]
    n_clusters = 0
    for i in range(clus.shape[0]):
        if clus[i] + 1 > n_clusters:
            n_clusters = clus[i] + 1
    owner = np.full(n_clusters, -1, dtype=np.int64)
    cost = 0.0
    feas = True
    route = 0
    s = 0
    for i in range(n + 1):
        if i == n or g[i] == 0:
            if i > s:
                rc, rf = _acvrp_route(g, s, i, mat, peak, dlv, pck, params)
                cost += rc
                if not rf:
                    feas = False
                for j in range(s, i):
                    cl = clus[g[j]]
                    if owner[cl] == -1:
                        owner[cl] = route
                    elif owner[cl] != route:
                        feas = False
            route += 1
            s = i + 1
    return cost, feas


@njit
def objective(code, g, mat, mat2, a, b, c, params):
    """Cost and feasibility of genotype ``g`` for problem ``code``."""
    if code == P_TSP:
        return _tsp(g, mat), True
    if code == P_NQP:
        return float(_nqp(g)), True
    if code == P_BPP:
        return float(_bpp(g, a, params[0])), True
    if code == P_CVRP:
        return _cvrp(g, mat, a, params[0])
    if code == P_VRPB:
        return _vrpb(g, mat, a, b, c, params[0])
    if code == P_MATSP:
        return _matsp(g, mat, int(params[0]), int(params[1]))
    return _acvrp(g, mat, mat2, a, b, c, params)


@njit
def fitness(code, g, mat, mat2, a, b, c, params):
    """Objective for search: ``inf`` when infeasible."""
    f, ok = objective(code, g, mat, mat2, a, b, c, params)
    if not ok:
        return np.inf
    return f


# ---------------------------------------------------------------------------
# deterministic move primitives (write into ``out``, same length as ``g``)


@njit
def reverse_into(g, i, j, out):
    out[:] = g
    while i < j:
        t = out[i]
        out[i] = out[j]
        out[j] = t
        i += 1
        j -= 1


@njit
def three_opt_into(g, c1, c2, c3, variant, out):
    """Reconnect segments B=g[c1+1:c2+1], C=g[c2+1:c3+1] (cuts are 'after' positions).

    Variants: 0 (B',C) 1 (B,C') 2 (B',C') 3 (C,B) 4 (C',B) 5 (C,B') 6 (C',B').
    """
    out[:] = g
    b0 = c1 + 1
    b1 = c2 + 1
    c0 = c2 + 1
    cend = c3 + 1
    lb = b1 - b0
    lc = cend - c0
    first_c = variant >= 3
    rev_b = variant == 0 or variant == 2 or variant == 5 or variant == 6
    rev_c = variant == 1 or variant == 2 or variant == 4 or variant == 6
    k = b0
    for part in range(2):
        use_c = (part == 0) == first_c
        if use_c:
            for t in range(lc):
                out[k] = g[cend - 1 - t] if rev_c else g[c0 + t]
                k += 1
        else:
            for t in range(lb):
                out[k] = g[b1 - 1 - t] if rev_b else g[b0 + t]
                k += 1


@njit
def insert_into(g, frm, to, out):
    """Remove g[frm] and reinsert it so that it lands at index ``to``."""
    v = g[frm]
    out[:] = g
    if frm < to:
        for k in range(frm, to):
            out[k] = g[k + 1]
    else:
        for k in range(to, frm):
            out[k + 1] = g[k]
    out[to] = v


@njit
def swap_into(g, i, j, out):
    out[:] = g
    out[i] = g[j]
    out[j] = g[i]


# ---------------------------------------------------------------------------
# random moves


@njit
def _route_bounds(g, p, routed):
    n = g.shape[0]
    if not routed:
        return 0, n
    s = p
    while s > 0 and g[s - 1] != 0:
        s -= 1
    e = p
    while e < n and g[e] != 0:
        e += 1
    return s, e


@njit
def _random_customer(g, routed, gen):
    n = g.shape[0]
    while True:
        p = gen.integers(0, n)
        if not routed or g[p] != 0:
            return p


@njit
def _distinct_in(gen, s, e, avoid):
    # uniform over [s, e) minus ``avoid``
    j = s + gen.integers(0, e - s - 1)
    if j >= avoid:
        j += 1
    return j


@njit
def random_move(move, routed, g, out, gen):
    """Apply ``move`` with random arguments; False when no legal move exists."""
    n = g.shape[0]
    if n < 2:
        return False
    if not routed and (move == VI_INTER or move == SWAP_INTER):
        move = VI_INTRA if move == VI_INTER else SWAP_INTRA
    p = _random_customer(g, routed, gen)
    s, e = _route_bounds(g, p, routed)
    ln = e - s
    if move == TWO_OPT:
        if ln < 2:
            return False
        q = _distinct_in(gen, s, e, p)
        if q < p:
            reverse_into(g, q, p, out)
        else:
            reverse_into(g, p, q, out)
        return True
    if move == THREE_OPT:
        if ln < 3:
            return False
        x = s + gen.integers(0, ln)
        y = s + gen.integers(0, ln - 1)
        if y >= x:
            y += 1
        z = s + gen.integers(0, ln - 2)
        lo = min(x, y)
        hi = max(x, y)
        if z >= lo:
            z += 1
        if z >= hi:
            z += 1
        c1 = min(x, min(y, z))
        c3 = max(x, max(y, z))
        c2 = x + y + z - c1 - c3
        three_opt_into(g, c1, c2, c3, gen.integers(0, 7), out)
        return True
    if move == VI_INTRA:
        if ln < 2:
            return False
        insert_into(g, p, _distinct_in(gen, s, e, p), out)
        return True
    if move == SWAP_INTRA:
        if ln < 2:
            return False
        swap_into(g, p, _distinct_in(gen, s, e, p), out)
        return True
    if move == VI_INTER:
        n_routes = 1
        for k in range(n):
            if g[k] == 0:
                n_routes += 1
        if n_routes < 2:
            return False
        own = 0
        for k in range(s):
            if g[k] == 0:
                own += 1
        t = gen.integers(0, n_routes - 1)
        if t >= own:
            t += 1
        # locate route t: [ts, te)
        r = 0
        ts = 0
        while r < t:
            if g[ts] == 0:
                r += 1
            ts += 1
        te = ts
        while te < n and g[te] != 0:
            te += 1
        slot = ts + gen.integers(0, te - ts + 1)  # insert before original index slot
        to = slot if slot < p else slot - 1
        insert_into(g, p, to, out)
        return True
    # SWAP_INTER
    n_cust = 0
    for k in range(n):
        if g[k] != 0:
            n_cust += 1
    m = n_cust - ln
    if m <= 0:
        return False
    k = gen.integers(0, m)
    for q in range(n):
        if g[q] != 0 and (q < s or q >= e):
            if k == 0:
                swap_into(g, p, q, out)
                return True
            k -= 1
    return False


# ---------------------------------------------------------------------------
# training session


@njit
def train(code, routed, move, g, f, budget, gen, mat, mat2, a, b, c, params):
    """First-improvement hill climbing with one move kind.

    Stops after ``budget`` consecutive candidates without a strict
    improvement.  Returns ``(genotype, f, evaluations, eval_index_of_last_improvement)``
    where the index is 0 when nothing improved.
    """
    cur = g.copy()
    cand = np.empty_like(g)
    fails = 0
    evals = 0
    last = 0
    while fails < budget:
        if not random_move(move, routed, cur, cand, gen):
            fails += 1
            continue
        fc = fitness(code, cand, mat, mat2, a, b, c, params)
        evals += 1
        if fc < f:
            tmp = cur
            cur = cand
            cand = tmp
            f = fc
            fails = 0
            last = evals
        else:
            fails += 1
    return cur, f, evals, last


@njit
def mutate(code, routed, move, g, gen, mat, mat2, a, b, c, params):
    """One random move (no acceptance test); returns (child, f, evaluated)."""
    out = np.empty_like(g)
    if not random_move(move, routed, g, out, gen):
        return g.copy(), 0.0, False
    return out, fitness(code, out, mat, mat2, a, b, c, params), True


# ---------------------------------------------------------------------------
# crossovers on pure permutations


@njit
def _ox_child(keep, other, cut1, cut2):
    n = keep.shape[0]
    lo = keep.min()
    used = np.zeros(keep.max() - lo + 1, dtype=np.bool_)
    child = np.empty_like(keep)
    for i in range(cut1, cut2):
        child[i] = keep[i]
        used[keep[i] - lo] = True
    pos = cut2 % n
    for t in range(n):
        v = other[(cut2 + t) % n]
        if not used[v - lo]:
            child[pos] = v
            used[v - lo] = True
            pos = (pos + 1) % n
    return child


@njit
def ox(p1, p2, cut1, cut2):
    """Order crossover; segment [cut1, cut2) kept in place."""
    return _ox_child(p1, p2, cut1, cut2), _ox_child(p2, p1, cut1, cut2)


@njit
def _hx_child(keep, other):
    n = keep.shape[0]
    mid = n // 2
    lo = keep.min()
    used = np.zeros(keep.max() - lo + 1, dtype=np.bool_)
    child = np.empty_like(keep)
    for i in range(mid):
        child[i] = keep[i]
        used[keep[i] - lo] = True
    k = mid
    for t in range(n):
        v = other[t]
        if not used[v - lo]:
            child[k] = v
            used[v - lo] = True
            k += 1
    return child


@njit
def hx(p1, p2):
    """Half crossover: first floor(n/2) genes kept, rest in the other parent's order."""
    return _hx_child(p1, p2), _hx_child(p2, p1)
