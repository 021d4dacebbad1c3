"""Compiled inner loops: degree sampling, stub matching, CSR assembly and the outbreak BFS.

Every kernel draws from a ``numpy.random.Generator`` passed in by the caller.
Only ``Generator.random()`` is used inside loops; uniform indices are taken as
``int(random() * k)`` (bias below 1e-9 for the sizes used here).
"""
import numpy as np
from numba import njit

POLICY_NODE = -1
POLICY_RANDOM = 0
POLICY_MASKED = 1
POLICY_UNMASKED = 2


@njit(cache=True)
def _index(rng, k):
    i = int(rng.random() * k)
    return i if i < k else k - 1


@njit(cache=True)
def _draw(rng, cdf, support):
    # inverse-CDF lookup on the (truncated) pmf table
    i = np.searchsorted(cdf, rng.random(), side="right")
    if i >= support.size:
        i = support.size - 1
    return support[i]


@njit(cache=True)
def sample_degrees(rng, cdf, support, n):
    deg = np.empty(n, np.int64)
    total = 0
    for i in range(n):
        d = _draw(rng, cdf, support)
        deg[i] = d
        total += d
    while total % 2 == 1:
        j = _index(rng, n)
        total -= deg[j]
        deg[j] = _draw(rng, cdf, support)
        total += deg[j]
    return deg


@njit(cache=True)
def _types(rng, n, m):
    types = np.empty(n, np.int8)
    for i in range(n):
        types[i] = 1 if rng.random() < m else 2
    return types


@njit(cache=True)
def _pick_patient_zero(rng, types, policy, p0):
    n = types.size
    if policy == POLICY_RANDOM:
        p0 = _index(rng, n)
    elif policy == POLICY_MASKED or policy == POLICY_UNMASKED:
        p0 = _index(rng, n)
        while types[p0] != policy:
            p0 = _index(rng, n)
    return p0


@njit(cache=True)
def build(rng, cdf, support, n, m):
    """Draw degrees, mask labels (1 masked, 2 unmasked) and a uniform stub matching."""
    deg = sample_degrees(rng, cdf, support, n)
    types = _types(rng, n, m)
    total = 0
    for i in range(n):
        total += deg[i]
    stubs = np.empty(total, np.int32)
    pos = 0
    for i in range(n):
        for _ in range(deg[i]):
            stubs[pos] = i
            pos += 1
    for i in range(total - 1, 0, -1):
        j = _index(rng, i + 1)
        t = stubs[i]
        stubs[i] = stubs[j]
        stubs[j] = t
    n_edges = total // 2
    eu = np.empty(n_edges, np.int32)
    ev = np.empty(n_edges, np.int32)
    for e in range(n_edges):
        eu[e] = stubs[2 * e]
        ev[e] = stubs[2 * e + 1]
    return types, eu, ev


@njit(cache=True)
def csr(n, eu, ev):
    """Neighbour lists in CSR form; a self-loop lists its node twice."""
    counts = np.zeros(n + 1, np.int64)
    for e in range(eu.size):
        counts[eu[e] + 1] += 1
        counts[ev[e] + 1] += 1
    offsets = np.cumsum(counts)
    fill = offsets[:-1].copy()
    nbrs = np.empty(offsets[n], np.int32)
    slot_edge = np.empty(offsets[n], np.int32)
    for e in range(eu.size):
        u = eu[e]
        v = ev[e]
        nbrs[fill[u]] = v
        slot_edge[fill[u]] = e
        fill[u] += 1
        nbrs[fill[v]] = u
        slot_edge[fill[v]] = e
        fill[v] += 1
    return offsets, nbrs, slot_edge


@njit(cache=True)
def outbreak(rng, offsets, nbrs, slot_edge, n_edges, types, T, policy, p0, undirected):
    """Run one SIR outbreak to extinction.

    Returns (patient_zero, infected_type1, infected_type2, state) where state[v] is 1
    for every node ever infected.
    """
    n = types.size
    p0 = _pick_patient_zero(rng, types, policy, p0)
    coins = np.empty(0)
    if undirected:
        coins = rng.random(n_edges)

    state = np.zeros(n, np.uint8)
    queue = np.empty(n, np.int32)
    state[p0] = 1
    queue[0] = p0
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        tu = types[u] - 1
        for slot in range(offsets[u], offsets[u + 1]):
            v = nbrs[slot]
            if state[v]:
                continue
            if undirected:
                r = coins[slot_edge[slot]]
            else:
                r = rng.random()
            if r < T[tu, types[v] - 1]:
                state[v] = 1
                queue[tail] = v
                tail += 1
    c1 = 0
    for i in range(tail):
        if types[queue[i]] == 1:
            c1 += 1
    return p0, c1, tail - c1, state


@njit(cache=True)
def lazy_outbreak(rng, cdf, support, n, m, T, policy):
    """One outbreak on a fresh configuration-model network matched on demand.

    Degrees and labels are drawn for all nodes, but a stub is only paired (with
    a uniformly random unpaired stub) when its owner becomes infected. Pairing
    stubs one at a time this way yields a uniform random matching, so the
    outbreak has the same law as on a fully built network.

    Returns (patient_zero, p0_type, infected_type1, infected_type2, n_type1).
    """
    deg = sample_degrees(rng, cdf, support, n)
    types = _types(rng, n, m)
    n1 = 0
    for i in range(n):
        if types[i] == 1:
            n1 += 1
    p0 = _pick_patient_zero(rng, types, policy, 0)

    first = np.empty(n + 1, np.int64)
    first[0] = 0
    for i in range(n):
        first[i + 1] = first[i] + deg[i]
    total = first[n]
    owner = np.empty(total, np.int32)
    pool = np.empty(total, np.int32)   # unpaired stub ids, in pool[:size]
    pos = np.empty(total, np.int32)    # index of each stub in pool, -1 once paired
    for i in range(n):
        for st in range(first[i], first[i + 1]):
            owner[st] = i
    for st in range(total):
        pool[st] = st
        pos[st] = st
    size = total

    state = np.zeros(n, np.uint8)
    queue = np.empty(n, np.int32)
    state[p0] = 1
    queue[0] = p0
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        tu = types[u] - 1
        for st in range(first[u], first[u + 1]):
            i = pos[st]
            if i < 0:
                continue  # paired earlier by an already-infected node
            last = pool[size - 1]
            pool[i] = last
            pos[last] = i
            pos[st] = -1
            size -= 1
            r = _index(rng, size)
            w = pool[r]
            last = pool[size - 1]
            pool[r] = last
            pos[last] = r
            pos[w] = -1
            size -= 1
            v = owner[w]
            if state[v]:
                continue
            if rng.random() < T[tu, types[v] - 1]:
                state[v] = 1
                queue[tail] = v
                tail += 1
    c1 = 0
    for i in range(tail):
        if types[queue[i]] == 1:
            c1 += 1
    return p0, types[p0], c1, tail - c1, n1
