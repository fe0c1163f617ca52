"""Compiled cores for exact collision resolution.

All cores share one execution routine so the event-driven resolver, the
stats-only Monte Carlo core, and the quadratic rescan oracle produce
identical dynamics.  Entities live in a doubly-linked list indexed by site;
the event-driven cores keep a binary min-heap of candidate adjacent-pair
collision times with lazy invalidation through the `alive` flags.  Exact
time ties resolve leftmost-position-first; a tie among three or more
mutually-involved entities raises.
"""

import numpy as np
from numba import njit

# Continuous spacings make a multi-way tie a measure-zero event, so this only
# fires on hand-crafted degenerate fixtures.
TIE_MESSAGE = "simultaneous collision tie involving three or more entities"

_TIE_BUF = 64


@njit(cache=True, nogil=True, inline="always")
def _pair_time(pos, vel, a, b):
    """Meeting time of adjacent entities a (left) and b, or -1.0 if diverging."""
    dv = vel[a] - vel[b]
    if dv <= 0:
        return -1.0
    return (pos[b] - pos[a]) / dv


@njit(cache=True, nogil=True, inline="always")
def _sift_down(ht, hq, start, end):
    i = start
    t = ht[i]
    q = hq[i]
    while True:
        c = 2 * i + 1
        if c >= end:
            break
        if c + 1 < end and ht[c + 1] < ht[c]:
            c += 1
        if ht[c] >= t:
            break
        ht[i] = ht[c]
        hq[i] = hq[c]
        i = c
    ht[i] = t
    hq[i] = q


@njit(cache=True, nogil=True, inline="always")
def _heap_push(ht, hq, size, t, q):
    i = size
    while i > 0:
        up = (i - 1) >> 1
        if ht[up] <= t:
            break
        ht[i] = ht[up]
        hq[i] = hq[up]
        i = up
    ht[i] = t
    hq[i] = q
    return size + 1


@njit(cache=True, nogil=True)
def _build_list(pos, vel, mult, alive, rem, nxt, prv):
    """Thread live sites (arrows and nonempty clusters) into a linked list.

    Returns (head, initial arrow count, initial blockade-unit count)."""
    n = pos.shape[0]
    head = np.int32(-1)
    tail = np.int32(-1)
    arrows0 = 0
    units0 = 0
    for i in range(n):
        if vel[i] != 0:
            arrows0 += 1
        else:
            units0 += mult[i]
        if vel[i] != 0 or mult[i] > 0:
            alive[i] = 1
            rem[i] = mult[i]
            if tail >= 0:
                nxt[tail] = i
                prv[i] = tail
            else:
                head = np.int32(i)
            tail = np.int32(i)
    return head, arrows0, units0


@njit(cache=True, nogil=True, inline="always")
def _execute(pos, vel, alive, rem, nxt, prv, a, b):
    """Carry out the collision of adjacent pair (a, b).

    Returns (code, u, v): code 0 for arrow-arrow, 1 for arrow-cluster, and
    (u, v) the newly adjacent pair whose candidate collision the caller may
    need to schedule (-1, -1 if none)."""
    va = vel[a]
    vb = vel[b]
    u = np.int32(-1)
    v = np.int32(-1)
    if va == 1 and vb == -1:
        # arrow-arrow: both vanish
        code = 0
        alive[a] = 0
        alive[b] = 0
        p = prv[a]
        x = nxt[b]
        if p >= 0:
            nxt[p] = x
        if x >= 0:
            prv[x] = p
        if p >= 0 and x >= 0:
            u = p
            v = x
    elif va == 1:
        # right arrow a into cluster b
        code = 1
        rem[b] -= 1
        alive[a] = 0
        p = prv[a]
        if p >= 0:
            nxt[p] = b
        prv[b] = p
        if rem[b] == 0:
            alive[b] = 0
            x = nxt[b]
            if p >= 0:
                nxt[p] = x
            if x >= 0:
                prv[x] = p
            if p >= 0 and x >= 0:
                u = p
                v = x
        elif p >= 0:
            u = p
            v = b
    else:
        # left arrow b into cluster a
        code = 1
        rem[a] -= 1
        alive[b] = 0
        x = nxt[b]
        nxt[a] = x
        if x >= 0:
            prv[x] = a
        if rem[a] == 0:
            alive[a] = 0
            p = prv[a]
            if p >= 0:
                nxt[p] = x
            if x >= 0:
                prv[x] = p
            if p >= 0 and x >= 0:
                u = p
                v = x
        elif x >= 0:
            u = a
            v = x
    return code, u, v


@njit(cache=True, nogil=True, inline="always")
def _pop_event(ht, hq, hsize, pos, alive, nxt, ba, bb):
    """Pop the earliest valid event; gather all valid events at the exact
    same time, raise on a shared entity, and return the leftmost.

    Returns (hsize, a, b); a == -1 when the heap ran out of valid events."""
    while True:
        if hsize == 0:
            return 0, np.int32(-1), np.int32(-1)
        t = ht[0]
        q = hq[0]
        hsize -= 1
        ht[0] = ht[hsize]
        hq[0] = hq[hsize]
        if hsize > 1:
            _sift_down(ht, hq, 0, hsize)
        a = np.int32(q >> 32)
        b = np.int32(q & 0xFFFFFFFF)
        if alive[a] and alive[b] and nxt[a] == b:
            break
    if hsize == 0 or ht[0] != t:
        return hsize, a, b
    # exact tie: gather every pending valid event at this time
    nb = 0
    ba[nb] = a
    bb[nb] = b
    nb += 1
    while hsize > 0 and ht[0] == t:
        q = hq[0]
        hsize -= 1
        ht[0] = ht[hsize]
        hq[0] = hq[hsize]
        if hsize > 1:
            _sift_down(ht, hq, 0, hsize)
        a2 = np.int32(q >> 32)
        b2 = np.int32(q & 0xFFFFFFFF)
        if alive[a2] and alive[b2] and nxt[a2] == b2:
            if nb >= _TIE_BUF:
                raise ValueError(TIE_MESSAGE)
            ba[nb] = a2
            bb[nb] = b2
            nb += 1
    if nb == 1:
        return hsize, a, b
    for x in range(nb):
        for y in range(x + 1, nb):
            if (ba[x] == ba[y] or ba[x] == bb[y]
                    or bb[x] == ba[y] or bb[x] == bb[y]):
                raise ValueError(TIE_MESSAGE)
    best = 0
    for x in range(1, nb):
        if pos[ba[x]] < pos[ba[best]]:
            best = x
    for x in range(nb):
        if x != best:
            hsize = _heap_push(ht, hq, hsize, t,
                              (np.int64(ba[x]) << 32) | np.int64(bb[x]))
    return hsize, ba[best], bb[best]


@njit(cache=True, nogil=True)
def _initial_events(pos, vel, nxt, head, ht, hq):
    hsize = 0
    i = head
    while i >= 0:
        j = nxt[i]
        if j >= 0:
            t = _pair_time(pos, vel, i, j)
            if t >= 0.0:
                ht[hsize] = t
                hq[hsize] = (np.int64(i) << 32) | np.int64(j)
                hsize += 1
        i = j
    for s in range((hsize - 2) // 2, -1, -1):
        _sift_down(ht, hq, s, hsize)
    return hsize


@njit(cache=True, nogil=True)
def _survivor_scan(vel, alive, rem):
    """(monotone, units, lefts, rights): survivors read left to right must
    have nondecreasing velocity."""
    mono = True
    prev = np.int8(-2)
    units = 0
    lefts = 0
    rights = 0
    for i in range(alive.shape[0]):
        if alive[i]:
            if vel[i] < prev:
                mono = False
            prev = vel[i]
            if vel[i] == 0:
                units += rem[i]
            elif vel[i] == -1:
                lefts += 1
            else:
                rights += 1
    return mono, units, lefts, rights


@njit(cache=True, nogil=True)
def resolve_core(pos, vel, mult):
    """Event-driven resolution with a full collision log, O(n log n).

    Returns (m, rec_t, rec_x, rec_kind, rec_a, rec_b, rec_rem, alive, rem,
    monotone); rec_* filled up to m.  For arrow-arrow records rec_a/rec_b
    are the left/right sites and rec_rem is -1; for arrow-cluster they are
    the arrow/cluster sites and rec_rem the multiplicity left after the hit.
    """
    n = pos.shape[0]
    alive = np.zeros(n, np.uint8)
    rem = np.zeros(n, np.int32)
    nxt = np.full(n, -1, np.int32)
    prv = np.full(n, -1, np.int32)
    head, _, _ = _build_list(pos, vel, mult, alive, rem, nxt, prv)

    ht = np.empty(n + 8, np.float64)
    hq = np.empty(n + 8, np.int64)
    hsize = _initial_events(pos, vel, nxt, head, ht, hq)

    rec_t = np.empty(n, np.float64)
    rec_x = np.empty(n, np.float64)
    rec_kind = np.empty(n, np.int32)
    rec_a = np.empty(n, np.int32)
    rec_b = np.empty(n, np.int32)
    rec_rem = np.empty(n, np.int32)
    m = 0

    ba = np.empty(_TIE_BUF, np.int32)
    bb = np.empty(_TIE_BUF, np.int32)

    while True:
        hsize, a, b = _pop_event(ht, hq, hsize, pos, alive, nxt, ba, bb)
        if a < 0:
            break
        t = _pair_time(pos, vel, a, b)
        rec_t[m] = t
        rec_x[m] = pos[a] + vel[a] * t
        code, u, v = _execute(pos, vel, alive, rem, nxt, prv, a, b)
        rec_kind[m] = code
        if code == 0:
            rec_a[m] = a
            rec_b[m] = b
            rec_rem[m] = -1
        elif vel[a] == 1:
            rec_a[m] = a
            rec_b[m] = b
            rec_rem[m] = rem[b]
        else:
            rec_a[m] = b
            rec_b[m] = a
            rec_rem[m] = rem[a]
        m += 1
        if u >= 0 and v >= 0:
            t2 = _pair_time(pos, vel, u, v)
            if t2 >= 0.0:
                hsize = _heap_push(ht, hq, hsize, t2,
                                  (np.int64(u) << 32) | np.int64(v))

    mono, _, _, _ = _survivor_scan(vel, alive, rem)
    return m, rec_t, rec_x, rec_kind, rec_a, rec_b, rec_rem, alive, rem, mono


@njit(cache=True, nogil=True)
def resolve_core_naive(pos, vel, mult):
    """Oracle resolution: full rescan of all adjacent live pairs per event."""
    n = pos.shape[0]
    alive = np.zeros(n, np.uint8)
    rem = np.zeros(n, np.int32)
    nxt = np.full(n, -1, np.int32)
    prv = np.full(n, -1, np.int32)
    _build_list(pos, vel, mult, alive, rem, nxt, prv)

    rec_t = np.empty(n, np.float64)
    rec_x = np.empty(n, np.float64)
    rec_kind = np.empty(n, np.int32)
    rec_a = np.empty(n, np.int32)
    rec_b = np.empty(n, np.int32)
    rec_rem = np.empty(n, np.int32)
    m = 0

    ca = np.empty(_TIE_BUF, np.int32)
    cb = np.empty(_TIE_BUF, np.int32)

    while True:
        tmin = np.inf
        nc = 0
        for i in range(n):
            if not alive[i]:
                continue
            j = nxt[i]
            if j < 0:
                continue
            t = _pair_time(pos, vel, i, j)
            if t < 0.0:
                continue
            if t < tmin:
                tmin = t
                nc = 1
                ca[0] = i
                cb[0] = j
            elif t == tmin:
                if nc >= _TIE_BUF:
                    raise ValueError(TIE_MESSAGE)
                ca[nc] = i
                cb[nc] = j
                nc += 1
        if nc == 0:
            break
        if nc > 1:
            for x in range(nc):
                for y in range(x + 1, nc):
                    if (ca[x] == ca[y] or ca[x] == cb[y]
                            or cb[x] == ca[y] or cb[x] == cb[y]):
                        raise ValueError(TIE_MESSAGE)
        # candidates were scanned left to right, so slot 0 is leftmost
        a = ca[0]
        b = cb[0]
        rec_t[m] = tmin
        rec_x[m] = pos[a] + vel[a] * tmin
        code, _, _ = _execute(pos, vel, alive, rem, nxt, prv, a, b)
        rec_kind[m] = code
        if code == 0:
            rec_a[m] = a
            rec_b[m] = b
            rec_rem[m] = -1
        elif vel[a] == 1:
            rec_a[m] = a
            rec_b[m] = b
            rec_rem[m] = rem[b]
        else:
            rec_a[m] = b
            rec_b[m] = a
            rec_rem[m] = rem[a]
        m += 1

    mono, _, _, _ = _survivor_scan(vel, alive, rem)
    return m, rec_t, rec_x, rec_kind, rec_a, rec_b, rec_rem, alive, rem, mono


@njit(cache=True, nogil=True)
def stats_core(pos, vel, mult):
    """Resolution without the collision log, for large Monte Carlo trials.

    Returns (alive, rem, n_aa, n_ac, monotone, units, lefts, rights,
    first_kind, first_partner, arrows0, units0) where arrows0/units0 count
    the initial arrows and blockade units and first_kind classifies the collision
    that removed the entity at site 0 (-1 never collided, 0 arrow-arrow,
    1 arrow-cluster with first_partner the cluster site)."""
    n = pos.shape[0]
    alive = np.zeros(n, np.uint8)
    rem = np.zeros(n, np.int32)
    nxt = np.full(n, -1, np.int32)
    prv = np.full(n, -1, np.int32)
    head, arrows0, units0 = _build_list(pos, vel, mult, alive, rem, nxt, prv)

    ht = np.empty(n + 8, np.float64)
    hq = np.empty(n + 8, np.int64)
    hsize = _initial_events(pos, vel, nxt, head, ht, hq)

    ba = np.empty(_TIE_BUF, np.int32)
    bb = np.empty(_TIE_BUF, np.int32)

    n_aa = 0
    n_ac = 0
    first_kind = np.int32(-1)
    first_partner = np.int32(-1)

    while True:
        hsize, a, b = _pop_event(ht, hq, hsize, pos, alive, nxt, ba, bb)
        if a < 0:
            break
        code, u, v = _execute(pos, vel, alive, rem, nxt, prv, a, b)
        if code == 0:
            n_aa += 1
        else:
            n_ac += 1
        if a == 0:
            first_kind = np.int32(code)
            if code == 1 and vel[a] == 1:
                first_partner = b
        if u >= 0 and v >= 0:
            t2 = _pair_time(pos, vel, u, v)
            if t2 >= 0.0:
                hsize = _heap_push(ht, hq, hsize, t2,
                                  (np.int64(u) << 32) | np.int64(v))

    mono, units, lefts, rights = _survivor_scan(vel, alive, rem)
    return (alive, rem, n_aa, n_ac, mono, units, lefts, rights,
            first_kind, first_partner, arrows0, units0)


@njit(cache=True, nogil=True)
def center_core(pos, vel, mult, center):
    """Resolution that stops at the first collision involving `center`.

    Returns (hit, n_aa, n_ac, mono, units, lefts, rights, arrows0, units0).
    hit=1 means the center site took part in a collision and the run was
    abandoned there; the tallies are then partial and mono/units/lefts/
    rights are filled with sentinels.  hit=0 means the configuration was
    resolved completely with the center untouched."""
    n = pos.shape[0]
    alive = np.zeros(n, np.uint8)
    rem = np.zeros(n, np.int32)
    nxt = np.full(n, -1, np.int32)
    prv = np.full(n, -1, np.int32)
    head, arrows0, units0 = _build_list(pos, vel, mult, alive, rem, nxt, prv)

    ht = np.empty(n + 8, np.float64)
    hq = np.empty(n + 8, np.int64)
    hsize = _initial_events(pos, vel, nxt, head, ht, hq)

    ba = np.empty(_TIE_BUF, np.int32)
    bb = np.empty(_TIE_BUF, np.int32)

    n_aa = 0
    n_ac = 0
    while True:
        hsize, a, b = _pop_event(ht, hq, hsize, pos, alive, nxt, ba, bb)
        if a < 0:
            break
        if a == center or b == center:
            return 1, n_aa, n_ac, 1, -1, -1, -1, arrows0, units0
        code, u, v = _execute(pos, vel, alive, rem, nxt, prv, a, b)
        if code == 0:
            n_aa += 1
        else:
            n_ac += 1
        if u >= 0 and v >= 0:
            t2 = _pair_time(pos, vel, u, v)
            if t2 >= 0.0:
                hsize = _heap_push(ht, hq, hsize, t2,
                                  (np.int64(u) << 32) | np.int64(v))

    mono, units, lefts, rights = _survivor_scan(vel, alive, rem)
    return 0, n_aa, n_ac, mono, units, lefts, rights, arrows0, units0
