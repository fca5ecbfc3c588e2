"""Compiled Goemans-Williamson moat growth for unrooted prize-collecting forests.

Every edge is split into two *edge parts*, one per endpoint. A part of
endpoint ``u`` carries a target ``kappa``: the value the dual load ``d(u)``
(total moat covering ``u``) must reach before the edge is re-examined. The
two targets of an edge always sum to at most its cost, so whichever endpoint
reaches its target first catches the edge no later than the moment it goes
tight. Re-examining an edge either merges its clusters or re-splits the
remaining slack.

Each cluster owns a pairing heap of its parts keyed by the absolute time at
which the part fires. Heaps of inactive clusters are frozen and shifted by a
lazy offset when the cluster is absorbed into an active one.
"""
import numpy as np
from numba import njit

_EPS = 1e-12


@njit(cache=True, _nrt=False)
def _hless(i, j, hk, ha):
    return hk[i] < hk[j] or (hk[i] == hk[j] and ha[i] < ha[j])


@njit(cache=True, _nrt=False)
def _hswap(i, j, hk, ha, hb):
    hk[i], hk[j] = hk[j], hk[i]
    ha[i], ha[j] = ha[j], ha[i]
    hb[i], hb[j] = hb[j], hb[i]


@njit(cache=True, _nrt=False)
def _hpush(hk, ha, hb, size, k, a, b):
    """Binary-heap push ordered by ``(k, a)``; returns the new size."""
    i = size
    hk[i] = k
    ha[i] = a
    hb[i] = b
    while i > 0:
        j = (i - 1) >> 1
        if _hless(i, j, hk, ha):
            _hswap(i, j, hk, ha, hb)
            i = j
        else:
            break
    return size + 1


@njit(cache=True, _nrt=False)
def _hpop(hk, ha, hb, size):
    """Drop the minimum; returns the new size."""
    size -= 1
    if size > 0:
        _hswap(0, size, hk, ha, hb)
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            c = left
            if left + 1 < size and _hless(left + 1, left, hk, ha):
                c = left + 1
            if _hless(c, i, hk, ha):
                _hswap(c, i, hk, ha, hb)
                i = c
            else:
                break
    return size


@njit(cache=True, _nrt=False)
def _less(a, b, key, part):
    return key[a] < key[b] or (key[a] == key[b] and part[a] < part[b])


@njit(cache=True, _nrt=False)
def _meld(a, b, key, part, child, sib, add):
    if a < 0:
        return b
    if b < 0:
        return a
    if _less(b, a, key, part):
        a, b = b, a
    key[b] -= add[a]
    add[b] -= add[a]
    sib[b] = child[a]
    child[a] = b
    return a


@njit(cache=True, _nrt=False)
def _pop(root, key, part, child, sib, add, buf):
    """Remove ``root``; return the root of the remaining heap."""
    n = 0
    c = child[root]
    while c >= 0:
        nxt = sib[c]
        key[c] += add[root]
        add[c] += add[root]
        sib[c] = -1
        buf[n] = c
        n += 1
        c = nxt
    child[root] = -1
    if n == 0:
        return -1
    # left-to-right pairing, then right-to-left accumulation
    m = 0
    i = 0
    while i + 1 < n:
        buf[m] = _meld(buf[i], buf[i + 1], key, part, child, sib, add)
        m += 1
        i += 2
    if i < n:
        buf[m] = buf[i]
        m += 1
    r = buf[m - 1]
    for j in range(m - 2, -1, -1):
        r = _meld(buf[j], r, key, part, child, sib, add)
    return r


@njit(cache=True, _nrt=False)
def _find(x, up, upsum, stack):
    """Root cluster of leaf ``x`` and the frozen moat sum below that root."""
    n = 0
    c = x
    while up[c] >= 0:
        stack[n] = c
        n += 1
        c = up[c]
    root = c
    acc = 0.0
    for j in range(n - 1, -1, -1):
        y = stack[j]
        acc += upsum[y]
        upsum[y] = acc
        up[y] = root
    # after compression each visited cluster points straight at the root
    if n == 0:
        return root, 0.0
    return root, upsum[x]


@njit(cache=True, _nrt=False)
def _too_small(m, n, cap, qcap):
    """True when the buffers cannot even hold the initial edge parts."""
    return 2 * m + 2 > cap or n + 4 > qcap


@njit(cache=True)
def gw_forest(n, eu, ev, cost, prize, target):
    """Moat growth followed by Goemans-Williamson pruning.

    Returns ``(node_mask, kept_edge_indices)``.
    """
    scale = 4
    while True:
        mask, kept, ok = _gw_run(n, eu, ev, cost, prize, target, scale)
        if ok:
            return mask, kept
        scale *= 2


@njit(cache=True)
def _gw_run(n, eu, ev, cost, prize, target, scale):
    # fixed-size buffers keep the hot loop free of reallocation
    m = eu.shape[0]
    ncl = 2 * n + 1
    up = -np.ones(ncl, np.int64)
    upsum = np.zeros(ncl)
    par = -np.ones(ncl, np.int64)
    ch1 = -np.ones(ncl, np.int64)
    ch2 = -np.ones(ncl, np.int64)
    start = np.zeros(ncl)
    end = np.zeros(ncl)
    active = np.zeros(ncl, np.bool_)
    psum = np.zeros(ncl)
    total = np.zeros(ncl)  # moat of the cluster plus all of its descendants
    inner = np.zeros(ncl)
    deact = np.zeros(ncl)
    hroot = -np.ones(ncl, np.int64)
    stack = np.empty(ncl, np.int64)

    cap = scale * m + 16
    qcap = 2 * n + scale * m + 16
    if _too_small(m, n, cap, qcap):
        return np.zeros(n, np.bool_), np.empty(0, np.int64), False
    key = np.zeros(cap)
    epart = np.zeros(cap, np.int64)
    ever = np.zeros(cap, np.int64)
    child = -np.ones(cap, np.int64)
    sib = -np.ones(cap, np.int64)
    add = np.zeros(cap)
    buf = np.empty(cap, np.int64)
    used = 0

    kappa = np.zeros(2 * m)
    pver = np.zeros(2 * m, np.int64)
    dead = np.zeros(m, np.bool_)

    ph_edge = np.empty(max(n, 1), np.int64)
    ph_u = np.empty(max(n, 1), np.int64)
    ph_v = np.empty(max(n, 1), np.int64)
    ph_in = np.empty(max(n, 1), np.int64)
    nph = 0

    # global queues: next edge event per active cluster, and deactivations
    ek = np.zeros(qcap)
    ea = np.zeros(qcap, np.int64)
    eb = np.zeros(qcap, np.int64)
    ne = 0
    dk = np.zeros(2 * n + 2)
    da = np.zeros(2 * n + 2, np.int64)
    db = np.zeros(2 * n + 2, np.int64)
    nd = 0

    num_active = 0
    for i in range(n):
        psum[i] = prize[i]
        if prize[i] > 0.0:
            active[i] = True
            deact[i] = prize[i]
            nd = _hpush(dk, da, db, nd, prize[i], i, 0)
            num_active += 1

    for k in range(m):
        half = cost[k] / 2.0
        for side in range(2):
            pidx = 2 * k + side
            node = eu[k] if side == 0 else ev[k]
            kappa[pidx] = half
            key[used] = half
            epart[used] = pidx
            ever[used] = 0
            hroot[node] = _meld(hroot[node], used, key, epart, child, sib, add)
            used += 1
    for i in range(n):
        if active[i] and hroot[i] >= 0:
            r = hroot[i]
            ne = _hpush(ek, ea, eb, ne, key[r], epart[r], i)

    nxt = n
    while num_active > target:
        if ne + 4 > qcap or used + 2 > cap:
            return np.zeros(n, np.bool_), np.empty(0, np.int64), False
        while ne > 0:
            c = eb[0]
            r = hroot[c]
            if up[c] < 0 and active[c] and r >= 0 and key[r] == ek[0] and epart[r] == ea[0]:
                break
            ne = _hpop(ek, ea, eb, ne)
        while nd > 0:
            c = da[0]
            if up[c] < 0 and active[c] and deact[c] == dk[0]:
                break
            nd = _hpop(dk, da, db, nd)
        if ne == 0 and nd == 0:
            break
        te = ek[0] if ne > 0 else np.inf
        td = dk[0] if nd > 0 else np.inf

        if ne > 0 and te <= td + _EPS:
            now = ek[0]
            pp = ea[0]
            c = eb[0]
            ne = _hpop(ek, ea, eb, ne)
            r = hroot[c]
            ver = ever[r]
            hroot[c] = _pop(r, key, epart, child, sib, add, buf)
            k = pp >> 1
            if ver != pver[pp] or dead[k]:
                if hroot[c] >= 0:
                    ne = _hpush(ek, ea, eb, ne, key[hroot[c]], epart[hroot[c]], c)
                continue
            q = pp ^ 1
            u = eu[k] if (pp & 1) == 0 else ev[k]
            v = ev[k] if (pp & 1) == 0 else eu[k]
            cu, du = _find(u, up, upsum, stack)
            cv, dv = _find(v, up, upsum, stack)
            du += (now - start[cu]) if active[cu] else (end[cu] - start[cu])
            dv += (now - start[cv]) if active[cv] else (end[cv] - start[cv])
            if cu == cv:
                dead[k] = True
                if hroot[c] >= 0:
                    ne = _hpush(ek, ea, eb, ne, key[hroot[c]], epart[hroot[c]], c)
                continue
            rem = cost[k] - du - dv
            if rem <= _EPS * max(1.0, cost[k]):
                # merge cu (active, owner of the fired part) with cv
                dead[k] = True
                nc = nxt
                nxt += 1
                ycu = now - start[cu]
                active[cu] = False
                end[cu] = now
                num_active -= 1
                inactive_side = -1
                if active[cv]:
                    ycv = now - start[cv]
                    active[cv] = False
                    end[cv] = now
                    num_active -= 1
                else:
                    ycv = end[cv] - start[cv]
                    inactive_side = cv
                    hr = hroot[cv]
                    if hr >= 0:
                        shift = now - end[cv]
                        key[hr] += shift
                        add[hr] += shift
                total[cu] = inner[cu] + ycu
                total[cv] = inner[cv] + ycv
                up[cu] = nc
                upsum[cu] = ycu
                up[cv] = nc
                upsum[cv] = ycv
                par[cu] = nc
                par[cv] = nc
                ch1[nc] = cu
                ch2[nc] = cv
                hroot[nc] = _meld(hroot[cu], hroot[cv], key, epart, child, sib, add)
                hroot[cu] = -1
                hroot[cv] = -1
                psum[nc] = psum[cu] + psum[cv]
                inner[nc] = total[cu] + total[cv]
                remaining = psum[nc] - inner[nc]
                if remaining < 0.0:
                    remaining = 0.0
                active[nc] = True
                start[nc] = now
                deact[nc] = now + remaining
                num_active += 1
                nd = _hpush(dk, da, db, nd, deact[nc], nc, 0)
                ph_edge[nph] = k
                ph_u[nph] = u
                ph_v[nph] = v
                ph_in[nph] = inactive_side
                nph += 1
                if hroot[nc] >= 0:
                    ne = _hpush(ek, ea, eb, ne, key[hroot[nc]], epart[hroot[nc]], nc)
                continue

            if active[cv]:
                kp = du + rem / 2.0
                kq = dv + rem / 2.0
            else:
                kp = du + rem
                kq = dv
            kappa[pp] = kp
            pver[pp] += 1
            key[used] = now + (kp - du)
            epart[used] = pp
            ever[used] = pver[pp]
            hroot[cu] = _meld(hroot[cu], used, key, epart, child, sib, add)
            used += 1
            if kq < kappa[q]:
                kappa[q] = kq
                pver[q] += 1
                frame = now if active[cv] else end[cv]
                key[used] = frame + (kq - dv)
                epart[used] = q
                ever[used] = pver[q]
                hroot[cv] = _meld(hroot[cv], used, key, epart, child, sib, add)
                used += 1
                if active[cv]:
                    r2 = hroot[cv]
                    ne = _hpush(ek, ea, eb, ne, key[r2], epart[r2], cv)
            r1 = hroot[cu]
            ne = _hpush(ek, ea, eb, ne, key[r1], epart[r1], cu)
        else:
            now = dk[0]
            c = da[0]
            nd = _hpop(dk, da, db, nd)
            active[c] = False
            end[c] = now
            num_active -= 1

    # nodes of clusters still active when growth stopped
    good = np.zeros(n, np.bool_)
    for i in range(n):
        root, _ = _find(i, up, upsum, stack)
        good[i] = active[root]

    necessary = np.zeros(ncl, np.bool_)
    deleted = np.zeros(n, np.bool_)
    kept = np.empty(max(nph, 1), np.int64)
    nkept = 0
    for j in range(nph - 1, -1, -1):
        u = ph_u[j]
        v = ph_v[j]
        if not good[u] or deleted[u]:
            continue
        o = ph_in[j]
        if o >= 0 and not necessary[o]:
            # pendant inactive cluster: drop it together with its edge
            sp = 0
            stack[sp] = o
            sp += 1
            while sp > 0:
                sp -= 1
                c = stack[sp]
                if c < n:
                    deleted[c] = True
                else:
                    stack[sp] = ch1[c]
                    sp += 1
                    stack[sp] = ch2[c]
                    sp += 1
            continue
        kept[nkept] = ph_edge[j]
        nkept += 1
        for x in (u, v):
            c = x
            while c >= 0 and not necessary[c]:
                necessary[c] = True
                c = par[c]

    mask = np.zeros(n, np.bool_)
    for i in range(n):
        mask[i] = good[i] and not deleted[i]
    return mask, kept[:nkept].copy(), True
