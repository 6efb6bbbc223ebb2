"""Hot loops for spread evaluation and selection replay (numba-compiled).

All kernels are pure functions of their array arguments. Parallel loops
write to disjoint per-candidate slots and are reduced in fixed order by the
callers, so results are identical for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .diffusion import TrialPool
from .graphs import SocialGraph


class LiveTrials:
    """Per-trial live-edge out-adjacency in CSR form.

    Trial t's adjacency for node u is
    ``targets[trial_ptr[t] + indptr[t, u] : trial_ptr[t] + indptr[t, u + 1]]``
    with matching original edge ids in ``edge_ids``.
    """

    def __init__(self, social: SocialGraph, pool: TrialPool, block: int = 512):
        self.social = social
        self.pool = pool
        n, m, R = social.n, social.m, pool.trials
        self.n = n
        self.trials = R
        self.indptr = np.zeros((R, n + 1), dtype=np.int64)
        tgt_chunks = []
        eid_chunks = []
        counts_per_trial = np.zeros(R, dtype=np.int64)
        src = social.src
        for t0 in range(0, R, block):
            t1 = min(t0 + block, R)
            masks = pool.live_masks(social, t0, t1)
            for i in range(t1 - t0):
                sel = np.flatnonzero(masks[i])
                counts = np.bincount(src[sel], minlength=n) if len(sel) else np.zeros(n, dtype=np.int64)
                self.indptr[t0 + i, 1:] = np.cumsum(counts)
                tgt_chunks.append(social.dst[sel].astype(np.int32))
                eid_chunks.append(sel.astype(np.int64))
                counts_per_trial[t0 + i] = len(sel)
        self.trial_ptr = np.concatenate([[0], np.cumsum(counts_per_trial)]).astype(np.int64)
        self.targets = (np.concatenate(tgt_chunks) if tgt_chunks
                        else np.zeros(0, dtype=np.int32)).astype(np.int32)
        self.edge_ids = (np.concatenate(eid_chunks) if eid_chunks
                         else np.zeros(0, dtype=np.int64))


@njit(cache=True)
def _reach_membership(trial_ptr, indptr, targets, seeds, member, sizes):
    """Fill member[t, v] = 1 for every node reachable from seeds in trial t."""
    R, n1 = indptr.shape
    n = n1 - 1
    queue = np.empty(n, dtype=np.int32)
    for t in range(R):
        base = trial_ptr[t]
        cnt = 0
        for s in seeds:
            if member[t, s] == 0:
                member[t, s] = 1
                queue[cnt] = s
                cnt += 1
        head = 0
        while head < cnt:
            u = queue[head]
            head += 1
            for k in range(base + indptr[t, u], base + indptr[t, u + 1]):
                v = targets[k]
                if member[t, v] == 0:
                    member[t, v] = 1
                    queue[cnt] = v
                    cnt += 1
        sizes[t] = cnt


@njit(cache=True)
def _marginal_count_one(trial_ptr, indptr, targets, member, w, stamp, queue):
    """Total count over trials of nodes reached from w and not in the base set."""
    R = indptr.shape[0]
    total = 0
    for t in range(R):
        if member[t, w] == 1:
            continue
        base = trial_ptr[t]
        stamp[w] = t
        queue[0] = w
        qn = 1
        cnt = 1
        head = 0
        while head < qn:
            u = queue[head]
            head += 1
            for k in range(base + indptr[t, u], base + indptr[t, u + 1]):
                v = targets[k]
                if member[t, v] == 0 and stamp[v] != t:
                    stamp[v] = t
                    queue[qn] = v
                    qn += 1
                    cnt += 1
        total += cnt
    return total


@njit(cache=True, parallel=True)
def _marginal_counts(trial_ptr, indptr, targets, member, cands, out):
    n = indptr.shape[1] - 1
    for ci in prange(len(cands)):
        stamp = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int32)
        out[ci] = _marginal_count_one(trial_ptr, indptr, targets, member,
                                      cands[ci], stamp, queue)


@njit(cache=True)
def _insertion_sort(arr, lo, hi):
    for i in range(lo + 1, hi):
        key = arr[i]
        j = i - 1
        while j >= lo and arr[j] > key:
            arr[j + 1] = arr[j]
            j -= 1
        arr[j + 1] = key


@njit(cache=True)
def _replay_candidate(trial_ptr, indptr, targets, base_seeds, w,
                      pos, ret_pos, dist, include_returns,
                      stamp, queue, infl_out, ret_out):
    """Replay all trials for one candidate, charging every assignment row.

    pos[a, x] is the ad-hoc position of x's agent under assignment a;
    ret_pos is the position return messages are priced from/to. Returns 0
    on success, 1 if an infinite distance was touched.
    """
    R = indptr.shape[0]
    A = pos.shape[0]
    for t in range(R):
        base = trial_ptr[t]
        qn = 0
        for s in base_seeds:
            if stamp[s] != t:
                stamp[s] = t
                queue[qn] = s
                qn += 1
        if stamp[w] != t:
            stamp[w] = t
            queue[qn] = w
            qn += 1
        _insertion_sort(queue, 0, qn)
        # Returns for sources (every activated x != w reports to w).
        if include_returns:
            for i in range(qn):
                x = queue[i]
                if x == w:
                    continue
                for a in range(A):
                    d = dist[ret_pos[a, x], ret_pos[a, w]]
                    if d < 0:
                        return 1
                    ret_out[a] += d
        lo = 0
        hi = qn
        while lo < hi:
            for i in range(lo, hi):
                u = queue[i]
                for k in range(base + indptr[t, u], base + indptr[t, u + 1]):
                    v = targets[k]
                    if stamp[v] != t:
                        stamp[v] = t
                        queue[qn] = v
                        qn += 1
                        for a in range(A):
                            pu = pos[a, u]
                            pv = pos[a, v]
                            if pu != pv:
                                d = dist[pu, pv]
                                if d < 0:
                                    return 1
                                infl_out[a] += d
                        if include_returns and v != w:
                            for a in range(A):
                                d = dist[ret_pos[a, v], ret_pos[a, w]]
                                if d < 0:
                                    return 1
                                ret_out[a] += d
            lo = hi
            _insertion_sort(queue, lo, qn)
            hi = qn
    return 0


@njit(cache=True, parallel=True)
def _replay_iteration(trial_ptr, indptr, targets, base_seeds, cands,
                      pos, ret_pos, dist, include_returns,
                      infl, ret, err):
    n = indptr.shape[1] - 1
    A = pos.shape[0]
    for ci in prange(len(cands)):
        stamp = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int32)
        err[ci] = _replay_candidate(trial_ptr, indptr, targets, base_seeds,
                                    cands[ci], pos, ret_pos, dist,
                                    include_returns, stamp, queue,
                                    infl[ci], ret[ci])
