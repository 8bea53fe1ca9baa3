"""Compiled inner loops for the quantum-jump step engine."""
from __future__ import annotations

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PURPOSE = np.uint64(0xD1B54A32D192ED03)


@nb.njit(cache=True, inline="always")
def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def uniform(key, counter, purpose):
    c = np.uint64(counter) * _GOLDEN + np.uint64(purpose) * _PURPOSE
    z = _mix(_mix(key ^ c) + np.uint64(purpose + 1))
    return (np.float64(z >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True, inline="always")
def _expect(E, a, b):
    return (
        E[0, 0].real * (a.real * a.real + a.imag * a.imag)
        + E[1, 1].real * (b.real * b.real + b.imag * b.imag)
        + 2.0 * (E[0, 1] * (a.conjugate() * b)).real
    )


@nb.njit(cache=True, nogil=True)
def qj_kernel(
    energies, unitaries, kraus, dq_cl, dq_l, work_ops, has_wop,
    a0, b0, keys, slot, n_slots, record, purpose,
    W, Qcl, Qq, QL, logp, nj, U_i, U_f, fa, fb, rsum, rsq,
    outcomes, states, incs,
):
    n = a0.shape[0]
    N = slot.shape[0] - 1
    K1 = kraus.shape[1]
    ne = energies.shape[0]
    nu = unitaries.shape[0]
    nk = kraus.shape[0]
    nh = dq_cl.shape[0]
    nw = work_ops.shape[0]
    pa = np.empty(K1, dtype=np.complex128)
    pb = np.empty(K1, dtype=np.complex128)
    pr = np.empty(K1, dtype=np.float64)
    for i in range(n):
        a = a0[i]
        b = b0[i]
        key = keys[i]
        w_acc = 0.0
        cl_acc = 0.0
        qq_acc = 0.0
        l_acc = 0.0
        lp = 0.0
        jumps = 0
        U_i[i] = _expect(energies[0], a, b)
        if record:
            states[i, 0, 0] = a
            states[i, 0, 1] = b
        s0 = slot[0]
        if s0 >= 0:
            pe = a.real * a.real + a.imag * a.imag
            c = a * b.conjugate()
            rsum[s0, 0] += pe
            rsum[s0, 1] += c.real
            rsum[s0, 2] += c.imag
            rsq[s0, 0] += pe * pe
            rsq[s0, 1] += c.real * c.real
            rsq[s0, 2] += c.imag * c.imag
        for step in range(N):
            E0 = energies[step if ne > 1 else 0]
            E1 = energies[step + 1 if ne > 1 else 0]
            e_before = _expect(E1, a, b)
            work = e_before - _expect(E0, a, b)
            w_op = 0.0
            if has_wop:
                w_op = _expect(work_ops[step if nw > 1 else 0], a, b)
            U = unitaries[step if nu > 1 else 0]
            ua = U[0, 0] * a + U[0, 1] * b
            ub = U[1, 0] * a + U[1, 1] * b
            e_mid = _expect(E1, ua, ub)
            work += e_mid - e_before + w_op
            ks = kraus[step if nk > 1 else 0]
            total = 0.0
            for k in range(K1):
                xa = ks[k, 0, 0] * ua + ks[k, 0, 1] * ub
                xb = ks[k, 1, 0] * ua + ks[k, 1, 1] * ub
                pa[k] = xa
                pb[k] = xb
                p = xa.real * xa.real + xa.imag * xa.imag + xb.real * xb.real + xb.imag * xb.imag
                pr[k] = p
                total += p
            u = uniform(key, step, purpose) * total
            cum = 0.0
            ch = K1 - 1
            for k in range(K1):
                cum += pr[k]
                if u < cum:
                    ch = k
                    break
            norm = np.sqrt(pr[ch])
            a = pa[ch] / norm
            b = pb[ch] / norm
            heat = _expect(E1, a, b) - e_mid
            hi = step if nh > 1 else 0
            dcl = dq_cl[hi, ch]
            dql = dq_l[hi, ch]
            dqq = heat - dcl - dql - w_op
            w_acc += work
            cl_acc += dcl
            l_acc += dql
            qq_acc += dqq
            lp += np.log(pr[ch] / total)
            if ch != 0:
                jumps += 1
            if record:
                outcomes[i, step] = ch
                states[i, step + 1, 0] = a
                states[i, step + 1, 1] = b
                incs[0, i, step] = work
                incs[1, i, step] = dcl
                incs[2, i, step] = dqq
                incs[3, i, step] = dql
            s = slot[step + 1]
            if s >= 0:
                pe = a.real * a.real + a.imag * a.imag
                c = a * b.conjugate()
                rsum[s, 0] += pe
                rsum[s, 1] += c.real
                rsum[s, 2] += c.imag
                rsq[s, 0] += pe * pe
                rsq[s, 1] += c.real * c.real
                rsq[s, 2] += c.imag * c.imag
        W[i] = w_acc
        Qcl[i] = cl_acc
        Qq[i] = qq_acc
        QL[i] = l_acc
        logp[i] = lp
        nj[i] = jumps
        U_f[i] = _expect(energies[N if ne > 1 else 0], a, b)
        fa[i] = a
        fb[i] = b


@nb.njit(cache=True, nogil=True)
def fictitious_kernel(pf, heat, rec, init, key, n_samples, beta, purpose):
    """log of the mean of e^{beta * Q_undetected} over posterior fictitious paths.

    pf[k, x] is the posterior probability of an undetected transition at step
    k from hidden state x; rec[k] != 0 marks detected (forced) transitions.
    Inter-event times are drawn by inverting the cumulative survival, so the
    cost per path scales with the number of transitions, not with the steps.
    """
    N = pf.shape[0]
    L = np.zeros((2, N + 1))
    for x in range(2):
        for k in range(N):
            inc = 0.0
            if rec[k] == 0:
                inc = max(np.log1p(-min(pf[k, x], 1.0)), -700.0) if pf[k, x] < 1.0 else -700.0
            L[x, k + 1] = L[x, k] + inc
    next_det = np.empty(N + 1, dtype=np.int64)
    nd = N
    for k in range(N, -1, -1):
        if k < N and rec[k] != 0:
            nd = k
        next_det[k] = nd
    vals = np.empty(n_samples)
    for s in range(n_samples):
        x = init
        n = 0
        q = 0.0
        c = 0
        while n < N:
            d = next_det[n]
            u = uniform(key, np.uint64(s) * np.uint64(N + 2) + np.uint64(c), purpose)
            c += 1
            target = L[x, n] + np.log(u)
            lo = n + 1
            hi = d + 1  # search j in [n + 1, d] for first L[x, j] < target
            while lo < hi:
                mid = (lo + hi) // 2
                if L[x, mid] < target:
                    hi = mid
                else:
                    lo = mid + 1
            if lo <= d and L[x, lo] < target:
                k = lo - 1
                q += heat[k, x]
                x = 1 - x
                n = k + 1
            else:
                if d >= N:
                    break
                x = 1 - x
                n = d + 1
        vals[s] = beta * q
    m = vals.max()
    tot = 0.0
    for s in range(n_samples):
        tot += np.exp(vals[s] - m)
    return m + np.log(tot / n_samples)
