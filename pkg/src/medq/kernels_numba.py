"""Numba-compiled batched circuit kernels.

Same interface as kernels_numpy, with tight per-sample loops over the
amplitude vector. Amplitude pairs that differ only in one qubit's bit are
enumerated with the usual shift trick: for pair counter k and bit position
m, the lower index is ((k >> m) << (m + 1)) | (k & ((1 << m) - 1)).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _gate_inplace(a, code, m, mb, ang):
    N = a.shape[0]
    c = np.cos(0.5 * ang)
    s = np.sin(0.5 * ang)
    if code == 3:
        t0 = 1 << m
        t1 = 1 << mb
        pe = complex(c, -s)
        pn = complex(c, s)
        for i in range(N):
            if ((i & t0) != 0) == ((i & t1) != 0):
                a[i] = a[i] * pe
            else:
                a[i] = a[i] * pn
    elif code == 2:
        t = 1 << m
        p0 = complex(c, -s)
        p1 = complex(c, s)
        for i in range(N):
            if i & t:
                a[i] = a[i] * p1
            else:
                a[i] = a[i] * p0
    elif code == 1:
        t = 1 << m
        mask = t - 1
        for k in range(N >> 1):
            i0 = ((k >> m) << (m + 1)) | (k & mask)
            i1 = i0 | t
            a0 = a[i0]
            a1 = a[i1]
            a[i0] = c * a0 - s * a1
            a[i1] = c * a1 + s * a0
    else:
        t = 1 << m
        mask = t - 1
        for k in range(N >> 1):
            i0 = ((k >> m) << (m + 1)) | (k & mask)
            i1 = i0 | t
            a0 = a[i0]
            a1 = a[i1]
            a[i0] = c * a0 - 1j * (s * a1)
            a[i1] = c * a1 - 1j * (s * a0)


@njit(cache=True)
def run_program(amps, ops, m0, m1, angles):
    B = amps.shape[0]
    G = ops.shape[0]
    for b in range(B):
        a = amps[b]
        for g in range(G):
            _gate_inplace(a, ops[g], m0[g], m1[g], angles[b, g])


@njit(cache=True)
def _overlap(bra, ket, code, m, mb):
    N = ket.shape[0]
    z = 0.0j
    if code == 3:
        t0 = 1 << m
        t1 = 1 << mb
        for i in range(N):
            if ((i & t0) != 0) == ((i & t1) != 0):
                z += np.conj(bra[i]) * ket[i]
            else:
                z -= np.conj(bra[i]) * ket[i]
    elif code == 2:
        t = 1 << m
        for i in range(N):
            if i & t:
                z -= np.conj(bra[i]) * ket[i]
            else:
                z += np.conj(bra[i]) * ket[i]
    elif code == 1:
        t = 1 << m
        mask = t - 1
        for k in range(N >> 1):
            i0 = ((k >> m) << (m + 1)) | (k & mask)
            i1 = i0 | t
            z += 1j * (np.conj(bra[i1]) * ket[i0] - np.conj(bra[i0]) * ket[i1])
    else:
        t = 1 << m
        mask = t - 1
        for k in range(N >> 1):
            i0 = ((k >> m) << (m + 1)) | (k & mask)
            i1 = i0 | t
            z += np.conj(bra[i0]) * ket[i1] + np.conj(bra[i1]) * ket[i0]
    return z


@njit(cache=True)
def adjoint_pass(amps, ops, m0, m1, angles, obs, readout_bit):
    B = amps.shape[0]
    N = amps.shape[1]
    G = ops.shape[0]
    dang = np.empty((B, G))
    ket = np.empty(N, np.complex128)
    bra = np.empty(N, np.complex128)
    tr = 1 << readout_bit
    maskr = tr - 1
    for b in range(B):
        for i in range(N):
            ket[i] = amps[b, i]
        o00 = obs[b, 0, 0]
        o01 = obs[b, 0, 1]
        o10 = obs[b, 1, 0]
        o11 = obs[b, 1, 1]
        for k in range(N >> 1):
            i0 = ((k >> readout_bit) << (readout_bit + 1)) | (k & maskr)
            i1 = i0 | tr
            k0 = ket[i0]
            k1 = ket[i1]
            bra[i0] = o00 * k0 + o01 * k1
            bra[i1] = o10 * k0 + o11 * k1
        for g in range(G - 1, -1, -1):
            code = ops[g]
            m = m0[g]
            mb = m1[g]
            dang[b, g] = _overlap(bra, ket, code, m, mb).imag
            _gate_inplace(ket, code, m, mb, -angles[b, g])
            _gate_inplace(bra, code, m, mb, -angles[b, g])
    return dang
