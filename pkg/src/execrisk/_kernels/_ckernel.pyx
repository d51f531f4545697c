# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled affine-feedback Euler-Maruyama kernel with inline Philox4x32-10.

Must stay operation-for-operation in step with ``_pykernel.simulate_affine``.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, cos
from libc.stdint cimport uint32_t, uint64_t

cnp.import_array()

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline double _philox_normal(uint64_t step, uint64_t path, uint32_t channel,
                                  uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint32_t x0 = <uint32_t>step
    cdef uint32_t x1 = <uint32_t>(path & 0xFFFFFFFFu)
    cdef uint32_t x2 = <uint32_t>(path >> 32)
    cdef uint32_t x3 = channel
    cdef uint64_t p0, p1
    cdef uint32_t n0, n1, n2, n3
    cdef int r
    for r in range(10):
        if r > 0:
            k0 = k0 + <uint32_t>0x9E3779B9u
            k1 = k1 + <uint32_t>0xBB67AE85u
        p0 = <uint64_t>0xD2511F53u * <uint64_t>x0
        p1 = <uint64_t>0xCD9E8D57u * <uint64_t>x2
        n0 = (<uint32_t>(p1 >> 32)) ^ x1 ^ k0
        n1 = <uint32_t>p1
        n2 = (<uint32_t>(p0 >> 32)) ^ x3 ^ k1
        n3 = <uint32_t>p0
        x0 = n0
        x1 = n1
        x2 = n2
        x3 = n3
    cdef uint64_t a = ((<uint64_t>x0 << 32) | <uint64_t>x1) >> 11
    cdef uint64_t b = ((<uint64_t>x2 << 32) | <uint64_t>x3) >> 11
    cdef double u1 = (<double>a + 1.0) * INV_2_53
    cdef double u2 = <double>b * INV_2_53
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


def philox_normals(uint64_t seed, uint64_t[::1] paths, Py_ssize_t n_steps, uint32_t channel):
    cdef Py_ssize_t P = paths.shape[0]
    out = np.empty((P, n_steps))
    cdef double[:, ::1] o = out
    cdef uint32_t k0 = <uint32_t>(seed & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef Py_ssize_t i, k
    for i in range(P):
        for k in range(n_steps):
            o[i, k] = _philox_normal(<uint64_t>k, paths[i], channel, k0, k1)
    return out


def simulate_affine(double[::1] slope, double[::1] intercept, double[::1] tau,
                    double y0, double dt, double phi0, double chi0, double rho,
                    uint64_t seed, uint64_t[::1] paths, int threads=1, chunk=None):
    cdef Py_ssize_t N = slope.shape[0]
    cdef Py_ssize_t P = paths.shape[0]
    y_arr = np.empty((P, N + 1))
    v_arr = np.zeros((P, N + 1))
    H_arr = np.empty((P, N + 1))
    B_arr = np.empty((P, N + 1))
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] v = v_arr
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] Bm = B_arr
    cdef double sqdt = sqrt(dt)
    cdef double perp = sqrt(1.0 - rho * rho)
    cdef uint32_t k0 = <uint32_t>(seed & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef Py_ssize_t i, k
    cdef double yk, Hk, Bk, vk, vp, amp, dW, dZ, dB
    cdef uint64_t path
    if threads < 1:
        threads = 1
    for i in prange(P, nogil=True, schedule="static", num_threads=threads):
        path = paths[i]
        yk = y0
        Hk = 0.0
        Bk = 0.0
        y[i, 0] = yk
        H[i, 0] = Hk
        Bm[i, 0] = Bk
        for k in range(N):
            vk = slope[k] * yk + intercept[k]
            vp = vk if vk > 0.0 else 0.0
            amp = sqrt(tau[k] * vp)
            dW = sqdt * _philox_normal(<uint64_t>k, path, 0, k0, k1)
            dZ = rho * dW + perp * (sqdt * _philox_normal(<uint64_t>k, path, 1, k0, k1))
            dB = sqdt * _philox_normal(<uint64_t>k, path, 2, k0, k1)
            yk = yk - vk * dt + phi0 * amp * dW
            Hk = Hk + chi0 * amp * dZ
            Bk = Bk + dB
            v[i, k] = vk
            y[i, k + 1] = yk
            H[i, k + 1] = Hk
            Bm[i, k + 1] = Bk
    return y_arr, v_arr, H_arr, B_arr
