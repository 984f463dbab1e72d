# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_reference.py``; same signatures."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def conv1d_forward(double[:, :, ::1] x, double[:, :, ::1] w, double[::1] b, Py_ssize_t stride):
    cdef Py_ssize_t batch = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kernel = w.shape[2]
    cdef Py_ssize_t n_out = (length - kernel) // stride + 1
    out_arr = np.empty((batch, cout, n_out), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t bi, o, c, l, k, start
    cdef double acc
    with nogil:
        for bi in range(batch):
            for o in range(cout):
                for l in range(n_out):
                    start = l * stride
                    acc = b[o]
                    for c in range(cin):
                        for k in range(kernel):
                            acc = acc + w[o, c, k] * x[bi, c, start + k]
                    out[bi, o, l] = acc
    return out_arr


def conv1d_backward(double[:, :, ::1] x, double[:, :, ::1] w, double[:, :, ::1] grad_out,
                    Py_ssize_t stride):
    cdef Py_ssize_t batch = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kernel = w.shape[2]
    cdef Py_ssize_t n_out = grad_out.shape[2]
    gx_arr = np.zeros((batch, cin, length), dtype=np.float64)
    gw_arr = np.zeros((cout, cin, kernel), dtype=np.float64)
    gb_arr = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[:, :, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef Py_ssize_t bi, o, c, l, k, start
    cdef double g
    with nogil:
        for bi in range(batch):
            for o in range(cout):
                for l in range(n_out):
                    g = grad_out[bi, o, l]
                    if g == 0.0:
                        continue
                    gb[o] += g
                    start = l * stride
                    for c in range(cin):
                        for k in range(kernel):
                            gw[o, c, k] += g * x[bi, c, start + k]
                            gx[bi, c, start + k] += g * w[o, c, k]
    return gx_arr, gw_arr, gb_arr


def vmd_admm(f_plus, freqs, omega0, double alpha, double tau, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t n_bins = len(f_plus)
    cdef Py_ssize_t n_modes = len(omega0)
    cdef double[::1] fr = np.ascontiguousarray(np.real(f_plus), dtype=np.float64)
    cdef double[::1] fi = np.ascontiguousarray(np.imag(f_plus), dtype=np.float64)
    cdef double[::1] nu = np.ascontiguousarray(freqs, dtype=np.float64)
    ur_arr = np.zeros((n_modes, n_bins), dtype=np.float64)
    ui_arr = np.zeros((n_modes, n_bins), dtype=np.float64)
    omega_arr = np.asarray(omega0, dtype=np.float64).copy()
    cdef double[:, ::1] ur = ur_arr
    cdef double[:, ::1] ui = ui_arr
    cdef double[::1] omega = omega_arr
    cdef double[::1] lr = np.zeros(n_bins, dtype=np.float64)
    cdef double[::1] li = np.zeros(n_bins, dtype=np.float64)
    cdef double[::1] tr = np.zeros(n_bins, dtype=np.float64)
    cdef double[::1] ti = np.zeros(n_bins, dtype=np.float64)
    cdef Py_ssize_t it = 0, k, i, done = 0
    cdef double diff, norm, mass, moment, df, power, om, scale
    cdef double pr, pi, orr, oi, nr, ni, dr, di
    with nogil:
        while it < max_iter:
            it += 1
            diff = 0.0
            norm = 0.0
            for k in range(n_modes):
                mass = 0.0
                moment = 0.0
                om = omega[k]
                for i in range(n_bins):
                    pr = ur[k, i]
                    pi = ui[k, i]
                    orr = tr[i] - pr
                    oi = ti[i] - pi
                    df = nu[i] - om
                    scale = 1.0 / (1.0 + alpha * df * df)
                    nr = (fr[i] - orr - 0.5 * lr[i]) * scale
                    ni = (fi[i] - oi - 0.5 * li[i]) * scale
                    power = nr * nr + ni * ni
                    mass += power
                    moment += nu[i] * power
                    tr[i] = orr + nr
                    ti[i] = oi + ni
                    dr = nr - pr
                    di = ni - pi
                    diff += dr * dr + di * di
                    norm += pr * pr + pi * pi
                    ur[k, i] = nr
                    ui[k, i] = ni
                if mass > 0.0:
                    omega[k] = moment / mass
            if tau != 0.0:
                for i in range(n_bins):
                    lr[i] = lr[i] + tau * (tr[i] - fr[i])
                    li[i] = li[i] + tau * (ti[i] - fi[i])
            if diff <= tol * norm:
                done = 1
                break
    return ur_arr + 1j * ui_arr, omega_arr, it, bool(done)
