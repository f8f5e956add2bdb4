# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element-batch kernels; contract mirrors _fallback.py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def grad_grad(double[:, :, :, ::1] gphys, double[:, ::1] detw):
    cdef Py_ssize_t ne = gphys.shape[0], nq = gphys.shape[1], nl = gphys.shape[2]
    cdef Py_ssize_t e, q, a, b
    cdef double w, acc
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q]
            for a in range(nl):
                for b in range(nl):
                    acc = gphys[e, q, a, 0] * gphys[e, q, b, 0] \
                        + gphys[e, q, a, 1] * gphys[e, q, b, 1]
                    out[e, a, b] += w * acc
    return out_arr


def mass(double[:, ::1] phi, double[:, ::1] detw):
    cdef Py_ssize_t ne = detw.shape[0], nq = phi.shape[0], nl = phi.shape[1]
    cdef Py_ssize_t e, q, a, b
    cdef double w
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q]
            for a in range(nl):
                for b in range(nl):
                    out[e, a, b] += w * phi[q, a] * phi[q, b]
    return out_arr


def scaled_mass(double[:, ::1] phi, double[:, ::1] coef, double[:, ::1] detw):
    cdef Py_ssize_t ne = detw.shape[0], nq = phi.shape[0], nl = phi.shape[1]
    cdef Py_ssize_t e, q, a, b
    cdef double w
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q] * coef[e, q]
            for a in range(nl):
                for b in range(nl):
                    out[e, a, b] += w * phi[q, a] * phi[q, b]
    return out_arr


def transport(double[:, ::1] phi, double[:, :, :, ::1] gphys,
              double[:, :, ::1] conv, double[:, ::1] detw):
    cdef Py_ssize_t ne = gphys.shape[0], nq = gphys.shape[1], nl = gphys.shape[2]
    cdef Py_ssize_t e, q, a, b
    cdef double w, cdotg
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q]
            for b in range(nl):
                cdotg = conv[e, q, 0] * gphys[e, q, b, 0] \
                      + conv[e, q, 1] * gphys[e, q, b, 1]
                for a in range(nl):
                    out[e, a, b] += w * cdotg * phi[q, a]
    return out_arr


def transport_dual(double[:, ::1] phi, double[:, :, :, ::1] gphys,
                   double[:, :, ::1] conv, double[:, ::1] detw):
    cdef Py_ssize_t ne = gphys.shape[0], nq = gphys.shape[1], nl = gphys.shape[2]
    cdef Py_ssize_t e, q, a, b
    cdef double w, cdotg
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q]
            for a in range(nl):
                cdotg = conv[e, q, 0] * gphys[e, q, a, 0] \
                      + conv[e, q, 1] * gphys[e, q, a, 1]
                for b in range(nl):
                    out[e, a, b] += w * cdotg * phi[q, b]
    return out_arr


def div_blocks(double[:, ::1] phi_p, double[:, :, :, ::1] gphys_v,
               double[:, ::1] detw):
    cdef Py_ssize_t ne = gphys_v.shape[0], nq = gphys_v.shape[1]
    cdef Py_ssize_t nlv = gphys_v.shape[2], nlp = phi_p.shape[1]
    cdef Py_ssize_t e, q, k, j
    cdef double w
    out_arr = np.zeros((ne, nlp, nlv, 2))
    cdef double[:, :, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q]
            for k in range(nlp):
                for j in range(nlv):
                    out[e, k, j, 0] += w * phi_p[q, k] * gphys_v[e, q, j, 0]
                    out[e, k, j, 1] += w * phi_p[q, k] * gphys_v[e, q, j, 1]
    return out_arr


def load(double[:, ::1] phi, double[:, ::1] f, double[:, ::1] detw):
    cdef Py_ssize_t ne = detw.shape[0], nq = phi.shape[0], nl = phi.shape[1]
    cdef Py_ssize_t e, q, a
    cdef double w
    out_arr = np.zeros((ne, nl))
    cdef double[:, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = detw[e, q] * f[e, q]
            for a in range(nl):
                out[e, a] += w * phi[q, a]
    return out_arr


def sq_norm(vals, double[:, ::1] detw):
    arr = np.ascontiguousarray(vals, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    else:
        arr = arr.reshape(arr.shape[0], arr.shape[1], -1)
    cdef double[:, :, ::1] v = arr
    cdef Py_ssize_t ne = v.shape[0], nq = v.shape[1], nc = v.shape[2]
    cdef Py_ssize_t e, q, c
    cdef double acc
    out_arr = np.zeros(ne)
    cdef double[::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            acc = 0.0
            for c in range(nc):
                acc += v[e, q, c] * v[e, q, c]
            out[e] += detw[e, q] * acc
    return out_arr
