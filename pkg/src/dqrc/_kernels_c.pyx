# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate kernels: the hot inner loops of the simulator.

Semantics and qubit/bit conventions match ``_kernels_py`` exactly; the test
suite checks both implementations against the same dense-matrix oracle.
Loops release the GIL so concurrent workers overlap.
"""

from libc.math cimport cos, sin, sqrt

IMPLEMENTATION = "cython"


def apply_rx(double complex[::1] amps, int n, int q, double theta):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t stride = 1 << (n - 1 - q)
    cdef double c = cos(theta / 2.0)
    cdef double s = sin(theta / 2.0)
    cdef double complex ms = -1j * s
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off, i0, i1
    cdef double complex a0, a1
    with nogil:
        while base < dim:
            for off in range(stride):
                i0 = base + off
                i1 = i0 + stride
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = c * a0 + ms * a1
                amps[i1] = ms * a0 + c * a1
            base += 2 * stride


def apply_rz(double complex[::1] amps, int n, int q, double theta):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t stride = 1 << (n - 1 - q)
    cdef double half = theta / 2.0
    cdef double complex e0 = cos(half) - 1j * sin(half)
    cdef double complex e1 = cos(half) + 1j * sin(half)
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off, i0
    with nogil:
        while base < dim:
            for off in range(stride):
                i0 = base + off
                amps[i0] = amps[i0] * e0
                amps[i0 + stride] = amps[i0 + stride] * e1
            base += 2 * stride


def apply_h(double complex[::1] amps, int n, int q):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t stride = 1 << (n - 1 - q)
    cdef double inv = 1.0 / sqrt(2.0)
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off, i0, i1
    cdef double complex a0, a1
    with nogil:
        while base < dim:
            for off in range(stride):
                i0 = base + off
                i1 = i0 + stride
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = inv * (a0 + a1)
                amps[i1] = inv * (a0 - a1)
            base += 2 * stride


def apply_phase(double complex[::1] amps, int n, int q, double theta):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t stride = 1 << (n - 1 - q)
    cdef double complex e = cos(theta) + 1j * sin(theta)
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off
    with nogil:
        while base < dim:
            for off in range(stride):
                amps[base + off + stride] = amps[base + off + stride] * e
            base += 2 * stride


def apply_cnot(double complex[::1] amps, int n, int control, int target):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t cmask = 1 << (n - 1 - control)
    cdef Py_ssize_t tmask = 1 << (n - 1 - target)
    cdef Py_ssize_t i, j
    cdef double complex tmp
    with nogil:
        for i in range(dim):
            if (i & cmask) and not (i & tmask):
                j = i | tmask
                tmp = amps[i]
                amps[i] = amps[j]
                amps[j] = tmp


def expval_z(double complex[::1] amps, int n, int q):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t mask = 1 << (n - 1 - q)
    cdef double acc = 0.0
    cdef double p
    cdef Py_ssize_t i
    with nogil:
        for i in range(dim):
            p = amps[i].real * amps[i].real + amps[i].imag * amps[i].imag
            if i & mask:
                acc -= p
            else:
                acc += p
    return acc
