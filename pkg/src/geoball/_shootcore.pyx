# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagator for builtin warpings (euclidean, sphere, hyperbolic).

Mirrors _shootpy.propagate step for step: same tableau, same controller,
same evaluation order, so accepted-step sequences agree bit for bit with
the pure Python reference (the build disables FP contraction).
"""

from libc.math cimport sin, sinh, pow, fabs, sqrt

from ._shootpy import StepUnderflow

cdef double A21 = 1.0/5.0
cdef double A31 = 3.0/40.0, A32 = 9.0/40.0
cdef double A41 = 44.0/45.0, A42 = -56.0/15.0, A43 = 32.0/9.0
cdef double A51 = 19372.0/6561.0, A52 = -25360.0/2187.0
cdef double A53 = 64448.0/6561.0, A54 = -212.0/729.0
cdef double A61 = 9017.0/3168.0, A62 = -355.0/33.0, A63 = 46732.0/5247.0
cdef double A64 = 49.0/176.0, A65 = -5103.0/18656.0
cdef double B1 = 35.0/384.0, B3 = 500.0/1113.0, B4 = 125.0/192.0
cdef double B5 = -2187.0/6784.0, B6 = 11.0/84.0
cdef double E1 = 71.0/57600.0, E3 = -71.0/16695.0, E4 = 71.0/1920.0
cdef double E5 = -17253.0/339200.0, E6 = 22.0/525.0, E7 = -1.0/40.0


cdef inline double _fw(int kind, double kappa, double t):
    if kind == 0:
        return t
    if kind == 1:
        return sin(kappa*t)/kappa
    return sinh(kappa*t)/kappa


def propagate_builtin(int kind, double kappa, int nm1, double lam,
                      double t0, double y10, double y20, double t_end,
                      double rtol, double atol, nodes=None):
    """Same contract as _shootpy.propagate, with f given by (kind, kappa)."""
    cdef double t = t0, y1 = y10, y2 = y20
    cdef double span = t_end - t0
    cdef double dnm1 = <double>nm1
    cdef double w, u1, u2, v1, v2, e1, e2, s1, s2, err, fac, h
    cdef double k1_1, k1_2, k2_1, k2_2, k3_1, k3_2, k4_1, k4_2
    cdef double k5_1, k5_2, k6_1, k6_2, k7_1, k7_2
    cdef double a1, a2
    cdef double sign_prev, sign_new
    cdef int crossings = 0
    cdef Py_ssize_t inode = 0, n_nodes = 0
    cdef double[::1] nv = None
    cdef bint hit_node, have_nodes = nodes is not None

    node_vals = [] if have_nodes else None
    if have_nodes:
        import numpy as _np
        nv = _np.ascontiguousarray(nodes, dtype=_np.float64)
        n_nodes = nv.shape[0]
        while inode < n_nodes and nv[inode] <= t0:
            node_vals.append((y1, y2))
            inode += 1

    w = pow(_fw(kind, kappa, t), dnm1)
    k1_1 = y2/w
    k1_2 = -lam*w*y1

    h = 0.01*span
    sign_prev = 1.0 if y1 > 0 else (-1.0 if y1 < 0 else 0.0)

    while t < t_end:
        if t + h >= t_end:
            h = t_end - t
        hit_node = False
        if have_nodes and inode < n_nodes and t + h >= nv[inode]:
            h = nv[inode] - t
            hit_node = True
        if h <= 1e-14*span:
            raise StepUnderflow("step size underflow in shooting integration")

        w = pow(_fw(kind, kappa, t + A21*h), dnm1)
        u1 = y1 + h*A21*k1_1
        u2 = y2 + h*A21*k1_2
        k2_1 = u2/w; k2_2 = -lam*w*u1

        w = pow(_fw(kind, kappa, t + 0.3*h), dnm1)
        u1 = y1 + h*(A31*k1_1 + A32*k2_1)
        u2 = y2 + h*(A31*k1_2 + A32*k2_2)
        k3_1 = u2/w; k3_2 = -lam*w*u1

        w = pow(_fw(kind, kappa, t + 0.8*h), dnm1)
        u1 = y1 + h*(A41*k1_1 + A42*k2_1 + A43*k3_1)
        u2 = y2 + h*(A41*k1_2 + A42*k2_2 + A43*k3_2)
        k4_1 = u2/w; k4_2 = -lam*w*u1

        w = pow(_fw(kind, kappa, t + (8.0/9.0)*h), dnm1)
        u1 = y1 + h*(A51*k1_1 + A52*k2_1 + A53*k3_1 + A54*k4_1)
        u2 = y2 + h*(A51*k1_2 + A52*k2_2 + A53*k3_2 + A54*k4_2)
        k5_1 = u2/w; k5_2 = -lam*w*u1

        w = pow(_fw(kind, kappa, t + h), dnm1)
        u1 = y1 + h*(A61*k1_1 + A62*k2_1 + A63*k3_1 + A64*k4_1 + A65*k5_1)
        u2 = y2 + h*(A61*k1_2 + A62*k2_2 + A63*k3_2 + A64*k4_2 + A65*k5_2)
        k6_1 = u2/w; k6_2 = -lam*w*u1

        v1 = y1 + h*(B1*k1_1 + B3*k3_1 + B4*k4_1 + B5*k5_1 + B6*k6_1)
        v2 = y2 + h*(B1*k1_2 + B3*k3_2 + B4*k4_2 + B5*k5_2 + B6*k6_2)
        k7_1 = v2/w; k7_2 = -lam*w*v1

        e1 = h*(E1*k1_1 + E3*k3_1 + E4*k4_1 + E5*k5_1 + E6*k6_1 + E7*k7_1)
        e2 = h*(E1*k1_2 + E3*k3_2 + E4*k4_2 + E5*k5_2 + E6*k6_2 + E7*k7_2)
        a1 = fabs(y1) if fabs(y1) > fabs(v1) else fabs(v1)
        a2 = fabs(y2) if fabs(y2) > fabs(v2) else fabs(v2)
        s1 = e1/(atol + rtol*a1)
        s2 = e2/(atol + rtol*a2)
        err = sqrt(0.5*(s1*s1 + s2*s2))

        if err <= 1.0:
            t += h
            y1 = v1; y2 = v2
            k1_1 = k7_1; k1_2 = k7_2
            sign_new = 1.0 if y1 > 0 else (-1.0 if y1 < 0 else 0.0)
            if t < t_end and sign_new*sign_prev < 0.0:
                crossings += 1
            if sign_new != 0.0:
                sign_prev = sign_new
            if hit_node:
                node_vals.append((y1, y2))
                inode += 1
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9*pow(err, -0.2)
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
        h *= fac

    if have_nodes:
        while inode < n_nodes:
            node_vals.append((y1, y2))
            inode += 1
    return y1, y2, crossings, node_vals
