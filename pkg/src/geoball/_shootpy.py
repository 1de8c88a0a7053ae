"""Reference propagator for the radial shooting problem, pure Python.

Integrates the first-order system for the weighted Sturm-Liouville equation

    y1' = y2 / f^{n-1},    y2' = -lam * f^{n-1} * y1

with an adaptive Dormand-Prince 5(4) pair. y1 is the eigenfunction candidate,
y2 = f^{n-1} y1' its weighted flux; this form keeps the system well behaved
through the vanishing weight near the pole.

The compiled twin in _shootcore must match this routine's accepted-step
sequence bit for bit on builtin warpings; the benchmark script compares them.
"""

import math

# Dormand-Prince 5(4) tableau
_A21 = 1.0/5.0
_A31, _A32 = 3.0/40.0, 9.0/40.0
_A41, _A42, _A43 = 44.0/45.0, -56.0/15.0, 32.0/9.0
_A51, _A52, _A53, _A54 = 19372.0/6561.0, -25360.0/2187.0, 64448.0/6561.0, -212.0/729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0/3168.0, -355.0/33.0, 46732.0/5247.0,
                                49.0/176.0, -5103.0/18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0/384.0, 500.0/1113.0, 125.0/192.0, -2187.0/6784.0, 11.0/84.0
# y5 - y4 error weights (k2 column is zero)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0/57600.0, -71.0/16695.0, 71.0/1920.0,
                                -17253.0/339200.0, 22.0/525.0, -1.0/40.0)


class StepUnderflow(RuntimeError):
    """Raised when the controller cannot make progress (stiff failure)."""


def propagate(fw, nm1, lam, t0, y10, y20, t_end, rtol, atol, nodes=None):
    """Integrate from t0 to t_end; returns (y1, y2, crossings, node_values).

    fw: scalar warping evaluation f(t); nm1 = n-1. crossings counts sign
    changes of y1 between accepted steps with t < t_end (interior zeros).
    nodes: optional increasing array of output radii inside [t0, t_end];
    the integrator is forced to land on each, recording (y1, y2) there.
    """
    t, y1, y2 = t0, y10, y20
    span = t_end - t0
    w = fw(t)**nm1
    k1_1, k1_2 = y2/w, -lam*w*y1

    node_vals = [] if nodes is not None else None
    inode = 0
    if nodes is not None:
        while inode < len(nodes) and nodes[inode] <= t0:
            node_vals.append((y1, y2))
            inode += 1

    h = 0.01*span
    crossings = 0
    sign_prev = 1.0 if y1 > 0 else (-1.0 if y1 < 0 else 0.0)

    while t < t_end:
        if t + h >= t_end:
            h = t_end - t
        hit_node = False
        if nodes is not None and inode < len(nodes) and t + h >= nodes[inode]:
            h = nodes[inode] - t
            hit_node = True
        if h <= 1e-14*span:
            raise StepUnderflow("step size underflow in shooting integration")

        w = fw(t + _A21*h)**nm1
        u1 = y1 + h*_A21*k1_1
        u2 = y2 + h*_A21*k1_2
        k2_1, k2_2 = u2/w, -lam*w*u1

        w = fw(t + 0.3*h)**nm1
        u1 = y1 + h*(_A31*k1_1 + _A32*k2_1)
        u2 = y2 + h*(_A31*k1_2 + _A32*k2_2)
        k3_1, k3_2 = u2/w, -lam*w*u1

        w = fw(t + 0.8*h)**nm1
        u1 = y1 + h*(_A41*k1_1 + _A42*k2_1 + _A43*k3_1)
        u2 = y2 + h*(_A41*k1_2 + _A42*k2_2 + _A43*k3_2)
        k4_1, k4_2 = u2/w, -lam*w*u1

        w = fw(t + (8.0/9.0)*h)**nm1
        u1 = y1 + h*(_A51*k1_1 + _A52*k2_1 + _A53*k3_1 + _A54*k4_1)
        u2 = y2 + h*(_A51*k1_2 + _A52*k2_2 + _A53*k3_2 + _A54*k4_2)
        k5_1, k5_2 = u2/w, -lam*w*u1

        w = fw(t + h)**nm1
        u1 = y1 + h*(_A61*k1_1 + _A62*k2_1 + _A63*k3_1 + _A64*k4_1 + _A65*k5_1)
        u2 = y2 + h*(_A61*k1_2 + _A62*k2_2 + _A63*k3_2 + _A64*k4_2 + _A65*k5_2)
        k6_1, k6_2 = u2/w, -lam*w*u1

        v1 = y1 + h*(_B1*k1_1 + _B3*k3_1 + _B4*k4_1 + _B5*k5_1 + _B6*k6_1)
        v2 = y2 + h*(_B1*k1_2 + _B3*k3_2 + _B4*k4_2 + _B5*k5_2 + _B6*k6_2)
        k7_1, k7_2 = v2/w, -lam*w*v1

        e1 = h*(_E1*k1_1 + _E3*k3_1 + _E4*k4_1 + _E5*k5_1 + _E6*k6_1 + _E7*k7_1)
        e2 = h*(_E1*k1_2 + _E3*k3_2 + _E4*k4_2 + _E5*k5_2 + _E6*k6_2 + _E7*k7_2)
        s1 = e1/(atol + rtol*(abs(y1) if abs(y1) > abs(v1) else abs(v1)))
        s2 = e2/(atol + rtol*(abs(y2) if abs(y2) > abs(v2) else abs(v2)))
        err = math.sqrt(0.5*(s1*s1 + s2*s2))

        if err <= 1.0:
            t += h
            y1, y2 = v1, v2
            k1_1, k1_2 = k7_1, k7_2      # FSAL
            sign_new = 1.0 if y1 > 0 else (-1.0 if y1 < 0 else 0.0)
            if t < t_end and sign_new*sign_prev < 0.0:
                crossings += 1
            if sign_new != 0.0:
                sign_prev = sign_new
            if hit_node:
                node_vals.append((y1, y2))
                inode += 1
        # PI-free basic controller
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9*err**-0.2
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
        h *= fac

    if nodes is not None:
        while inode < len(nodes):
            node_vals.append((y1, y2))   # nodes at/after t_end: final state
            inode += 1
    return y1, y2, crossings, node_vals
