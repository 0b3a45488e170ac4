"""Compiled inner loops shared by every public evaluation path.

All evaluation of the vector field, its time derivative and the RK4 update
goes through these functions, so single evaluations and long integrations are
bit-for-bit consistent.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def acceleration_into(theta, omega, natural, damping, inertia, weights, alpha, coupling, out):
    n = theta.shape[0]
    scale = coupling / n
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += weights[i, k] * math.sin(theta[k] - theta[i] + alpha[i, k])
        out[i] = (natural[i] - damping[i] * omega[i] + scale * s) / inertia[i]


@njit(cache=True)
def jerk_into(theta, omega, accel, damping, inertia, weights, alpha, coupling, out):
    n = theta.shape[0]
    scale = coupling / n
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += weights[i, k] * math.cos(theta[k] - theta[i] + alpha[i, k]) * (omega[k] - omega[i])
        out[i] = (-damping[i] * accel[i] + scale * s) / inertia[i]


@njit(cache=True)
def rk4_increment(theta, omega, dt, natural, damping, inertia, weights, alpha, coupling,
                  d_theta, d_omega, work):
    """Write the classical RK4 increments of (theta, omega) into d_theta, d_omega.

    ``work`` is a (6, n) scratch buffer.
    """
    n = theta.shape[0]
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    th = work[4]
    om = work[5]
    half = 0.5 * dt

    acceleration_into(theta, omega, natural, damping, inertia, weights, alpha, coupling, k1)
    for i in range(n):
        d_theta[i] = omega[i]
        th[i] = theta[i] + half * omega[i]
        om[i] = omega[i] + half * k1[i]
    acceleration_into(th, om, natural, damping, inertia, weights, alpha, coupling, k2)
    for i in range(n):
        v = om[i]
        d_theta[i] += 2.0 * v
        th[i] = theta[i] + half * v
        om[i] = omega[i] + half * k2[i]
    acceleration_into(th, om, natural, damping, inertia, weights, alpha, coupling, k3)
    for i in range(n):
        v = om[i]
        d_theta[i] += 2.0 * v
        th[i] = theta[i] + dt * v
        om[i] = omega[i] + dt * k3[i]
    acceleration_into(th, om, natural, damping, inertia, weights, alpha, coupling, k4)
    sixth = dt / 6.0
    for i in range(n):
        d_theta[i] = sixth * (d_theta[i] + om[i])
        d_omega[i] = sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def integrate(theta0, omega0, dt, nsteps, stride, compensated,
              natural, damping, inertia, weights, alpha, coupling):
    """Fixed-step RK4 from (theta0, omega0), recording every ``stride`` steps.

    Returns (thetas, omegas, failed_step); failed_step is -1 on success, else
    the 1-based index of the first step producing a non-finite state (the
    records up to that point are kept).
    """
    n = theta0.shape[0]
    nrec = nsteps // stride + 1
    thetas = np.empty((nrec, n))
    omegas = np.empty((nrec, n))
    theta = theta0.copy()
    omega = omega0.copy()
    c_theta = np.zeros(n)
    c_omega = np.zeros(n)
    d_theta = np.empty(n)
    d_omega = np.empty(n)
    work = np.empty((6, n))
    thetas[0] = theta
    omegas[0] = omega
    rec = 1
    for step in range(1, nsteps + 1):
        rk4_increment(theta, omega, dt, natural, damping, inertia, weights, alpha, coupling,
                      d_theta, d_omega, work)
        ok = True
        for i in range(n):
            if compensated:
                # Kahan summation: increments are ~1e-10 of the phase magnitude
                y = d_theta[i] - c_theta[i]
                t = theta[i] + y
                c_theta[i] = (t - theta[i]) - y
                theta[i] = t
                y = d_omega[i] - c_omega[i]
                t = omega[i] + y
                c_omega[i] = (t - omega[i]) - y
                omega[i] = t
            else:
                theta[i] = theta[i] + d_theta[i]
                omega[i] = omega[i] + d_omega[i]
            if not (math.isfinite(theta[i]) and math.isfinite(omega[i])):
                ok = False
        if not ok:
            return thetas[:rec], omegas[:rec], step
        if step % stride == 0:
            thetas[rec] = theta
            omegas[rec] = omega
            rec += 1
    return thetas, omegas, -1


@njit(cache=True)
def derivatives_batch(thetas, omegas, natural, damping, inertia, weights, alpha, coupling):
    """Acceleration and jerk at every recorded state, with roundoff bounds.

    The bounds (columns omega, a, b of ``floors``) are the largest
    per-oscillator floating-point evaluation error of that quantity, summing
    every term of its formula in absolute value times machine epsilon.
    Dividing by small inertias amplifies them.
    """
    m, n = thetas.shape
    eps = np.finfo(np.float64).eps
    scale = coupling / n
    accel = np.empty((m, n))
    jerk = np.empty((m, n))
    floors = np.zeros((m, 3))
    for r in range(m):
        th = thetas[r]
        om = omegas[r]
        acceleration_into(th, om, natural, damping, inertia, weights, alpha, coupling, accel[r])
        jerk_into(th, om, accel[r], damping, inertia, weights, alpha, coupling, jerk[r])
        fa = 0.0
        fw = 0.0
        for i in range(n):
            s = 0.0
            for k in range(n):
                s += weights[i, k] * (abs(th[k]) + abs(th[i]) + 1.0)
            e = eps * (abs(natural[i]) + damping[i] * abs(om[i]) + scale * s) / inertia[i]
            fa = max(fa, e)
            fw = max(fw, e * inertia[i] / damping[i])
        fb = 0.0
        for i in range(n):
            s = 0.0
            for k in range(n):
                s += weights[i, k] * (2.0 * fw + eps * (abs(om[k]) + abs(om[i])))
            fb = max(fb, (damping[i] * fa + scale * s) / inertia[i])
        floors[r, 0] = fw
        floors[r, 1] = fa
        floors[r, 2] = fb
    return accel, jerk, floors
