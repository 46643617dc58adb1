"""Numba-compiled inner loops for the ROM and high-fidelity dynamics.

Everything here is arithmetic only: no validation, no error handling.  The
public modules (rom, hf) wrap these kernels, perform precondition checks,
and expose structured types.  Parameters arrive as a flat tuple of arrays
(see pack_params) cached on the params object.
"""

import numpy as np
from numba import njit

# pack layout indices
# 0 m_b, 1 m_l, 2 I_b(3,3), 3 hips(4,3), 4 L_leg, 5 lat, 6 q_nom, 7 c_m,
# 8 spins(4), 9 drag_lin(3), 10 drag_ang(3), 11 g, 12 sx(4), 13 sy(4),
# 14 fracs(nf), 15 pmasses(nf), 16 I_rom(3,3), 17 I_rom_inv(3,3)


def pack_params(p, hf=False):
    """Flatten a RobotParams/HfParams into a numba-friendly tuple."""
    from .params import LEG_SIGN_X, LEG_SIGN_Y
    if hf:
        fracs = np.asarray(p.leg_fractions, dtype=float)
        pmass = np.asarray(p.leg_point_masses, dtype=float)
    else:
        fracs = np.zeros(0)
        pmass = np.zeros(0)
    I_rom = p.rom_inertia()
    return (float(p.m_b), float(p.m_l), np.ascontiguousarray(p.I_b),
            np.ascontiguousarray(p.hip_offsets), float(p.L_leg),
            float(p.lat_offset), float(p.q_nominal), float(p.c_m),
            np.ascontiguousarray(p.spin_dirs),
            np.ascontiguousarray(p.drag_lin), np.ascontiguousarray(p.drag_ang),
            float(p.g), LEG_SIGN_X.copy(), LEG_SIGN_Y.copy(),
            fracs, pmass, np.ascontiguousarray(I_rom),
            np.ascontiguousarray(np.linalg.inv(I_rom)))


def get_pack(params, hf=False):
    key = "_pack_hf" if hf else "_pack_rom"
    pk = getattr(params, key, None)
    if pk is None:
        pk = pack_params(params, hf=hf)
        setattr(params, key, pk)
    return pk


@njit(cache=True)
def _rot(theta):
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    cy, sy = np.cos(theta[2]), np.sin(theta[2])
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    return R


@njit(cache=True)
def _rot_derivs(theta):
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    cy, sy = np.cos(theta[2]), np.sin(theta[2])
    Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    dRz = np.array([[-sy, -cy, 0.0], [cy, -sy, 0.0], [0.0, 0.0, 0.0]])
    dRy = np.array([[-sp, 0.0, cp], [0.0, 0.0, 0.0], [-cp, 0.0, -sp]])
    dRx = np.array([[0.0, 0.0, 0.0], [0.0, -sr, -cr], [0.0, cr, -sr]])
    out = np.empty((3, 3, 3))
    out[0] = Rz @ Ry @ dRx
    out[1] = Rz @ dRy @ Rx
    out[2] = dRz @ Ry @ Rx
    return out


@njit(cache=True)
def _euler_rate(theta):
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp = np.cos(theta[1])
    tp = np.tan(theta[1])
    J = np.empty((3, 3))
    J[0, 0] = 1.0
    J[0, 1] = sr * tp
    J[0, 2] = cr * tp
    J[1, 0] = 0.0
    J[1, 1] = cr
    J[1, 2] = -sr
    J[2, 0] = 0.0
    J[2, 1] = sr / cp
    J[2, 2] = cr / cp
    return J


@njit(cache=True)
def _omega_mat(theta):
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    E = np.empty((3, 3))
    E[0, 0] = 1.0
    E[0, 1] = 0.0
    E[0, 2] = -sp
    E[1, 0] = 0.0
    E[1, 1] = cr
    E[1, 2] = sr * cp
    E[2, 0] = 0.0
    E[2, 1] = -sr
    E[2, 2] = cr * cp
    return E


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def thruster_wrench(q_a, thrusts, hips, L, lat, q_nom, c_m, spins, sx, sy):
    """Net thruster (force, torque) in the body frame."""
    force = np.zeros(3)
    torque = np.zeros(3)
    for k in range(4):
        rx = hips[k, 0] + sx[k] * L * np.sin(q_a[k])
        ry = hips[k, 1] + sy[k] * lat
        rz = hips[k, 2] - L * np.cos(q_a[k])
        dq = q_a[k] - q_nom
        dx = -sx[k] * np.sin(dq)
        dz = np.cos(dq)
        T = thrusts[k]
        fx, fz = T * dx, T * dz
        force[0] += fx
        force[2] += fz
        torque[0] += ry * fz
        torque[1] += rz * fx - rx * fz
        torque[2] += -ry * fx
        cm = spins[k] * c_m * T
        torque[0] += cm * dx
        torque[2] += cm * dz
    return force, torque


@njit(cache=True)
def rom_rhs(x, u, m_net, I, Iinv, g, hips, L, lat, q_nom, c_m, spins,
            drag_lin, drag_ang, sx, sy):
    theta = x[3:6]
    v = x[10:13]
    w = x[13:16]
    force, torque = thruster_wrench(x[6:10], u[:4], hips, L, lat, q_nom,
                                    c_m, spins, sx, sy)
    R = _rot(theta)
    J = _euler_rate(theta)
    dx = np.empty(20)
    dx[0:3] = v
    dx[3:6] = J @ w
    dx[6:10] = x[16:20]
    fw = R @ force
    for i in range(3):
        dx[10 + i] = (fw[i] - drag_lin[i] * v[i]) / m_net
    dx[12] -= g
    Iw = I @ w
    tau = torque - _cross(w, Iw)
    for i in range(3):
        tau[i] -= drag_ang[i] * w[i]
    dx[13:16] = Iinv @ tau
    dx[16:20] = u[4:8]
    return dx


@njit(cache=True)
def rom_jac(x, u, m_net, I, Iinv, g, hips, L, lat, q_nom, c_m, spins,
            drag_lin, drag_ang, sx, sy):
    theta = x[3:6]
    w = x[13:16]
    q_a = x[6:10]
    T = u[0:4]
    R = _rot(theta)
    dR = _rot_derivs(theta)
    J = _euler_rate(theta)

    # euler-rate matrix derivatives wrt roll, pitch
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp = np.cos(theta[1])
    tp = np.tan(theta[1])
    dJ = np.zeros((3, 3, 3))
    dJ[0, 0, 1] = cr * tp
    dJ[0, 0, 2] = -sr * tp
    dJ[0, 1, 1] = -sr
    dJ[0, 1, 2] = -cr
    dJ[0, 2, 1] = cr / cp
    dJ[0, 2, 2] = -sr / cp
    sec2 = 1.0 / (cp * cp)
    dJ[1, 0, 1] = sr * sec2
    dJ[1, 0, 2] = cr * sec2
    dJ[1, 2, 1] = sr * tp / cp
    dJ[1, 2, 2] = cr * tp / cp

    A = np.zeros((20, 20))
    B = np.zeros((20, 8))
    for i in range(3):
        A[i, 10 + i] = 1.0
    for j in range(3):
        A[3:6, 3 + j] = dJ[j] @ w
    A[3:6, 13:16] = J
    for i in range(4):
        A[6 + i, 16 + i] = 1.0
        B[16 + i, 4 + i] = 1.0

    f_b = np.zeros(3)
    pos = np.empty((4, 3))
    dirs = np.empty((4, 3))
    dpos = np.empty((4, 3))
    ddirs = np.empty((4, 3))
    for k in range(4):
        pos[k, 0] = hips[k, 0] + sx[k] * L * np.sin(q_a[k])
        pos[k, 1] = hips[k, 1] + sy[k] * lat
        pos[k, 2] = hips[k, 2] - L * np.cos(q_a[k])
        dq = q_a[k] - q_nom
        dirs[k, 0] = -sx[k] * np.sin(dq)
        dirs[k, 1] = 0.0
        dirs[k, 2] = np.cos(dq)
        dpos[k, 0] = sx[k] * L * np.cos(q_a[k])
        dpos[k, 1] = 0.0
        dpos[k, 2] = L * np.sin(q_a[k])
        ddirs[k, 0] = -sx[k] * np.cos(dq)
        ddirs[k, 1] = 0.0
        ddirs[k, 2] = -np.sin(dq)
        f_b += T[k] * dirs[k]

    for j in range(3):
        A[10:13, 3 + j] = dR[j] @ f_b / m_net
    for k in range(4):
        A[10:13, 6 + k] = R @ (T[k] * ddirs[k]) / m_net
        B[10:13, k] = R @ dirs[k] / m_net
    for i in range(3):
        A[10 + i, 10 + i] -= drag_lin[i] / m_net

    for k in range(4):
        cm = spins[k] * c_m
        dtau = (_cross(dpos[k], T[k] * dirs[k])
                + _cross(pos[k], T[k] * ddirs[k])
                + cm * T[k] * ddirs[k])
        A[13:16, 6 + k] = Iinv @ dtau
        B[13:16, k] = Iinv @ (_cross(pos[k], dirs[k]) + cm * dirs[k])

    Iw = I @ w
    G = np.zeros((3, 3))
    # d/dw of (-drag - w x Iw) = -drag_diag - [w]x I + [Iw]x
    G[0, 1] = -w[2]
    G[0, 2] = w[1]
    G[1, 0] = w[2]
    G[1, 2] = -w[0]
    G[2, 0] = -w[1]
    G[2, 1] = w[0]
    M3 = -(G @ I)
    M3[0, 1] += -Iw[2]
    M3[0, 2] += Iw[1]
    M3[1, 0] += Iw[2]
    M3[1, 2] += -Iw[0]
    M3[2, 0] += -Iw[1]
    M3[2, 1] += Iw[0]
    for i in range(3):
        M3[i, i] -= drag_ang[i]
    A[13:16, 13:16] = Iinv @ M3
    return A, B


@njit(cache=True)
def hf_points(q, hips, L, lat, fracs, sx, sy):
    """Body-frame leg mass point positions and d/dq_a, leg-major order."""
    nf = fracs.shape[0]
    n = 4 * nf
    rho = np.empty((n, 3))
    drho = np.empty((n, 3))
    leg = np.empty(n, dtype=np.int64)
    for k in range(4):
        sq, cq = np.sin(q[6 + k]), np.cos(q[6 + k])
        for j in range(nf):
            i = k * nf + j
            f = fracs[j]
            leg[i] = k
            rho[i, 0] = hips[k, 0] + f * sx[k] * L * sq
            rho[i, 1] = hips[k, 1] + f * sy[k] * lat
            rho[i, 2] = hips[k, 2] - f * L * cq
            drho[i, 0] = f * sx[k] * L * cq
            drho[i, 1] = 0.0
            drho[i, 2] = f * L * sq
    return rho, drho, leg


@njit(cache=True)
def hf_point_jacobians(q, hips, L, lat, fracs, sx, sy):
    """World positions and Jacobians (n,3,10) of the leg mass points."""
    theta = q[3:6]
    R = _rot(theta)
    dR = _rot_derivs(theta)
    rho, drho, leg = hf_points(q, hips, L, lat, fracs, sx, sy)
    n = rho.shape[0]
    xw = np.empty((n, 3))
    J = np.zeros((n, 3, 10))
    for i in range(n):
        xi = R @ rho[i]
        for a in range(3):
            xw[i, a] = q[a] + xi[a]
            J[i, a, a] = 1.0
        for j in range(3):
            col = dR[j] @ rho[i]
            for a in range(3):
                J[i, a, 3 + j] = col[a]
        col = R @ drho[i]
        for a in range(3):
            J[i, a, 6 + leg[i]] = col[a]
    return xw, J


@njit(cache=True)
def hf_mass(q, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy):
    """Generalized mass matrix, 10x10."""
    R = _rot(q[3:6])
    dR = _rot_derivs(q[3:6])
    nf = fracs.shape[0]
    M = np.zeros((10, 10))
    Ji = np.zeros((3, 8))  # compact columns: 3 theta + 4 joint + 1 unused
    # point block: J_i = [I3 | dR_j rho | R drho(own leg)]
    for k in range(4):
        sq, cq = np.sin(q[6 + k]), np.cos(q[6 + k])
        for jf in range(nf):
            f = fracs[jf]
            m = pmass[jf]
            r0 = hips[k, 0] + f * sx[k] * L * sq
            r1 = hips[k, 1] + f * sy[k] * lat
            r2 = hips[k, 2] - f * L * cq
            d0 = f * sx[k] * L * cq
            d2 = f * L * sq
            for a in range(3):
                Ji[a, 0] = dR[0, a, 0] * r0 + dR[0, a, 1] * r1 + dR[0, a, 2] * r2
                Ji[a, 1] = dR[1, a, 0] * r0 + dR[1, a, 1] * r1 + dR[1, a, 2] * r2
                Ji[a, 2] = dR[2, a, 0] * r0 + dR[2, a, 1] * r1 + dR[2, a, 2] * r2
                Ji[a, 3 + k] = R[a, 0] * d0 + R[a, 2] * d2
            # translational-translational: m * I3; translational-rest: m * Ji
            for a in range(3):
                M[a, a] += m
                for b in range(3):
                    M[a, 3 + b] += m * Ji[a, b]
                M[a, 6 + k] += m * Ji[a, 3 + k]
            # theta/joint block
            for a in range(3):
                for b in range(a, 3):
                    s = Ji[0, a] * Ji[0, b] + Ji[1, a] * Ji[1, b] + Ji[2, a] * Ji[2, b]
                    M[3 + a, 3 + b] += m * s
                s = Ji[0, a] * Ji[0, 3 + k] + Ji[1, a] * Ji[1, 3 + k] + Ji[2, a] * Ji[2, 3 + k]
                M[3 + a, 6 + k] += m * s
            s = Ji[0, 3 + k] ** 2 + Ji[1, 3 + k] ** 2 + Ji[2, 3 + k] ** 2
            M[6 + k, 6 + k] += m * s
            for a in range(3):
                Ji[a, 3 + k] = 0.0
    for a in range(3):
        M[a, a] += m_b
    E = _omega_mat(q[3:6])
    M[3:6, 3:6] += E.T @ I_b @ E
    for a in range(10):
        for b in range(a):
            M[a, b] = M[b, a]
    return M


@njit(cache=True)
def hf_mass_derivs(q, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy, step):
    """dM/dq_k by central differences; zero for the p_b coordinates."""
    dM = np.zeros((10, 10, 10))
    qp = q.copy()
    for k in range(3, 10):
        qp[k] = q[k] + step
        Mp = hf_mass(qp, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy)
        qp[k] = q[k] - step
        Mm = hf_mass(qp, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy)
        qp[k] = q[k]
        dM[k] = (Mp - Mm) / (2.0 * step)
    return dM


@njit(cache=True)
def hf_bias(q, qd, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy, g, step):
    """C(q,qd) qd + gravity gradient."""
    dM = hf_mass_derivs(q, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy, step)
    out = np.zeros(10)
    # (C qd)_i = sum_jk [dM_ij/dq_k - 0.5 dM_jk/dq_i] qd_j qd_k
    # (the two symmetric Christoffel terms collapse under the double sum)
    for i in range(10):
        s = 0.0
        for k in range(3, 10):
            row = dM[k, i]
            acc = 0.0
            for j in range(10):
                acc += row[j] * qd[j]
            s += acc * qd[k]
        out[i] = s
    for i in range(3, 10):
        s = 0.0
        for j in range(10):
            row = dM[i, j]
            acc = 0.0
            for k in range(10):
                acc += row[k] * qd[k]
            s += acc * qd[j]
        out[i] -= 0.5 * s
    # gravity
    _, J = hf_point_jacobians(q, hips, L, lat, fracs, sx, sy)
    nf = fracs.shape[0]
    for i in range(J.shape[0]):
        m = pmass[i % nf]
        for a in range(10):
            out[a] += m * g * J[i, 2, a]
    out[2] += m_b * g
    return out


@njit(cache=True)
def hf_thrust_force(q, thrusts, m_b, I_b, hips, L, lat, q_nom, c_m, spins, sx, sy):
    """Generalized force of the four thrusters (forces + reaction couples)."""
    theta = q[3:6]
    R = _rot(theta)
    E = _omega_mat(theta)
    ones = np.ones(1)
    # tip kinematics: reuse point machinery with a single fraction of 1
    xw, J = hf_point_jacobians(q, hips, L, lat, ones, sx, sy)
    Q = np.zeros(10)
    for k in range(4):
        dq = q[6 + k] - q_nom
        d = np.empty(3)
        d[0] = -sx[k] * np.sin(dq)
        d[1] = 0.0
        d[2] = np.cos(dq)
        dw = R @ d
        T = thrusts[k]
        for a in range(10):
            s = 0.0
            for c in range(3):
                s += J[k, c, a] * dw[c]
            Q[a] += T * s
        couple = spins[k] * c_m * T * d
        Qrot = E.T @ couple
        for a in range(3):
            Q[3 + a] += Qrot[a]
    return Q


@njit(cache=True)
def hf_drag_force(q, qd, drag_lin, drag_ang):
    E = _omega_mat(q[3:6])
    w = E @ qd[3:6]
    Q = np.zeros(10)
    for i in range(3):
        Q[i] = -drag_lin[i] * qd[i]
    tau = np.empty(3)
    for i in range(3):
        tau[i] = -drag_ang[i] * w[i]
    Q[3:6] = E.T @ tau
    return Q


@njit(cache=True)
def hf_assemble(x, u, m_b, I_b, hips, L, lat, q_nom, c_m, spins,
                drag_lin, drag_ang, g, fracs, pmass, sx, sy, with_drag, step):
    """Returns (M, rhs) with rhs = Q - bias; caller solves the body block."""
    q = x[0:10]
    qd = x[10:20]
    M = hf_mass(q, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy)
    rhs = -hf_bias(q, qd, m_b, I_b, hips, L, lat, fracs, pmass, sx, sy, g, step)
    if u[0] != 0.0 or u[1] != 0.0 or u[2] != 0.0 or u[3] != 0.0:
        rhs += hf_thrust_force(q, u[0:4], m_b, I_b, hips, L, lat, q_nom,
                               c_m, spins, sx, sy)
    if with_drag:
        rhs += hf_drag_force(q, qd, drag_lin, drag_ang)
    return M, rhs
