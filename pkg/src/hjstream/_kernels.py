"""Compiled per-point update and batch sweep kernels.

One scalar update function per element type is the single source of truth
for the numerical schedule of the single-pass solver: the batch sweep calls
it for every grid node, and the streaming datapath model calls the very same
compiled function with values drawn from its line buffers.  All
transcendentals live in precomputed tables, so the kernels use only
+, -, *, abs, comparisons and (for fixed point) integer shifts; results are
therefore identical bit for bit across the batch path, the streamed path,
and any worker count.

Fixed-point arithmetic is Q5.27 carried in int64 (values always stay inside
int32 range because every operation saturates).  Products round to nearest,
ties to even.
"""

from __future__ import annotations

from numba import njit, prange

RAW_MAX = 2**31 - 1
RAW_MIN = -(2**31)
FRAC_BITS = 27
HALF_RAW = 1 << (FRAC_BITS - 1)  # 0.5 in Q5.27


# ---------------------------------------------------------------------------
# Q5.27 raw helpers (int64 in, int64 out, int32-range results)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def q_sat(x):
    """Clamp an int64 to the 32-bit two's-complement range; flag saturation."""
    if x > RAW_MAX:
        return RAW_MAX, 1
    if x < RAW_MIN:
        return RAW_MIN, 1
    return x, 0


@njit(cache=True, nogil=True)
def q_add(a, b):
    return q_sat(a + b)


@njit(cache=True, nogil=True)
def q_sub(a, b):
    return q_sat(a - b)


@njit(cache=True, nogil=True)
def q_rne_shift(p):
    """Arithmetic shift right by 27 with round-to-nearest-even."""
    q = p >> FRAC_BITS
    r = p & ((1 << FRAC_BITS) - 1)
    tie = 1 << (FRAC_BITS - 1)
    if r > tie or (r == tie and (q & 1) == 1):
        q += 1
    return q


@njit(cache=True, nogil=True)
def q_mul(a, b):
    """Full 64-bit product, rounded back to Q5.27, saturated."""
    return q_sat(q_rne_shift(a * b))


@njit(cache=True, nogil=True)
def ghost_float(c, inner):
    """Linear ghost value past a non-periodic edge."""
    return 2.0 * c - inner


@njit(cache=True, nogil=True)
def ghost_fixed(c, inner):
    s, sat1 = q_add(c, c)
    g, sat2 = q_sub(s, inner)
    return g, sat1 + sat2


# ---------------------------------------------------------------------------
# Scalar point updates (one output node of the single-pass scheme)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def point_update_float(c, vm0, vp0, vm1, vp1, vm2, vp2, vm3, vp3,
                       v, cos_t, sin_t,
                       inv0, inv1, inv2, inv3,
                       a_min, a_max, tdl_min, tdl_max,
                       dt, v0):
    """New value at one node from its 9-point stencil (float64 datapath).

    ``vmX``/``vpX`` are the minus/plus neighbors along axis X with boundary
    rules already applied; ``invX`` is the precomputed reciprocal spacing;
    ``tdl_*`` is tan(delta)/L at the steering bounds; ``v0`` is the initial
    value at this node (the running-minimum clamp).
    """
    dm0 = (c - vm0) * inv0
    dp0 = (vp0 - c) * inv0
    dm1 = (c - vm1) * inv1
    dp1 = (vp1 - c) * inv1
    dm2 = (c - vm2) * inv2
    dp2 = (vp2 - c) * inv2
    dm3 = (c - vm3) * inv3
    dp3 = (vp3 - c) * inv3
    g0 = (dp0 + dm0) * 0.5
    g1 = (dp1 + dm1) * 0.5
    g2 = (dp2 + dm2) * 0.5
    g3 = (dp3 + dm3) * 0.5
    # bang-bang maximizer of g . f over the control box
    a = a_max if g2 >= 0.0 else a_min
    tdl = tdl_max if g3 * v >= 0.0 else tdl_min
    f0 = v * cos_t
    f1 = v * sin_t
    f2 = a
    f3 = v * tdl
    h = g0 * f0 + g1 * f1 + g2 * f2 + g3 * f3
    # upwinding correction: with values marching backward in time the stable
    # viscosity enters with +, collapsing each term to one-sided f * D+/-
    h = h + abs(f0) * ((dp0 - dm0) * 0.5)
    h = h + abs(f1) * ((dp1 - dm1) * 0.5)
    h = h + abs(f2) * ((dp2 - dm2) * 0.5)
    h = h + abs(f3) * ((dp3 - dm3) * 0.5)
    vnew = h * dt + c
    if vnew > v0:
        vnew = v0
    return vnew


@njit(cache=True, nogil=True)
def point_update_fixed(c, vm0, vp0, vm1, vp1, vm2, vp2, vm3, vp3,
                       v, cos_t, sin_t,
                       inv0, inv1, inv2, inv3,
                       a_min, a_max, tdl_min, tdl_max,
                       dt, v0):
    """Q5.27 mirror of :func:`point_update_float`; returns (raw, saturations).

    Divisions never happen at run time: reciprocal spacings, the half
    constant, and dt are baked-in Q5.27 words.  The steering sign test uses
    the exact 64-bit product so tiny gradients cannot flip it through
    rounding.
    """
    sat = 0
    t, s = q_sub(c, vm0)
    sat += s
    dm0, s = q_mul(t, inv0)
    sat += s
    t, s = q_sub(vp0, c)
    sat += s
    dp0, s = q_mul(t, inv0)
    sat += s
    t, s = q_sub(c, vm1)
    sat += s
    dm1, s = q_mul(t, inv1)
    sat += s
    t, s = q_sub(vp1, c)
    sat += s
    dp1, s = q_mul(t, inv1)
    sat += s
    t, s = q_sub(c, vm2)
    sat += s
    dm2, s = q_mul(t, inv2)
    sat += s
    t, s = q_sub(vp2, c)
    sat += s
    dp2, s = q_mul(t, inv2)
    sat += s
    t, s = q_sub(c, vm3)
    sat += s
    dm3, s = q_mul(t, inv3)
    sat += s
    t, s = q_sub(vp3, c)
    sat += s
    dp3, s = q_mul(t, inv3)
    sat += s
    t, s = q_add(dp0, dm0)
    sat += s
    g0, s = q_mul(t, HALF_RAW)
    sat += s
    t, s = q_add(dp1, dm1)
    sat += s
    g1, s = q_mul(t, HALF_RAW)
    sat += s
    t, s = q_add(dp2, dm2)
    sat += s
    g2, s = q_mul(t, HALF_RAW)
    sat += s
    t, s = q_add(dp3, dm3)
    sat += s
    g3, s = q_mul(t, HALF_RAW)
    sat += s
    a = a_max if g2 >= 0 else a_min
    tdl = tdl_max if g3 * v >= 0 else tdl_min
    f0, s = q_mul(v, cos_t)
    sat += s
    f1, s = q_mul(v, sin_t)
    sat += s
    f2 = a
    f3, s = q_mul(v, tdl)
    sat += s
    t, s = q_mul(g0, f0)
    sat += s
    h = t
    t, s = q_mul(g1, f1)
    sat += s
    h, s2 = q_add(h, t)
    sat += s + s2
    t, s = q_mul(g2, f2)
    sat += s
    h, s2 = q_add(h, t)
    sat += s + s2
    t, s = q_mul(g3, f3)
    sat += s
    h, s2 = q_add(h, t)
    sat += s + s2
    # upwinding correction enters with + here, same as the float datapath
    t, s = q_sub(dp0, dm0)
    sat += s
    t, s2 = q_mul(t, HALF_RAW)
    t, s3 = q_mul(abs(f0), t)
    h, s4 = q_add(h, t)
    sat += s2 + s3 + s4
    t, s = q_sub(dp1, dm1)
    sat += s
    t, s2 = q_mul(t, HALF_RAW)
    t, s3 = q_mul(abs(f1), t)
    h, s4 = q_add(h, t)
    sat += s2 + s3 + s4
    t, s = q_sub(dp2, dm2)
    sat += s
    t, s2 = q_mul(t, HALF_RAW)
    t, s3 = q_mul(abs(f2), t)
    h, s4 = q_add(h, t)
    sat += s2 + s3 + s4
    t, s = q_sub(dp3, dm3)
    sat += s
    t, s2 = q_mul(t, HALF_RAW)
    t, s3 = q_mul(abs(f3), t)
    h, s4 = q_add(h, t)
    sat += s2 + s3 + s4
    t, s = q_mul(h, dt)
    sat += s
    vnew, s = q_add(t, c)
    sat += s
    if vnew > v0:
        vnew = v0
    return vnew, sat


# ---------------------------------------------------------------------------
# Batch sweeps
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True, nogil=True)
def sweep_batch_float(vt, v0, out, n1, n2, n3, n4,
                      per0, per1, per2, per3,
                      vtab, costab, sintab,
                      inv0, inv1, inv2, inv3,
                      a_min, a_max, tdl_min, tdl_max,
                      dt, eps_per_block):
    """One full-grid update; writes per-outer-block max |dV| into eps_per_block.

    Output nodes are independent functions of the read-only input, so the
    result is identical for any worker count.
    """
    s0 = n2 * n3 * n4
    s1 = n3 * n4
    s2 = n4
    for i in prange(n1):
        local_eps = 0.0
        base_i = i * s0
        for j in range(n2):
            base_j = base_i + j * s1
            for k in range(n3):
                base_k = base_j + k * s2
                v = vtab[k]
                for l in range(n4):
                    n = base_k + l
                    c = vt[n]
                    if i > 0:
                        vm0 = vt[n - s0]
                    elif per0:
                        vm0 = vt[n + (n1 - 1) * s0]
                    else:
                        vm0 = ghost_float(c, vt[n + s0])
                    if i < n1 - 1:
                        vp0 = vt[n + s0]
                    elif per0:
                        vp0 = vt[n - (n1 - 1) * s0]
                    else:
                        vp0 = ghost_float(c, vt[n - s0])
                    if j > 0:
                        vm1 = vt[n - s1]
                    elif per1:
                        vm1 = vt[n + (n2 - 1) * s1]
                    else:
                        vm1 = ghost_float(c, vt[n + s1])
                    if j < n2 - 1:
                        vp1 = vt[n + s1]
                    elif per1:
                        vp1 = vt[n - (n2 - 1) * s1]
                    else:
                        vp1 = ghost_float(c, vt[n - s1])
                    if k > 0:
                        vm2 = vt[n - s2]
                    elif per2:
                        vm2 = vt[n + (n3 - 1) * s2]
                    else:
                        vm2 = ghost_float(c, vt[n + s2])
                    if k < n3 - 1:
                        vp2 = vt[n + s2]
                    elif per2:
                        vp2 = vt[n - (n3 - 1) * s2]
                    else:
                        vp2 = ghost_float(c, vt[n - s2])
                    if l > 0:
                        vm3 = vt[n - 1]
                    elif per3:
                        vm3 = vt[n + (n4 - 1)]
                    else:
                        vm3 = ghost_float(c, vt[n + 1])
                    if l < n4 - 1:
                        vp3 = vt[n + 1]
                    elif per3:
                        vp3 = vt[n - (n4 - 1)]
                    else:
                        vp3 = ghost_float(c, vt[n - 1])
                    r = point_update_float(c, vm0, vp0, vm1, vp1, vm2, vp2, vm3, vp3,
                                           v, costab[l], sintab[l],
                                           inv0, inv1, inv2, inv3,
                                           a_min, a_max, tdl_min, tdl_max,
                                           dt, v0[n])
                    out[n] = r
                    d = abs(r - c)
                    if d > local_eps:
                        local_eps = d
        eps_per_block[i] = local_eps


@njit(parallel=True, cache=True, nogil=True)
def sweep_batch_fixed(vt, v0, out, n1, n2, n3, n4,
                      per0, per1, per2, per3,
                      vtab, costab, sintab,
                      inv0, inv1, inv2, inv3,
                      a_min, a_max, tdl_min, tdl_max,
                      dt, eps_per_block, sat_per_block):
    """Q5.27 batch sweep; arrays carry raw words in int64."""
    s0 = n2 * n3 * n4
    s1 = n3 * n4
    s2 = n4
    for i in prange(n1):
        local_eps = 0
        local_sat = 0
        base_i = i * s0
        for j in range(n2):
            base_j = base_i + j * s1
            for k in range(n3):
                base_k = base_j + k * s2
                v = vtab[k]
                for l in range(n4):
                    n = base_k + l
                    c = vt[n]
                    if i > 0:
                        vm0 = vt[n - s0]
                    elif per0:
                        vm0 = vt[n + (n1 - 1) * s0]
                    else:
                        vm0, s = ghost_fixed(c, vt[n + s0])
                        local_sat += s
                    if i < n1 - 1:
                        vp0 = vt[n + s0]
                    elif per0:
                        vp0 = vt[n - (n1 - 1) * s0]
                    else:
                        vp0, s = ghost_fixed(c, vt[n - s0])
                        local_sat += s
                    if j > 0:
                        vm1 = vt[n - s1]
                    elif per1:
                        vm1 = vt[n + (n2 - 1) * s1]
                    else:
                        vm1, s = ghost_fixed(c, vt[n + s1])
                        local_sat += s
                    if j < n2 - 1:
                        vp1 = vt[n + s1]
                    elif per1:
                        vp1 = vt[n - (n2 - 1) * s1]
                    else:
                        vp1, s = ghost_fixed(c, vt[n - s1])
                        local_sat += s
                    if k > 0:
                        vm2 = vt[n - s2]
                    elif per2:
                        vm2 = vt[n + (n3 - 1) * s2]
                    else:
                        vm2, s = ghost_fixed(c, vt[n + s2])
                        local_sat += s
                    if k < n3 - 1:
                        vp2 = vt[n + s2]
                    elif per2:
                        vp2 = vt[n - (n3 - 1) * s2]
                    else:
                        vp2, s = ghost_fixed(c, vt[n - s2])
                        local_sat += s
                    if l > 0:
                        vm3 = vt[n - 1]
                    elif per3:
                        vm3 = vt[n + (n4 - 1)]
                    else:
                        vm3, s = ghost_fixed(c, vt[n + 1])
                        local_sat += s
                    if l < n4 - 1:
                        vp3 = vt[n + 1]
                    elif per3:
                        vp3 = vt[n - (n4 - 1)]
                    else:
                        vp3, s = ghost_fixed(c, vt[n - 1])
                        local_sat += s
                    r, s = point_update_fixed(c, vm0, vp0, vm1, vp1, vm2, vp2, vm3, vp3,
                                              v, costab[l], sintab[l],
                                              inv0, inv1, inv2, inv3,
                                              a_min, a_max, tdl_min, tdl_max,
                                              dt, v0[n])
                    local_sat += s
                    out[n] = r
                    d = r - c
                    if d < 0:
                        d = -d
                    if d > local_eps:
                        local_eps = d
        eps_per_block[i] = local_eps
        sat_per_block[i] = local_sat
