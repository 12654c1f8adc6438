"""Pure-numpy FDTD leapfrog step; reference for the compiled kernel.

Arrays are (nx, ny) with pressure split fields px, py at cell centers,
vx staggered in x (nx-1, ny), vy staggered in y (nx, ny-1).  Coefficient
arrays are precomputed per point (see acoustics module); ``p`` is a caller
workspace for the summed pressure.  The update is purely per-element (no
reductions), so results match the compiled kernel bit-for-bit.
"""

import numpy as np

BACKEND = "numpy"


def fdtd_step(px, py, vx, vy, p, vax, vbx, vay, vby, pax, pbx, pay, pby):
    np.add(px, py, out=p)
    vx[:] = vax * vx - vbx * (p[1:, :] - p[:-1, :])
    vy[:] = vay * vy - vby * (p[:, 1:] - p[:, :-1])
    dvx = np.diff(vx, axis=0, prepend=0.0, append=0.0)
    dvy = np.diff(vy, axis=1, prepend=0.0, append=0.0)
    px[:] = pax * px - pbx * dvx
    py[:] = pay * py - pby * dvy
