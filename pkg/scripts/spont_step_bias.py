"""No-jump quantum heat of spontaneous emission versus the step size.

The exact Kraus step damps the excited amplitude by sqrt(1 - gamma dt), which
is continuous-time decay at the effective rate -ln(1 - gamma dt)/dt. The
no-jump quantum heat therefore approaches -w0/2 faster than the continuum
closed form. The table compares the simulated value with the closed form at
both rates.
"""
from __future__ import annotations

import math

import numpy as np

from qtraj.protocols import run_protocol, spont_no_jump_quantum_heat, spontaneous_emission_protocol


def main() -> None:
    gq, w0 = 1.0, 1.0
    print(f"{'gamma t_f':>9} {'gamma dt':>9} {'MC |Q+w0/2|':>12} {'eff-rate form':>14} {'continuum form':>15}")
    for tf in (5.0, 10.0, 20.0):
        for dt in (0.01, 0.001):
            spec = spontaneous_emission_protocol(gq, tf, w0, dt=dt)
            ens = run_protocol(spec, 2000, 1)
            q = ens.Q_q[ens.n_jumps == 0]
            h = spec.model.dt * gq
            eff = spont_no_jump_quantum_heat(-math.log1p(-h) / spec.model.dt, tf, w0)
            cont = spont_no_jump_quantum_heat(gq, tf, w0)
            print(f"{tf:9g} {h:9g} {np.max(np.abs(q + w0 / 2)):12.3e} {abs(eff + w0 / 2):14.3e} "
                  f"{abs(cont + w0 / 2):15.3e}", flush=True)


if __name__ == "__main__":
    main()
