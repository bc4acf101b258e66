"""Pure-Python fallback for the compiled propagation loop."""
import numpy as np

from .su2 import exp_coeffs


def propagate(coeffs, dts):
    """Cumulative products ``U_{k+1} = exp(-i H_k dt_k) U_k`` with ``U_0 = I``."""
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    dts = np.ascontiguousarray(dts, dtype=float)
    if len(coeffs) != len(dts):
        raise ValueError("coeffs and dts disagree in length")
    steps = exp_coeffs(coeffs, dts).reshape(-1, 4).tolist()
    out = [(1 + 0j, 0j, 0j, 1 + 0j)]
    u00, u01, u10, u11 = out[0]
    for a00, a01, a10, a11 in steps:
        u00, u01, u10, u11 = (
            a00 * u00 + a01 * u10,
            a00 * u01 + a01 * u11,
            a10 * u00 + a11 * u10,
            a10 * u01 + a11 * u11,
        )
        out.append((u00, u01, u10, u11))
    return np.array(out, dtype=complex).reshape(-1, 2, 2)
