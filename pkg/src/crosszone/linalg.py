"""Dense matrix exponential via scaling-and-squaring.

Self-contained so the simulation core needs nothing beyond numpy. Uses the
degree-13 diagonal Pade approximant with the standard squaring schedule;
for the small, well-conditioned system matrices that arise here (n of a
few tens at most) this is accurate to ~1e-15 relative.
"""

from __future__ import annotations

import numpy as np

__all__ = ["matrix_exp"]

# Degree-13 Pade numerator coefficients, b[0] + b[1] x + ... + b[13] x^13.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)

# Largest 1-norm for which the unscaled degree-13 approximant stays at
# double-precision accuracy.
_THETA13 = 5.371920351148152


def matrix_exp(m: np.ndarray) -> np.ndarray:
    """Compute exp(m) for a square real matrix.

    Args:
        m: square matrix with finite entries.

    Returns:
        exp(m), deterministic for identical input.

    Raises:
        ValueError: if ``m`` is not square or has non-finite entries.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix_exp input contains non-finite entries")
    dim = a.shape[0]
    if dim == 0:
        return np.zeros((0, 0))

    norm = np.linalg.norm(a, 1)
    squarings = 0
    if norm > _THETA13:
        squarings = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / (2.0**squarings)

    ident = np.eye(dim)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    b = _PADE13
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6
        + b[5] * a4
        + b[3] * a2
        + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6
        + b[4] * a4
        + b[2] * a2
        + b[0] * ident
    )
    result = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        result = result @ result
    return result
