"""Pure-Python implementations of the hot inner kernels.

The compiled extension ``gtlkit._kernels`` mirrors this module exactly;
``gtlkit.kernels`` picks whichever is available.  Membership sets are
encoded as int bit masks over the indices of a subformula-closed list.
"""

from __future__ import annotations

IMPLEMENTATION = "python"


def pair_sensible(phi: int, psi: int, x_pairs, y_pairs, g_pairs, h_pairs,
                  u_triples, s_triples) -> bool:
    """One-step compatibility of the ordered type pair ``(phi, psi)``."""
    for xf, f in x_pairs:
        if (phi >> xf & 1) != (psi >> f & 1):
            return False
    for yf, f in y_pairs:
        if (psi >> yf & 1) != (phi >> f & 1):
            return False
    for gf, f in g_pairs:
        if (phi >> gf & 1) != ((phi >> f & 1) and (psi >> gf & 1)):
            return False
    for hf, f in h_pairs:
        if (psi >> hf & 1) != ((psi >> f & 1) and (phi >> hf & 1)):
            return False
    for uf, f, g in u_triples:
        if (phi >> uf & 1) != ((phi >> g & 1) or ((phi >> f & 1) and (psi >> uf & 1))):
            return False
    for sf, f, g in s_triples:
        if (psi >> sf & 1) != ((psi >> g & 1) or ((psi >> f & 1) and (phi >> sf & 1))):
            return False
    return True


def sensible_matrix(masks, x_pairs, y_pairs, g_pairs, h_pairs,
                    u_triples, s_triples) -> list[int]:
    """Row ``i`` holds a bit for each ``j`` with ``(masks[i], masks[j])`` sensible."""
    n = len(masks)
    rows = [0] * n
    for i in range(n):
        phi = masks[i]
        row = 0
        for j in range(n):
            if pair_sensible(phi, masks[j], x_pairs, y_pairs, g_pairs,
                             h_pairs, u_triples, s_triples):
                row |= 1 << j
        rows[i] = row
    return rows
