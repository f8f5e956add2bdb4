"""Numpy reference implementations of the element-batch kernels.

Shared index conventions:
  e: element, q: quadrature point, a/b: test/trial local basis, d: space dim
  detw:  (ne, nq)  jacobian determinant times quadrature weight
  phi:   (nq, nl)  basis values (same on every element)
  gphys: (ne, nq, nl, 2) physical basis gradients
"""

import numpy as np


def grad_grad(gphys, detw):
    """K[e,a,b] = sum_q detw (grad phi_a . grad phi_b)."""
    return np.einsum("eq,eqad,eqbd->eab", detw, gphys, gphys, optimize=True)


def mass(phi, detw):
    """M[e,a,b] = sum_q detw phi_a phi_b."""
    return np.einsum("eq,qa,qb->eab", detw, phi, phi, optimize=True)


def scaled_mass(phi, coef, detw):
    """M[e,a,b] = sum_q detw coef[e,q] phi_a phi_b."""
    return np.einsum("eq,eq,qa,qb->eab", detw, coef, phi, phi, optimize=True)


def transport(phi, gphys, conv, detw):
    """K[e,a,b] = sum_q detw (conv . grad phi_b) phi_a, conv: (ne,nq,2)."""
    return np.einsum("eq,qa,eqbd,eqd->eab", detw, phi, gphys, conv,
                     optimize=True)


def transport_dual(phi, gphys, conv, detw):
    """K[e,a,b] = sum_q detw phi_b (conv . grad phi_a)."""
    return np.einsum("eq,qb,eqad,eqd->eab", detw, phi, gphys, conv,
                     optimize=True)


def div_blocks(phi_p, gphys_v, detw):
    """B[e,k,j,d] = sum_q detw psi_k (d phi_j / d x_d)."""
    return np.einsum("eq,qk,eqjd->ekjd", detw, phi_p, gphys_v, optimize=True)


def load(phi, f, detw):
    """r[e,a] = sum_q detw f[e,q] phi_a."""
    return np.einsum("eq,eq,qa->ea", detw, f, phi, optimize=True)


def sq_norm(vals, detw):
    """s[e] = sum_q detw |vals[e,q,...]|^2 (trailing axes contracted)."""
    sq = vals * vals
    while sq.ndim > 2:
        sq = sq.sum(axis=-1)
    return np.einsum("eq,eq->e", detw, sq)
