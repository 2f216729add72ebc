"""Independent reference formulas used by the tests.

Plain numpy on Bloch vectors and explicit matrices; nothing here calls the
update-rule or sequential code paths.
"""

import numpy as np


def logistic_joint_oracle(v, lam):
    """Computational/computational joint table under the logistic rule, from the Bloch vector."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v)
    z_post = lam * v[2] * (1 - r)
    p_first = np.array([(1 + v[2]) / 2, (1 - v[2]) / 2])
    p_second = np.array([(1 + z_post) / 2, (1 - z_post) / 2])
    return np.outer(p_first, p_second)


def logistic_marginal_oracle(w, lam=4.0):
    """P(z+) at stage two for w|z+><z+| + (1-w) I/2."""
    return (1 + lam * w * (1 - w)) / 2


def sqrtm_psd(m):
    w, v = np.linalg.eigh(m)
    return v @ np.diag(np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def luders_joint_oracle(first_ops, second_ops, rho):
    """tr[sqrt(F_i) G_j sqrt(F_i) rho] for every pair."""
    table = np.zeros((len(first_ops), len(second_ops)))
    for a, f in enumerate(first_ops):
        s = sqrtm_psd(f)
        for b, g in enumerate(second_ops):
            table[a, b] = np.trace(s @ g @ s @ rho).real
    return table


SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=float)
