"""
The received pilots of an IRS-assisted link form a third-order tensor.

This walk-through builds one noiseless scenario, shows that each frontal
slice is G diag(s_k) H X^T, and that the three unfoldings carry the
Khatri-Rao structure the estimators exploit.
"""

import numpy as np

from irs_parafac.system_model import SystemConfig, build_scenario
from irs_parafac.tensor_core import khatri_rao, unfold

cfg = SystemConfig(M=3, L=2, N=4, K=4, T=3)
sc = build_scenario(cfg, np.random.default_rng(0))
G, H, S, X = sc.channels.G, sc.channels.H, sc.S_actual, sc.X
print(f"received tensor shape (L, T, K) = {sc.Y.shape}")

# one block of pilots per IRS phase configuration
k = 2
slice_err = np.abs(sc.Y[:, :, k] - G @ np.diag(S[k]) @ H @ X.T).max()
print(f"slice {k} vs G diag(s_k) H X^T: max error {slice_err:.1e}")

# the three matrix views of the same data
Z = X @ H.T
for mode, model in ((1, G @ khatri_rao(S, Z).T),
                    (2, Z @ khatri_rao(S, G).T),
                    (3, S @ khatri_rao(Z, G).T)):
    print(f"mode-{mode} unfolding {unfold(sc.Y, mode).shape}: "
          f"max error {np.abs(unfold(sc.Y, mode) - model).max():.1e}")

# the composite channel that LS targets stacks h_n kron g_n
print(f"composite channel length M*L*N = {sc.theta.size}")
