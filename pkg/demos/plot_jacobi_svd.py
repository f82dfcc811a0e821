"""
Jacobi SVD and the nearest orthonormal matrix
=============================================

The library carries its own one-sided Jacobi SVD. This script checks it
against LAPACK and then uses it to snap a weight matrix onto the nearest
matrix with orthonormal rows, which is what happens to the latent layer
after every training epoch.
"""

import numpy as np

from ltae.linalg import pairwise_angles, polar_orthonormalize, svd

rng = np.random.default_rng(0)
A = rng.standard_normal((6, 4))

# %%
# Singular values agree with numpy to round-off, and the factors rebuild A.
U, S, V = svd(A)
print("ours  ", np.round(S, 6))
print("lapack", np.round(np.linalg.svd(A, compute_uv=False), 6))
print("rebuild error", np.abs(U * S @ V.T - A).max())

# %%
# The sign convention makes the largest entry of every right singular
# vector positive, so results do not flip between runs or platforms.
print("signs", [float(np.sign(V[np.argmax(np.abs(V[:, j])), j])) for j in range(V.shape[1])])

# %%
# A 3x5 latent weight matrix, and its polar projection. Rows of the
# projected matrix are exactly orthonormal; projecting again changes nothing.
W = rng.standard_normal((3, 5))
R = polar_orthonormalize(W.T).T
print("R R^T\n", np.round(R @ R.T, 12))
print("idempotent", np.abs(polar_orthonormalize(R.T).T - R).max())

# %%
# Angles between the columns of a sample matrix, in degrees.
print("angles", np.round(pairwise_angles(rng.standard_normal((100, 3))), 2))
