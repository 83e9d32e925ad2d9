"""Tangent group of the Heisenberg structure, compared with the group model.

Run: python demos/heisenberg_tangent.py
"""

import numpy as np

from dilatation import make_structure, tangent_delta, tangent_distance, tangent_sum
from dilatation.structures import group_inv, group_op
from dilatation.tangent import delta_op

H = make_structure("heisenberg")
x = np.array([0.2, -0.1, 0.3])
u = np.array([0.5, 0.1, 0.0])
v = np.array([-0.2, 0.4, 0.1])

print("finite-scale Delta^x_eps(u, v):")
for eps in (0.5, 0.1, 0.01):
    print(f"  eps={eps:<5} {np.round(delta_op(H, x, eps, u, v), 6)}")

est = tangent_delta(H, x, u, v)
print(f"limit      {np.round(est.value, 9)}  ({est.status}, residual {est.residual:.1e})")
print(f"x u^-1 v   {np.round(group_op(group_op(x, group_inv(u)), v), 9)}")

s = tangent_sum(H, x, u, v)
print(f"\nSigma^x(u, v) = {np.round(s.value, 9)}, group model u x^-1 v = "
      f"{np.round(group_op(group_op(u, group_inv(x)), v), 9)}")

d = tangent_distance(H, x, u, v)
print(f"d^x(u, v) = {d.value:.12f}, d(u, v) = {H.distance(u, v):.12f}")
