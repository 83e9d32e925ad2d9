"""Heisenberg looking down on the flat structure, and what it buys.

Run: python demos/lookdown_transfer.py
"""

import numpy as np

from dilatation import check_condition_c, lookdown_audit, make_curve, make_pair, q_eps, transfer_probe

P = make_pair("heisenberg-euclidean")
z = np.array([0.3, -0.2, 0.5])
print("Q_eps z at x = 0 flattens the vertical coordinate:")
for eps in (1.0, 0.1, 0.01):
    print(f"  eps={eps:<5} {q_eps(P, np.zeros(3), eps, z)}")

rep = check_condition_c(P, np.zeros(3), lambda e: np.array([1.0, 0.0, e]))
print(f"\nz(eps) = (1, 0, eps): vertical part ~ {rep.info['fit_coefficient']:.3f} "
      f"eps^{rep.info['fit_power']:.3f}  -> condition (c) {rep.checks[0].status}")

print(f"audit in the radius-0.5 ball: {'pass' if lookdown_audit(P, samples=8).passed else 'fail'}")
print(f"reversed pair:                {'pass' if lookdown_audit(make_pair('euclidean-heisenberg'), samples=8).passed else 'fail'}")

rep = transfer_probe(P, make_curve("heisenberg-circle", 3), t_samples=20)
print("\ntransfer probe on the horizontal circle lift:")
for c in rep.checks:
    print(f"  {c.name:<14} {c.status}")
