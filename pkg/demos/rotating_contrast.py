"""Why the rotating structure has no derivable curves.

Straight segments are derivable for the Euclidean dilatations but spin
forever under delta_eps y = x + eps^(1 + i theta) (y - x).

Run: python demos/rotating_contrast.py
"""

from dilatation import make_curve, make_map, make_structure, pansu_derivative, rn_probe
from dilatation.curves import derivative_at

seg = make_curve("segment", 2)
for name in ("euclidean:2", "rotating:0.5"):
    S = make_structure(name)
    r = derivative_at(seg, 1.0, S)
    rep = rn_probe(S, seg, t_samples=30)
    print(f"{name:<13} derivative at t=1: {r.forward.status:<12} "
          f"derivable fraction {rep.info['fraction']:.2f}")

R = make_structure("rotating:0.5")
for m in ("square", "conjugate"):
    est = pansu_derivative(make_map(m, R), [1.0, 0.0], [1.2, 0.1])
    print(f"Pansu derivative of {m:<9} on rotating:0.5: {est.status}")
