"""How often does a random small perturbation of a field have a unique maximum?

Runs the genericity estimate for a few fields on a lattice cloud and prints
one line per (field, epsilon)."""

import numpy as np

from phiconv import PointCloud, build_family, genericity_estimate

xs = np.linspace(0, 1, 4)
cloud = PointCloud(np.array([[x, y] for y in xs for x in xs]))
fam = build_family("affine", cloud)
P = cloud.points

fields = {
    "zero": np.zeros(cloud.size),
    "x": P[:, 0],
    "max(x, y)": np.maximum(P[:, 0], P[:, 1]),
    "|p - c|^2": ((P - 0.5) ** 2).sum(axis=1),
}
for name, f in fields.items():
    for eps in (0.01, 0.1, 0.5):
        rep = genericity_estimate(f, None, fam, eps, 500, seed=7)
        print(f"{name:10s} eps={eps:<4} unique={rep.unique_fraction:.3f} "
              f"extremal={rep.extremal_fraction:.3f}")
