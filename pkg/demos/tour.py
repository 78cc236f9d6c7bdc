"""Walk through betweenness, extremal and exposed points, and the maximum principle
on a small cloud, first for affine functions and then for other families."""

import numpy as np

from phiconv import (GridSpec, PointCloud, bauer_witness, build_family, is_between,
                     perturb_to_unique_max, phi_convex_hull, phi_exposed_points,
                     phi_extremal_points, rho_inf_distance)

# unit square corners, its centre, and a point just inside the lower edge
cloud = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5], [0.5, 0.1]])
affine = build_family("affine", cloud)

print("centre between opposite corners:", is_between(4, 0, 3, affine).result)
cert = is_between(5, 0, 3, affine)
print("point 5 between 0 and 3:", cert.result, "witness", np.round(cert.witness, 3))

# extremal points come from pairs only, so point 5 counts even though it sits
# inside the square; it is not exposed, since no affine function peaks there alone
print("extremal:", phi_extremal_points(None, affine))
print("exposed: ", [c.point for c in phi_exposed_points(None, affine)])
print("hull of the corners:", phi_convex_hull([0, 1, 2, 3], None, affine))

# a convex field attains its maximum at an extremal point
f = ((cloud.points - [0.3, 0.2]) ** 2).sum(axis=1)
w = bauer_witness(f, None, affine)
print(f"max of f is {w.max_values[0]:.3f} at extremal point {w.point}")

# a flat field gets a small perturbation with a unique maximiser
r = perturb_to_unique_max(np.zeros(cloud.size), None, affine, 0.05)
g = affine.basis.T @ r.coefficients
print(f"perturbation: unique point {r.unique_point}, gap {r.gap:.2e}, "
      f"rho distance {rho_inf_distance(g, np.zeros(cloud.size)):.4f}")

# other families change the geometry
lip = build_family("lipschitz", cloud, full=True)
print("lipschitz (full) extremal:", phi_extremal_points(None, lip))
grid = GridSpec(5, 5)
harm = build_family("harmonic", grid.cloud(), grid=grid)
exposed = [c.point for c in phi_exposed_points(None, harm)]
print("harmonic 5x5 exposed nodes are the boundary:", sorted(exposed) == list(grid.boundary_indices))
