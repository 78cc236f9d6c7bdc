"""Generalised convexity on finite metric spaces.

Betweenness, extremal and exposed points relative to a linear family of
functions, Bauer-type extremal maximisers, and small perturbations that
make maximisers unique.
"""

from .core import (DEFAULT_TOL, PointCloud, ScalarField, Tolerances, argmax_set,
                   rho_inf_distance, segment_member)
from .linprog import LPProblem, LPSolution, constraint, feasible, solve
from .families import (FunctionFamily, GridSpec, build_family, evaluate, family_norm,
                       separates_points)
from .convexity import (BetweennessCertificate, ExposureCertificate, is_between,
                        is_phi_convex, is_phi_extremal, is_strictly_quasiconvex,
                        phi_convex_hull, phi_exposed_points, phi_extremal_points)
from .bauer import BauerWitness, bauer_witness, common_extremal_maximizer, omega_cone_witness
from .perturb import (GenericityReport, PerturbationResult, genericity_estimate,
                      has_strong_max, perturb_to_unique_max, perturb_to_unique_min)

__version__ = "0.1.0"
