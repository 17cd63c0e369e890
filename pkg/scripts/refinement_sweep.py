"""How the attractive-set approximation tightens as samples are added.

For each sample count n the script builds the approximation from a grid of
n points plus n seeded random points and reports, as CSV on stdout:

    map, n, halfspaces, identity_gap, proj_origin_dist

identity_gap is the largest |P_F(x) - P_A(x)| over 20 seeded points of C
and proj_origin_dist is |P_A(x0) - a| for a known attractive point a and
a fixed probe x0 outside A(T).

    python scripts/refinement_sweep.py --counts 8 16 32 64 128 256 512
"""

import argparse
import csv
import sys

import numpy as np

from attractive.attractive_set import (check_projection_identity, default_approx,
                                       find_fixed_points, project_attractive)
from attractive.mappings import make_mapping, square

CASES = {
    # label: (mapping, probe x0, known attractive point nearest x0)
    "rotation": (make_mapping("rotation"), [1.0, 1.0], [0.0, 0.0]),
    "square-0.9": (square(0.9), [0.5], [0.0]),
    "affine-contraction": (make_mapping("affine-contraction", center=(0.5, -0.25), rho=0.8,
                                        theta=0.7), [1.5, 1.0], [0.5, -0.25]),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--counts", type=int, nargs="+", default=[8, 16, 32, 64, 128, 256, 512])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["map", "n", "halfspaces", "identity_gap", "proj_origin_dist"])
    for label, (T, x0, a) in CASES.items():
        fixed = find_fixed_points(T, T.domain.grid(101 ** T.dim))
        xs = T.domain.random(np.random.default_rng(args.seed), 20)
        for n in args.counts:
            approx = default_approx(T, grid_size=n, random_count=n, seed=args.seed)
            gap = max(check_projection_identity(T, approx, fixed, x) for x in xs)
            dist = float(np.linalg.norm(project_attractive(approx, x0).point - np.asarray(a)))
            out.writerow([label, n, len(approx.offsets), f"{gap:.6g}", f"{dist:.6g}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
