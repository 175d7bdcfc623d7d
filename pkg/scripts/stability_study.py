"""Energy identities, symmetric-part eigenvalues and bump runs on the N=10 / N=40 meshes.

Usage: python3 scripts/stability_study.py [--gamma 45] [--samples 100]
"""
import argparse

from dodstab import studies


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=45.0)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for p in (1, 2, 3):
        disc, dt = studies.discretization(10, p, args.gamma)
        samples = studies.form_samples(disc, args.samples, args.seed)
        eig = studies.min_symmetric_eigenvalue(disc, dt)
        bump = studies.bump_run(40, p, args.gamma)
        print(f"p={p}: min form/|u|^2 {min(s.ratio for s in samples):.3e}  "
              f"jump identity {max(s.jump_error for s in samples):.1e}  "
              f"decomposition {max(s.decomposition_error for s in samples):.1e}  "
              f"min eig {eig:.3e}  bump growth {bump.growth:.1e}  mass drift {bump.mass_drift:.1e}")


if __name__ == "__main__":
    main()
