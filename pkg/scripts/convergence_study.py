"""Convergence table and least-squares orders for p = 1, 2, 3 on both ramp angles.

Usage: python3 scripts/convergence_study.py [--N 20 40 80 160] [--gamma 25 45] [--p 1 2 3]
"""
import argparse

from dodstab import studies


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--gamma", type=float, nargs="+", default=[25.0, 45.0])
    ap.add_argument("--p", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--T", type=float, default=0.3)
    args = ap.parse_args()
    ok = True
    for gamma in args.gamma:
        for p in args.p:
            print(f"gamma={gamma:g} p={p}")
            table = studies.convergence_study(
                p, args.N, gamma, T=args.T,
                on_row=lambda N, r: print(f"  N={N:4d}  L1 {r.l1_error:.3e}  Linf {r.linf_error:.3e}"))
            v = studies.convergence_verdict(table, p)
            ok &= v["l1_pass"] and v["linf_pass"]
            print(f"  L1 order {v['l1_slope']:.3f} ({'pass' if v['l1_pass'] else 'FAIL'})  "
                  f"Linf order {v['linf_slope']:.3f} ({'pass' if v['linf_pass'] else 'FAIL'})")
    raise SystemExit(0 if ok else 4)


if __name__ == "__main__":
    main()
