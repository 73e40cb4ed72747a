"""Per-iteration and initialisation timing under doubling of N and N_Gamma.

usage: python3 scripts/probe_scaling.py [--frames 20] [--coeffs 65536] [--repeats 3]
"""

import argparse

from cluttervmp.metrics import scaling_probe


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--coeffs", type=int, default=65536)
    p.add_argument("--init-coeffs", type=int, default=512)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()
    print("repeat  iter x2N  iter x2NG  init x2NG")
    for i in range(args.repeats):
        rows = scaling_probe(args.frames, args.coeffs, [(2, 1), (1, 2)], init_coeffs=args.init_coeffs)
        print(f"{i:6d}  {rows[0].iter_ratio:8.2f}  {rows[1].iter_ratio:9.2f}  {rows[1].init_ratio:9.2f}")


if __name__ == "__main__":
    main()
