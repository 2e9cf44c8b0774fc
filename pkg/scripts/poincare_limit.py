"""Slack of the generalized Poincare inequality as beta grows, next to the Gaussian limit."""
import math

from alphawidth.inequalities import check_poincare, poincare_grid, sample_psi

BETAS = (3.5, 10.0, 50.0, 200.0, 1e3, 1e4, math.inf)


def main():
    psis = ("x", "x2", "cos", "x2cap")
    print(f"{'beta':>8} " + " ".join(f"{p:>12}" for p in psis))
    for beta in BETAS:
        spec = poincare_grid(1, beta)
        row = [check_poincare(sample_psi(p, spec), 1, beta).slack for p in psis]
        print(f"{beta:>8g} " + " ".join(f"{s:12.6f}" for s in row))


if __name__ == "__main__":
    main()
