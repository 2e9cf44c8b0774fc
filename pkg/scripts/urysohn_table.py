"""Mean width against the Urysohn lower bound for a few functions and beta values."""
import math

from alphawidth import zoo
from alphawidth.alphacore import AlphaFn, AlphaParam
from alphawidth.inequalities import check_urysohn
from alphawidth.meanwidth import width_grids

FUNCTIONS = {
    "G_alpha": lambda beta: zoo.GAlpha(beta),
    "[-1,1]": lambda beta: zoo.Indicator((-1.0,), (1.0,)),
    "quadratic(0.5)": lambda beta: zoo.QuadraticBase((0.0,), 0.5, 0.0, beta),
    "cone on [-1,2]": lambda beta: zoo.ConeBase((0.0,), 1.0, 0.0, beta, zoo.Indicator((-1.0,), (2.0,))),
}


def main():
    print(f"{'function':>16} {'beta':>6} {'width':>10} {'bound':>10} {'slack':>10} {'tol':>9}")
    for beta in (2.5, 4.0, 10.0, math.inf):
        primal, dual = width_grids(1, beta)
        for name, make in FUNCTIONS.items():
            r = check_urysohn(AlphaFn.sample(make(beta), primal, AlphaParam.from_beta(beta)), dual)
            print(f"{name:>16} {beta:>6g} {r.lhs:10.6f} {r.rhs:10.6f} {r.slack:10.2e} {r.tolerance:9.1e}"
                  + ("" if r.passed else "  FAIL"))


if __name__ == "__main__":
    main()
