#!/usr/bin/env python3
"""Regenerate the bundled spherical quadrature node sets.

Each Q-node set is found by solving the cubature moment equations

    sum_q w_q Y_nm(theta_q, phi_q) = sqrt(4*pi) * delta_n0 * delta_m0,   n <= T

to machine precision with positive weights (log-weight parameterization),
starting from a Fibonacci spiral.  T is the largest exactness degree that is
feasible at Q nodes: the moment system has (T+1)^2 real equations against 3Q
unknowns, and positive cubature of even degree 2k needs at least (k+1)^2
nodes, so Q = (N+1)^2 points top out at T = 2N + 1.

The resulting sets integrate all spherical polynomials up to degree T, which
makes weighted-quadrature projection exact for fields of order <= floor(T/2).

Output: src/sft/data/fliege_<Q>.csv with header theta,phi,weight (radians).

Deterministic: fixed seeds, single-threaded scipy.  Rerunning reproduces the
checked-in files.
"""
import pathlib
import sys

import numpy as np
from scipy.optimize import least_squares
from scipy.special import sph_harm_y

TARGETS = {16: 5, 25: 7, 36: 9, 49: 11, 64: 12, 100: 16}
OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "sft" / "data"


def fib_sphere(q):
    i = np.arange(q) + 0.5
    phi = (np.pi * (1 + 5 ** 0.5)) * i
    z = 1 - 2 * i / q
    return np.arccos(np.clip(z, -1, 1)), phi % (2 * np.pi)


def moment_cols(t):
    return [(n, m) for n in range(t + 1) for m in range(n + 1)]


def residuals(x, q, t):
    theta, phi, logw = x[:q], x[q:2 * q], x[2 * q:]
    w = np.exp(logw)
    res = []
    for n, m in moment_cols(t):
        mom = np.sum(w * sph_harm_y(n, m, theta, phi))
        tgt = np.sqrt(4 * np.pi) if n == 0 else 0.0
        res.append(mom.real - tgt)
        if m > 0:
            res.append(mom.imag)
    return np.asarray(res)


def solve(q, t, tries=16):
    best = None
    for trial in range(tries):
        rng = np.random.default_rng(1000 * trial + q)
        theta, phi = fib_sphere(q)
        if trial > 0:
            theta = np.clip(theta + 0.1 * rng.standard_normal(q), 1e-3, np.pi - 1e-3)
            phi = (phi + 0.1 * rng.standard_normal(q)) % (2 * np.pi)
        x0 = np.concatenate([theta, phi, np.full(q, np.log(4 * np.pi / q))])
        sol = least_squares(residuals, x0, args=(q, t), method="trf",
                            xtol=3e-16, ftol=3e-16, gtol=3e-16, max_nfev=60000)
        err = np.max(np.abs(sol.fun))
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err < 1e-13:
            break
    return best


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for q, t in sorted(TARGETS.items()):
        err, x = solve(q, t)
        if err > 1e-12:
            print(f"Q={q}: moment residual {err:.2e} did not converge", file=sys.stderr)
            sys.exit(1)
        theta, phi, w = x[:q], x[q:2 * q] % (2 * np.pi), np.exp(x[2 * q:])
        order = np.lexsort((phi, theta))
        theta, phi, w = theta[order], phi[order], w[order]
        path = OUT / f"fliege_{q}.csv"
        with open(path, "w") as fh:
            fh.write("theta,phi,weight\n")
            for row in zip(theta, phi, w):
                fh.write("%.17g,%.17g,%.17g\n" % row)
        print(f"wrote {path.name}: Q={q} exact degree {t}, "
              f"moment residual {err:.2e}, w in [{w.min():.3f}, {w.max():.3f}]")


if __name__ == "__main__":
    main()
