"""Negative moments by Mellin quadrature and density recovery by Fourier
inversion, both cross-checked against closed forms and Monte Carlo."""

import math

import numpy as np
from scipy.special import gamma as gamma_fn

from wienerchaos import chaos2, mc
from wienerchaos.chaos2 import DiagonalSecondChaos


def main():
    print("=" * 72)
    print("negative moments of the carre du champ")
    print("=" * 72)
    f = DiagonalSecondChaos([2 ** -0.5])
    val = chaos2.negative_moment(f, 0.25)
    closed = float(gamma_fn(0.25)) / math.sqrt(2 * math.pi)
    print(f"E Gamma^(-1/4) for Gamma = 2 G^2:")
    print(f"  mellin quadrature: {val:.10f}")
    print(f"  closed form      : {closed:.10f}   (Gamma(1/4)/sqrt(2 pi))")

    f2 = DiagonalSecondChaos([0.5, 0.5])
    val2 = chaos2.negative_moment(f2, 0.5)
    est = mc.estimate(lambda rng, cnt: f2.sample_gamma(rng, cnt) ** -0.5,
                      400_000, mc.RngSpec(3))
    print(f"\nE Gamma^(-1/2) for Gamma = chi^2_2:")
    print(f"  mellin quadrature: {val2:.10f}  (exact sqrt(pi/2) = "
          f"{math.sqrt(math.pi / 2):.10f})")
    print(f"  monte carlo      : {est.mean:.6f} +- {est.stderr:.6f}")

    print("\ndivergence detection: q >= m/2 is rejected")
    try:
        chaos2.negative_moment(f, 0.5)
    except chaos2.DivergenceError as exc:
        print(f"  DivergenceError: {exc}")

    print("\n" + "=" * 72)
    print("density by inversion of the characteristic function")
    print("=" * 72)
    for n in (4, 16, 64):
        fam = DiagonalSecondChaos(np.full(n, 1.0 / np.sqrt(2 * n)))
        xs, dens = chaos2.density_by_inversion(fam, -4.0, 4.0, 0.01,
                                               tail_eps=1e-7)
        mass = float(np.trapezoid(dens, xs))
        mode = float(xs[np.argmax(dens)])
        gauss = np.exp(-xs * xs / 2) / math.sqrt(2 * math.pi)
        tv = 0.5 * float(np.trapezoid(np.abs(dens - gauss), xs))
        kappa4 = chaos2.newton_cumulants(fam, 2).cumulants[1]
        bound = math.sqrt(kappa4 / 3.0)
        print(f"  n={n:<3d} mass={mass:.5f}  mode={mode:+.3f}  "
              f"tv-to-gauss={tv:.4f}  (fourth-moment bound "
              f"{min(bound, 1):.4f})")
    print("  the mode moves to 0 and the density tightens onto the "
          "standard normal as kappa_4 = 12/n vanishes")


if __name__ == "__main__":
    main()
