"""Recover the spectral structure of simulated treatment curves.

The synthetic generator draws curves with known Karhunen-Loeve modes, so
the estimated eigenvalues and the truncated functional linear regression
can be checked against ground truth by eye.
"""

import numpy as np

from adrf.fda import fpca_from_matrix
from adrf.simlab import SimModel, generate, ise, true_slope


def main():
    dataset, truth = generate(SimModel("i", 2000, seed=1))
    model = fpca_from_matrix(dataset.grid, dataset.z, 6)

    print("estimated eigenvalues:", np.round(model.eigenvalues, 3))
    print("population values:    ", [16.0, 12.0, 8.0, 4.0, 1.0, 0.5])

    w = dataset.grid.weights
    gram = (model.phi * w) @ model.phi.T
    print("max |Gram - I|: %.2e" % np.abs(gram - np.eye(6)).max())

    # Regress the noiseless signal on the curves: the slope should come
    # back almost exactly since the truth lives in the first 4 modes.
    from adrf.estimators import truncated_flr
    from adrf.fda import FunctionalSample

    r = 1.0 + dataset.z @ (truth.b_curve.values * w)
    a, b = truncated_flr(r, model, 4)
    b_hat = FunctionalSample(dataset.grid, b @ model.phi[:4])
    print("intercept: %.4f (truth 1.0)" % a)
    # Eigenfunction signs are arbitrary, so compare reconstructed curves
    # rather than raw coefficients.
    print("|slope coefficients|:", np.round(np.abs(b), 3), "(truth 2, 1, 0.5, 0.5)")
    print("ISE of recovered slope: %.2e" % ise(b_hat, true_slope(dataset.grid)))


if __name__ == "__main__":
    main()
