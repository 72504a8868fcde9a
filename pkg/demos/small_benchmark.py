"""Run a scaled-down Monte Carlo comparison of the four estimators.

The full study uses 200 replications per cell; this demo runs 8 on two
of the data generating processes so it finishes in a couple of minutes.
The qualitative ordering (naive worst, weighted methods robust under
the nonlinear designs) already shows up at this size.
"""

from adrf.simlab import CvConfig, run_benchmark


def main():
    config = CvConfig(
        h_grid=(2.0, 5.0, 10.0),
        k_grid=(3, 5),
        q_grid=(2, 3, 4, 5),
        n_folds=5,
        seed=0,
    )
    report = run_benchmark(
        models=("i", "iv"),
        sizes=(200,),
        replications=8,
        base_seed=2024,
        cv_config=config,
        keep_details=False,
    )
    print(report.render())
    print()
    print("mean ISE x100 over %d replications per cell" % report.replications)


if __name__ == "__main__":
    main()
