"""Pick bandwidth, sieve order and truncation level by cross-validation.

Each estimator has its own held-out prediction loss, so the selected
tuple can differ across methods. The outcome-regression fit has no
weight step and therefore ignores the (h, k) part of the grid.
"""

from adrf.simlab import SimModel, generate
from adrf.tuning import CvConfig, default_config, select_tuning


def main():
    dataset, _ = generate(SimModel("i", 200, seed=11))

    config = default_config(dataset, n_folds=5, seed=0)
    print("bandwidth grid:", ["%.2f" % h for h in config.h_grid])
    print("sieve orders:  ", list(config.k_grid))
    print("truncations:   ", list(config.q_grid))
    print()

    for method in ("fsw", "or", "dr"):
        res = select_tuning(dataset, config, method)
        print(
            "%-4s chose h=%-8s k=%-4s q=%d   loss=%.4f"
            % (method, "%.2f" % res.h if res.h else "-", res.k or "-", res.q, res.loss)
        )

    # A custom, narrower grid runs much faster when the defaults are
    # wider than needed.
    small = CvConfig(h_grid=(5.0,), k_grid=(3,), q_grid=(2, 3, 4, 5), n_folds=5, seed=0)
    res = select_tuning(dataset, small, "dr")
    print()
    print("dr on custom grid: q=%d, loss=%.4f" % (res.q, res.loss))


if __name__ == "__main__":
    main()
