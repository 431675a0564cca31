"""Smoke test for the Python bindings: python python/smoke_test.py"""

import json
import math

import synthmpc


def main():
    prod = synthmpc.secure_multiply([1.5, -2.0, 3.25], [2.0, 4.0, -1.0], seed=1)
    for got, want in zip(prod, [3.0, -8.0, -3.25]):
        assert abs(got - want) <= 2.0**-16, (got, want)

    assert synthmpc.calibrate(float("inf"), 1e-5, 10) == 0.0
    sigma = synthmpc.calibrate(1.0, 1e-5, 10)
    assert math.isclose(sigma, math.sqrt(21) * math.sqrt(2 * math.log(1.25e5)))

    cohort = synthmpc.CohortTable.desk(120, 6, 3, seed=2)
    assert (cohort.n, cohort.d, cohort.classes) == (120, 6, 3)

    res = synthmpc.run_end_to_end(cohort, epsilon=8.0, holders=2, seed=3)
    report = json.loads(res.report_json)
    assert list(report)[:5] == ["tstr_accuracy", "wasserstein_mean", "detpr", "detpr_k", "dcr_mean"]
    assert 0.0 <= report["tstr_accuracy"] <= 1.0
    assert res.synthetic.n == res.train.n

    again = synthmpc.generate(res.release_json, cohort.gene_names, 50, seed=4)
    assert again.n == 50 and again.gene_names == cohort.gene_names
    assert synthmpc.dcr(res.train, again) > 0.0
    assert synthmpc.wasserstein(res.train, res.train) == 0.0
    assert synthmpc.detpr(res.train, res.train, 3) == 1.0
    assert 0.0 <= synthmpc.tstr(res.synthetic, res.test) <= 1.0

    try:
        synthmpc.calibrate(-1.0, 1e-5, 10)
    except ValueError:
        pass
    else:
        raise AssertionError("negative epsilon accepted")

    print("smoke test passed:", report["tstr_accuracy"], res.sigma)


if __name__ == "__main__":
    main()
