"""Smoke test for the citedyn_py extension.

Build the module first, e.g.

    cargo build -p citedyn-py --release
    cp target/release/libcitedyn_py.so crates/py/python/citedyn_py.so
    python3 crates/py/python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import citedyn_py as cd


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    astro = cd.HistoryParams(2.19, 1.61, 0.817, 0.158, 1.21)
    m = astro.metrics()
    assert close(m["s_rate"], 1.0 / math.expm1(0.817**2), 1e-12), m
    assert close(m["r_rate"] * m["i_rate"], 1.0, 1e-12)

    split = astro.cumulative(2.0)
    assert close(split["F"] + split["G"], split["H"], 1e-12)
    assert close(astro.gamma(10.0, 3.0) - astro.gamma(5.0, 3.0), math.log(2.0), 1e-12)

    ages = list(range(21))
    params, report = cd.fit_history(ages, [astro(t) for t in ages])
    assert report["converged"], report
    for got, want in [(params.a, 2.19), (params.mu, 1.61), (params.sigma, 0.817), (params.b, 0.158), (params.lam, 1.21)]:
        assert abs(got / want - 1.0) < 1e-3, (got, want)

    hep = cd.HistoryParams(1.0, 1.0, 1.0, 0.1)
    assert hep.lam is None
    table = cd.reckoner(astro, [5, 10, 50, 100], list(range(2, 11)))
    assert len(table) == 4 and len(table[0]) == 9
    assert all(row[j] > row[j + 1] for row in table for j in range(8))

    stars = cd.gamma_star([0.3, -1.2, 2.5, 0.0])
    assert sorted(range(4), key=stars.__getitem__) == [1, 3, 0, 2]

    fit = cd.fit_lognormal([0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89])
    assert fit["m"] > 0 and fit["n"] > 0

    vol = cd.VolatilityFit(0.0281, 0.200)
    refit = cd.fit_volatility([float(t) for t in range(1, 21)], [vol.m_hat(t) for t in range(1, 21)])
    assert close(refit.s1, vol.s1, 1e-6) and close(refit.s2, vol.s2, 1e-6)

    ens = cd.simulate(astro, vol, n_paths=200, seed=7, dt=0.05, horizon=5.0)
    again = cd.simulate(astro, vol, n_paths=200, seed=7, dt=0.05, horizon=5.0)
    assert len(ens) == 200 and ens.path(3) == again.path(3)
    assert all(x > 0 for x in ens.values_at(5.0))
    counts = ens.counts()
    assert len(counts) == 200

    try:
        cd.HistoryParams(-1.0, 1.0, 1.0, 0.1, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative amplitude accepted")

    print("citedyn_py smoke test: ok")


if __name__ == "__main__":
    main()
