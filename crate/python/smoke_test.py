"""Smoke test for the `lmar` extension module.

Build it with `maturin develop -m crates/python/Cargo.toml`, or copy
`target/<profile>/liblmar.so` to `lmar.so` somewhere on PYTHONPATH.
"""

import json
import math

import lmar


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    white = lmar.Ar1(0.5, "white")
    close(white.f(), 4.0 / 3.0, 1e-12)
    close(white.f_prime(), 16.0 / 9.0, 1e-12)
    close(white.sigma_h2(), 160.0 / 27.0, 1e-9)
    close(white.f_inverse(white.f()), 0.5, 1e-10)

    fgn = lmar.CovarianceModel.fgn(0.7)
    assert fgn.tag == "fgn:0.7" and fgn.hurst == 0.7
    close(fgn.rho(0), 1.0, 0.0)
    close(lmar.duality_constant(0.6), 1.389791, 1e-5)

    model = lmar.Ar1(0.5, fgn)
    x = model.simulate(20000, seed=11)
    assert x == model.simulate(20000, seed=11)
    theta_hat = model.estimate(x)
    close(theta_hat, 0.5, 0.1)
    assert math.isfinite(model.normalized_error(theta_hat, len(x)))
    close(model.dtv_bound(1), 2.0 * math.sqrt(2.0), 1e-12)

    report = model.theory([1, 16, 256])
    assert [row["n"] for row in report["rows"]] == [1, 16, 256]
    assert report["sigma_H2"] > 0

    close(lmar.ks_distance([0.0]), 0.5, 1e-12)
    assert 0.0 <= lmar.asclt_log_average([0.1, -0.3, 0.7], 0.0) <= 2.0

    try:
        lmar.Ar1(0.5, "fgn:0.8").sigma_h2()
    except lmar.LmarError as e:
        assert "UnsupportedRegime" in str(e)
    else:
        raise AssertionError("H = 0.8 accepted")

    config = {
        "schema": 1,
        "experiment": "clt",
        "model": "fgn:0.6",
        "theta": 0.5,
        "n_values": [100, 200],
        "replicates": 20,
        "base_seed": 3,
    }
    one = lmar.run_experiment(json.dumps(config), threads=1)
    two = lmar.run_experiment(json.dumps(config), threads=2)
    assert one == two
    assert len(one["records"]) == 40
    print("smoke test passed")


if __name__ == "__main__":
    main()
