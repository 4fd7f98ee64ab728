"""Smoke test for the vldp_py extension module.

Build and install first:  pip install ./crates/py --no-build-isolation
"""

import vldp_py


def main():
    r = vldp_py.Randomizer("histogram", 4, "1/2")
    assert r.input_domain() == (1, 4)
    assert r.tape_bytes == 16
    assert r.apply(3, bytes(16)) in range(1, 5)

    for scheme in ("base", "expand", "shuffle"):
        d = vldp_py.Deployment(scheme, 3, 4, r, seed=1)
        d.genrand(0, 2)
        sub = d.submit(0, 2, 3)
        assert 1 <= d.verify(2, sub) <= 4
        try:
            d.verify(3, sub)
        except vldp_py.Rejected as e:
            print(f"{scheme}: wrong interval rejected ({e})")
        else:
            raise AssertionError("submission for interval 2 accepted in interval 3")

    attacks = vldp_py.run_attacks("shuffle", seed=3)
    assert attacks and all(a["passed"] for a in attacks), attacks
    print(f"shuffle: {len(attacks)} attacks rejected")

    report = vldp_py.completeness("expand", 5, 3, 0)
    assert "pass=true" in report

    out = vldp_py.simulate(
        "scheme = shuffle\nrandomizer = reals\nk = 10\ngamma = 1/4\n"
        "clients = 500\nintervals = 1\ndataset = synthetic:fixed:0.5\n"
    )
    est = out["intervals"][0]["estimate"]
    assert out["accepted"] == 500 and abs(est - 0.5) < 0.1, out
    print(f"mean estimate {est:.3f}")
    print("ok")


if __name__ == "__main__":
    main()
