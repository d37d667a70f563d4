"""Smoke test for the pygmis extension.

Build and install next to this file with:
    cargo build --release -p gmis-py --features extension-module
    cp target/release/libpygmis.so python/pygmis.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pygmis


def main():
    q = [pygmis.Proposal.normal(m, 1.0) for m in (0.0, 2.0, 4.0)]
    props = pygmis.ProposalSet(q)
    assert len(props) == 3
    x = 1.3
    assert abs(props.mixture_pdf(x) - sum(p.pdf(x) for p in q) / 3) < 1e-15

    target = [(1.0, pygmis.Proposal.normal(1.0, 0.5))]
    n3 = pygmis.analytic_variance("N3", target, props)
    r1 = pygmis.analytic_variance("R1", target, props)
    assert n3 <= r1, (n3, r1)

    res = pygmis.run_trials("N3", target, props, 3, 20000, 7)
    assert abs(res["mean"] - 1.0) < 4 * res["stderr"], res["mean"]
    assert len(res["estimates"]) == 20000

    idx = pygmis.select_indices("S2", 3, 6, 1)
    assert sorted(idx[:3]) == [0, 1, 2] and sorted(idx[3:]) == [0, 1, 2]
    freqs, _, p = pygmis.uniformity("S3", 4, 1000, 0)
    assert freqs == [0.25] * 4 and p > 0.001

    csv, a, b = pygmis.run_lab(
        "target 1 normal 1 0.5\n"
        "proposal normal 0.5 1\nproposal normal 0.5 1\n"
        "trials 2000\nsamples 2\nseed 3\n"
    )
    assert csv.startswith("scheme,") and a and b

    w = pygmis.technique_weights([1.0, 0.5, 0.0], [0.2, 0.4, 0.8], 0.1)
    assert abs(sum(v for _, v in w) - 1.0) < 1e-12, w

    assert "box" in pygmis.fixture_names()
    out = pygmis.render(pygmis.fixture("box"), "gmis", 8, 8, 2, seed=1)
    again = pygmis.render(pygmis.fixture("box"), "gmis", 8, 8, 2, seed=1)
    assert out["pixels"] == again["pixels"]
    assert len(out["pixels"]) == 8 * 8 * 3
    assert all(math.isfinite(v) for v in out["pixels"])

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "o.pfm")
        pygmis.write_pfm(path, 8, 8, out["pixels"])
        w_, h_, px = pygmis.read_pfm(path)
        assert (w_, h_) == (8, 8)
        assert pygmis.rmse(px, out["pixels"]) < 1e-5

    try:
        pygmis.render("material m diffuse 1 1\n", "vcm", 4, 4, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("bad scene accepted")

    print("pygmis smoke test ok")


if __name__ == "__main__":
    main()
