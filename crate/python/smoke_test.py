"""Smoke test for the `decohere` extension module.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import math

import decohere

US = 1e-6


def main():
    law = decohere.DecayLaw(2.5 * US, 2.0)
    assert abs(law.coherence(2.5 * US) - math.exp(-1)) < 1e-12

    xi = decohere.solve_xi(2.0, "variance")
    assert abs(xi - 0.8927) < 1e-3, xi
    try:
        decohere.solve_xi(1.0, "sensitivity")
    except ValueError as e:
        assert "no interior maximum" in str(e)
    else:
        raise AssertionError("expected ValueError")

    readout = decohere.ReadoutModel.nv_center(10_000)
    p = readout.detection_probability(xi * law.t_chi, law)
    assert 0.0148 < p < 0.0187
    assert decohere.fisher(xi * law.t_chi, law) > decohere.fisher_experimental(xi * law.t_chi, law, readout)
    floor = decohere.crlb_envelope(1.0, law, readout)
    assert 0 < floor < 1e-6

    ens = decohere.ParticleEnsemble(500, 0.1 * US, 8 * US, seed=1)
    assert len(ens) == 500 and abs(sum(ens.weights) - 1) < 1e-12
    for _ in range(30):
        tau = xi * ens.mean()
        r = round(readout.repetitions * readout.detection_probability(tau, law))
        ens.update(r, tau, 2.0, readout)
        ens.maybe_resample()
    assert abs(ens.mean() - law.t_chi) < 5 * ens.std_dev() + 0.1 * US, (ens.mean(), ens.std_dev())

    summaries = decohere.run_preset("fig4", replicas=4, epochs=40, particles=200)
    assert [s.strategy for s in summaries] == ["adaptive-variance", "adaptive-sensitivity"]
    for s in summaries:
        assert len(s.grid) == len(s.uncertainty) == len(s.bound)
        assert all(lo <= u <= hi for lo, u, hi in zip(s.ci_lo, s.uncertainty, s.ci_hi))
    first = summaries[0]
    target = first.uncertainty[len(first.uncertainty) // 2]
    assert first.time_to_uncertainty(target) <= first.grid[len(first.grid) // 2]

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
