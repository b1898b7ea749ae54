"""Quick checks that the extension imports and its main entry points agree with known values."""

import math
import tempfile

import workbench as wb


def main():
    k2, exponent, t = wb.transmission(10.2, 0.75, 0.5e-9)
    assert 1.3e-7 < t < 1.6e-7, t
    assert math.isclose(t, math.exp(-exponent))
    assert wb.barrier_height_bohr(1.0, 1, 2) == 10.2

    cfg = wb.LaserConfig(e_in=2e-3, steps=2_000_000)
    peak, _, width, out = cfg.metrics()
    assert peak > 0 and width > 0 and out < cfg.e_in
    assert "eta3" in cfg.derive()
    assert len(cfg.simulate(stride=100_000)) == 20

    r = wb.optimize_table([3.0, 1.0, 2.0, -4.0, 0.5, 5.0], seed=1)
    assert r["best_energy"] == -4.0 and r["best_id"] == 3
    r = wb.optimize_ising(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], seed=3)
    assert r["best_energy"] == -3.0
    assert math.isclose(wb.schedule_time(0.5, 1.0), 4.0)

    d = wb.dmft_loop(0.0, n_freq=128)
    assert d["iterations"] == 1
    ref = wb.semicircle_green(d["wn"][0], 2.0)
    assert abs(d["g_imp"][0] - ref) < 1e-12
    d = wb.dmft_loop(2.0, n_freq=128)
    assert d["residuals"][-1] <= 1e-6 and all(s.imag <= 0 for s in d["sigma"])

    text = wb.normalize_config("seed = 7\n")
    assert wb.normalize_config(text) == text
    try:
        wb.normalize_config("bogus.key = 1\n")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    with tempfile.TemporaryDirectory() as out:
        rows = wb.reproduce_tables(out)
        assert {status for _, _, status in rows} <= {"pass", "trend"}, rows

    print("smoke test ok")


if __name__ == "__main__":
    main()
