#!/usr/bin/env python3
"""Smoke test for the platerod_py extension module.

Builds nothing itself: run `cargo build -p platerod-py` first, then
`python3 python/smoke_test.py`. The script locates the compiled cdylib in
target/, imports it, and asserts a few end-to-end facts.
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libplaterod_py.so", "platerod_py.so", "libplaterod_py.dylib")
    ]
    for so in candidates:
        if so.exists():
            spec = importlib.util.spec_from_file_location("platerod_py", so)
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit(
        "platerod_py cdylib not found under target/; "
        "run `cargo build -p platerod-py` first"
    )


def approx(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    pr = load_module()
    print(f"loaded platerod_py {pr.__version__}")

    # Scaling-regime algebra.
    r = pr.Regime(3.0, 3.0, 0.25)
    assert approx(r.theta, 2.0) and approx(r.eta, 2.0)
    assert approx(r.delta, 0.25**2) and approx(r.q_eps, 0.25**2)
    assert approx(r.delta**3, r.q_eps**2 * r.epsilon**2)
    assert approx(r.energy_scale(), r.delta**5)
    assert r.vk_plate() and r.vk_rod()
    assert not pr.Regime(4.0, 4.0, 0.25).vk_plate()
    try:
        pr.Regime(2.0, 3.0, 0.25)
        raise AssertionError("kappa < 3 must be rejected")
    except ValueError:
        pass
    print(f"regime algebra ok: {r!r}")

    # Energy densities.
    lam, mu = 1.2, 0.8
    assert pr.energy_density([[1, 0, 0], [0, 1, 0], [0, 0, 1]], lam, mu) == 0.0
    stretched = pr.energy_density([[1.1, 0, 0], [0, 1, 0], [0, 0, 1]], lam, mu)
    assert stretched > 0.0
    e_mod, nu = pr.elastic_moduli(lam, mu)
    assert approx(e_mod, mu * (3 * lam + 2 * mu) / (lam + mu))
    assert approx(nu, lam / (2 * (lam + mu)))

    # Pure bending plate density: (E / 3(1 - nu^2)) * ((1-nu) h:h + nu tr^2).
    h11 = 0.7
    bend = pr.plate_density([[h11, 0], [0, 0]], [[0, 0], [0, 0]], lam, mu)
    expected = e_mod / (3 * (1 - nu**2)) * h11**2
    assert approx(bend, expected), (bend, expected)

    # Pure torsion rod density: (mu pi / 4) q3'^2.
    tors = pr.rod_density([0, 0], 0.0, 1.0, lam, mu)
    assert approx(tors, mu * math.pi / 4), tors
    # The quadratic stretch correction only acts in the coupled regime.
    plain = pr.rod_density([0, 0], 0.1, 0.0, lam, mu, vk_rod=False, w_rates=[0.3, 0.2, 0.1])
    coupled = pr.rod_density([0, 0], 0.1, 0.0, lam, mu, vk_rod=True, w_rates=[0.3, 0.2, 0.1])
    assert coupled != plain
    print(f"densities ok: bending {bend:.6f}, torsion {tors:.6f}")

    config = """
schema_version = 1

[forces]
f_p = ["0", "0", "0.2 + 0.05 * x1"]
f_r = ["0", "0", "0.1 * (1 - x3)"]

[study]
deltas = [0.2, 0.1]
plate_cells = 6
plate_gauss = 2
thickness_points = 4
disc_radial = 4
disc_angular = 8
axial_cells = 8
axial_gauss = 3
"""

    # Configuration echo with defaults filled in.
    resolved = pr.resolved_config(config)
    assert "schema_version = 1" in resolved
    assert "kappa = 3" in resolved and "tol = " in resolved

    # Solve the reduced problem.
    sol = pr.solve(config)
    assert sol.objective < 0.0, sol.objective  # work exceeds internal energy at the minimum
    assert sol.iterations >= 1 and sol.stages >= 1
    assert sol.junction_residual() <= 1e-12
    u = sol.plate(0.0, 0.0)
    w = sol.rod(0.0)
    assert approx(u[2], w[2], 1e-12)  # deflection ties to the rod foot
    assert abs(w[0]) <= 1e-13 and abs(w[1]) <= 1e-13
    assert sol.rod_twist(0.0) == 0.0
    slope = sol.plate_slope(0.5, -0.25)
    assert all(math.isfinite(s) for s in slope)
    n_fp, n_fr = sol.force_norms
    assert n_fp > 0.0 and n_fr > 0.0
    print(f"solve ok: {sol!r}, junction residual {sol.junction_residual():.3e}")

    # Convergence study on the mollified minimizer.
    rows, warnings = pr.study(config)
    assert not warnings, warnings
    assert len(rows) == 2
    # delta round-trips through eps = delta^(1/theta), eps^theta: ulp-level noise
    assert approx(rows[0].delta, 0.2) and approx(rows[1].delta, 0.1)
    assert all(row.gap >= 0.0 for row in rows)
    assert rows[1].gap < rows[0].gap, [row.gap for row in rows]
    assert approx(rows[0].limit_j3, rows[1].limit_j3)
    assert rows[1].gsv_plate_err < rows[0].gsv_plate_err
    assert rows[1].gsv_rod_err < rows[0].gsv_rod_err
    print(f"study ok: gaps {[row.gap for row in rows]}")

    # Config errors surface as ValueError.
    try:
        pr.solve("schema_version = 1\n[regime]\nkappa = 2.5\n")
        raise AssertionError("invalid regime must raise")
    except ValueError as e:
        assert "kappa" in str(e)

    print("smoke test passed")


if __name__ == "__main__":
    main()
