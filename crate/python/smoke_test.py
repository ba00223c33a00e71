#!/usr/bin/env python3
"""Smoke test for the memfrac Python extension.

Builds nothing itself: expects `cargo build --release -p memfrac-py` to have
produced the cdylib, which is staged under a temp directory with the module
name Python expects, then imported and exercised against known values.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def stage_module() -> pathlib.Path:
    candidates = [
        ROOT / "target" / "release" / "libmemfrac_py.so",
        ROOT / "target" / "debug" / "libmemfrac_py.so",
    ]
    lib = next((c for c in candidates if c.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build --release -p memfrac-py")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="memfrac_py_"))
    shutil.copy2(lib, stage / "memfrac_py.so")
    return stage


def main() -> None:
    sys.path.insert(0, str(stage_module()))
    import memfrac_py as mf

    # small dense kernels
    assert mf.det3([[2, 0, 0], [0, 3, 0], [0, 0, 4]]) == 24.0
    assert mf.cross_columns([[1, 0], [0, 1], [0, 0]]) == (0.0, 0.0, 1.0)

    # tilt rotation is an isometry sending the normal out of plane
    rho, zeta = 0.05, 1.7
    o = mf.tilt_rotation((1.0, 0.0), zeta, rho)
    s = math.sqrt(1 + rho * rho * zeta * zeta)
    img = [sum(o[i][j] * [1.0, 0.0, 0.0][j] for j in range(3)) for i in range(3)]
    assert abs(img[0] - 1 / s) < 1e-14 and abs(img[2] - rho * zeta / s) < 1e-14
    for i in range(3):
        for j in range(3):
            dot = sum(o[k][i] * o[k][j] for k in range(3))
            assert abs(dot - (1.0 if i == j else 0.0)) < 1e-12

    # reduced densities against the closed-form oracles
    incomp = mf.BulkDensity.incomp_power(2.0)
    w0, xi = incomp.reduce([[1, 0], [0, 1], [0, 0]])
    assert abs(w0 - 3.0) < 1e-8
    assert all(abs(a - b) < 1e-4 for a, b in zip(xi, (0.0, 0.0, 1.0)))
    assert incomp.eval([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3.0
    assert incomp.eval([[2, 0, 0], [0, 1, 0], [0, 0, 1]]) is None

    orient = mf.BulkDensity.orient_power(2.0)
    w0, _ = orient.reduce([[1, 0], [0, 1], [0, 0]])
    expect = 2.0 + 2.0 ** (-2.0 / 3.0) + 2.0 ** (1.0 / 3.0)
    assert abs(w0 - expect) < 1e-8 * expect

    # anisotropic surface density: optimal tilt and value
    q = [[2.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]
    psi = mf.SurfaceDensity.quad(q, 1.0)
    value, zeta_star = psi.reduce((0.0, 0.0, 1.0), (1.0, 0.0))
    assert abs(value - 1.5) < 1e-8
    assert abs(zeta_star + 1.0) < 1e-6
    assert abs(psi.psi_rho((0.0, 0.0, 1.0), (0.0, 0.0, rho), rho)
               - psi.eval((0.0, 0.0, 1.0), (0.0, 0.0, 1.0))) < 1e-12

    # validators: the catalog passes, the vanishing threshold fails B3
    assert all(ok for _, ok, _ in incomp.validate(2000, 7))
    bad = mf.SurfaceDensity.amplitude_norm()
    failed = {code for code, ok, _ in bad.validate(2000, 7) if not ok}
    assert "B3" in failed

    # tilt map: identity outside, isometry inside
    tilt = mf.TiltMap((0.0, 0.0), (1.0, 0.0), -1.0, 0.05, 0.25, 0.45)
    assert tilt.value((2.0, 2.0, 0.3)) == (2.0, 2.0, 0.3)
    jac = tilt.jacobian((0.1, 0.0, 0.2))
    o = mf.tilt_rotation((1.0, 0.0), -1.0, 0.05)
    assert all(abs(jac[i][j] - o[i][j]) < 1e-14 for i in range(3) for j in range(3))
    assert tilt.corrected_det_residual(24, 1e-10) < 1e-8

    # scene-level limit energy of the standard fixture
    scene = (ROOT / "scenes" / "incompressible_fixture.toml").read_text()
    membrane = mf.Membrane.from_scene(scene)
    assert membrane.cell_count() == 2
    assert abs(membrane.jump_length() - 1.0) < 1e-12
    bulk, surface, total = membrane.limit_energy(incomp, psi)
    assert abs(bulk - 3.0) < 1e-8
    assert abs(surface - 1.5) < 1e-8
    assert abs(total - 4.5) < 1e-8

    print("memfrac_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
