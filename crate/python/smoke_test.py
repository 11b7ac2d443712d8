"""Builds the extension module, imports it and runs a short forced solve."""

import json
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "halfline-nls-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libhalfline_nls_py.so"
    out = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, out / "halfline_nls.so")
    sys.path.insert(0, str(out))


def main():
    build()
    import halfline_nls as hn

    names = json.loads(hn.presets())
    assert "harmonic(omega)" in names["potential"], names

    a, nu, k = hn.gn_exponents(3.0)
    assert abs((1 - k) * 2 - a * 4) < 1e-12
    assert abs(2 * nu * k - (1 - a) * 4) < 1e-12

    p = hn.Problem(
        10.0,
        127,
        potential="harmonic(0.5)",
        nonlinearity="power(1,3)",
        force="ramped_sinusoid(0.2,1,2)",
        initial="gaussian(3,0.7,0,0.8)",
    )
    traj = p.solve(final_time=0.5, window=0.1, output_dt=0.1, quad_nodes=17)
    assert traj.status == "completed", traj.status
    assert len(traj) == 6
    assert all(math.isfinite(v) for v in traj.h1_norms)

    ids = traj.identities()
    assert max(abs(r) for r in ids["residual_mass"]) < 1e-2
    ref = p.oracle(0.1 / 16, final_time=0.5, window=0.1, output_dt=0.1, quad_nodes=17)
    gap = max(
        math.sqrt(sum(abs(x - y) ** 2 for x, y in zip(traj.field(i), ref.field(i))) * 10.0 / 128)
        for i in range(len(traj))
    )
    assert gap < 1e-2, gap

    try:
        hn.Problem(10.0, 63, nonlinearity="power(1)")
    except ValueError as e:
        assert "power" in str(e)
    else:
        raise AssertionError("bad preset accepted")

    print("smoke test passed; oracle gap %.2e" % gap)


if __name__ == "__main__":
    main()
