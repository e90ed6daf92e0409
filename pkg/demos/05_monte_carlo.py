"""A reduced error-bound sweep, written as CSV through the command line entry point.

The full sweep is ``irs-rsbf run --scheme robust,perfect,average,mrt``; here
the array is shrunk so the script finishes in a few seconds.

Run: python demos/05_monte_carlo.py
"""

from pathlib import Path
import tempfile

from irs_rsbf import cli

ini = """\
[system]
M = 8
N_az = 2
N_el = 2
[uncertainty]
D_K = 8
[experiment]
schemes = robust, average, perfect, mrt
values = 0, 5, 10
trials = 5
workers = 1
"""

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "sweep.ini"
    cfg.write_text(ini)
    out = Path(tmp) / "sweep.csv"
    cli.main(["run", "--config", str(cfg), "--out", str(out), "--emit-plot-script"])
    for line in out.read_text().splitlines():
        if ",mean," in line or line.startswith(("#", "sweep_value")):
            print(line)
    print("plot script:", (Path(tmp) / "sweep_plot.py").exists())
