"""
Experiments as files: write a spec, check it, run it through the CLI.

The same spec produces the same CSV bytes for any worker count, because
each run draws from a generator keyed by (seed, sweep point, SNR, run).
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from irs_parafac.harness import builtin_spec, spec_to_ini

spec = builtin_spec("fig7").replace(runs=20, snr_grid_db=(0.0, 10.0), timing=False)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "small.ini"
    path.write_text(spec_to_ini(spec))
    print(path.read_text())

    def cli(*args):
        return subprocess.run([sys.executable, "-m", "irs_parafac", *args],
                              capture_output=True, text=True)

    print(cli("check", str(path)).stdout)
    one = cli("run", str(path), "--threads", "1").stdout
    two = cli("run", str(path), "--threads", "2").stdout
    print(one)
    print("identical output for 1 and 2 workers:", one == two)
    print(cli("crb", "20", "8", "50", "50", "20", "--sigma2", "0.1").stdout)
