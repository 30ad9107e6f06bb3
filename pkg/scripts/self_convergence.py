"""Self-convergence table for a perturbed run (writes convergence.csv)."""

import json
import sys
import tempfile
from pathlib import Path

from mhdsim.cli import main

if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="mhdsim_conv_"))
    out.mkdir(parents=True, exist_ok=True)
    cfg = {
        "mode": "convergence",
        "scenario": {"name": "perturbed", "eps": 0.05, "k": [1, 1]},
        "t_end": 0.08,
        "levels": [[8, 8, 0.04], [16, 16, 0.02], [32, 32, 0.01]],
        "output_dir": str(out),
    }
    (out / "config.json").write_text(json.dumps(cfg))
    code = main(["--config", str(out / "config.json")])
    print((out / "convergence.csv").read_text())
    sys.exit(code)
