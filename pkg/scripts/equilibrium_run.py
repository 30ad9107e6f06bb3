"""Run the equilibrium preset through the command-line front end and print the summary."""

import json
import sys
import tempfile
from pathlib import Path

from mhdsim.cli import main


def run(n: int = 32, t_end: float = 1.0) -> dict:
    out = Path(tempfile.mkdtemp(prefix="mhdsim_eq_"))
    cfg = out / "config.json"
    cfg.write_text(json.dumps({"N": n, "M": n, "t_end": t_end, "scenario": "equilibrium", "output_dir": str(out)}))
    code = main(["--config", str(cfg)])
    summary = json.loads((out / "summary.json").read_text())
    summary["output_dir"] = str(out)
    summary["exit_code"] = code
    return summary


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
    s = run(n)
    keys = ("status", "steps", "lambda_min", "max_w_norm", "max_b_norm", "max_f_mean_drift", "output_dir")
    print(json.dumps({k: s[k] for k in keys}, indent=2))
