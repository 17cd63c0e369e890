"""Run every experiment config and print one status line per check.

    python scripts/run_configs.py                   # all of scripts/configs/*.cfg
    python scripts/run_configs.py rotation.cfg ...  # a subset
    python scripts/run_configs.py --out /tmp/runs   # output root for CSV, tables, reports
"""

import argparse
import io
import os
import sys
import time
from pathlib import Path

from attractive.cli import OUTPUT_ROOT_ENV, ExperimentConfig, run

CONFIG_DIR = Path(__file__).parent / "configs"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("configs", nargs="*", help="config files (default: every file in configs/)")
    parser.add_argument("--out", default="runs", help="output root (default: ./runs)")
    parser.add_argument("--verbose", action="store_true", help="print full reports")
    args = parser.parse_args(argv)

    os.environ[OUTPUT_ROOT_ENV] = args.out
    paths = [Path(p) if Path(p).exists() else CONFIG_DIR / p for p in args.configs]
    paths = paths or sorted(CONFIG_DIR.glob("*.cfg"))
    worst = 0
    for path in paths:
        buf = io.StringIO()
        t0 = time.perf_counter()
        status = run(ExperimentConfig.load(path), buf)
        elapsed = time.perf_counter() - t0
        worst = max(worst, status)
        checks = [line for line in buf.getvalue().splitlines() if line.startswith("[")]
        print(f"{path.name:28s} exit {status}  {elapsed:6.2f} s  " + " ".join(checks))
        if args.verbose:
            print(buf.getvalue())
    return worst


if __name__ == "__main__":
    sys.exit(main())
