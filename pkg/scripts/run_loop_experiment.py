#!/usr/bin/env python3
"""Trace the regularized branches for a shrinking epsilon list and print the
loop diagnostics (lam_eps trend, closure gaps, lambda = 0 crossing norms,
Hausdorff distances between consecutive branches).

Writes one branch CSV per epsilon plus loop_report.json under --out.
"""

import argparse
import json
import sys
from pathlib import Path

from nehariloop.cli import main as cli_main

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "examples_configs" / "loop_figure1.toml"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(DEFAULT_CONFIG))
    ap.add_argument("--out", default="out/loop")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    argv = ["loop", "--config", args.config, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    code = cli_main(argv)
    if code != 0:
        return code

    report = json.loads((Path(args.out) / "loop_report.json").read_text())
    print("epsilon    lambda_eps   crossing_norm   loop_gap")
    for eps, le, cn, gap in zip(report["eps_list"], report["lambda_eps"],
                                report["crossing_norms"], report["loop_gaps"]):
        cn_s = "-" if cn is None else f"{cn:.6f}"
        gap_s = "-" if gap is None else f"{gap:.4f}"
        print(f"{eps:<10g} {le:<12.6f} {cn_s:<15} {gap_s}")
    print("hausdorff:", " ".join(f"{h:.3f}" for h in report["hausdorff"]))
    for v in report["verdicts"]:
        print(f"verdict {v['name']}: {'PASS' if v['passed'] else 'FAIL'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
