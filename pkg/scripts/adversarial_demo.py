"""Run the adversarial scenario and narrate how the challenge game held up.

Loads a scenario config (the committed adversarial one by default), runs
it, and prints the security-relevant slice of the report: every cheating
collect attempted, how each was resolved, what the watchers earned, and
any gaps the run could not reconcile.

Usage:
    python3 scripts/adversarial_demo.py [--config configs/adversarial.cfg] [--seed N]
"""

from __future__ import annotations

import argparse
import os

from batchpay.sim.config import parse_scenario_config
from batchpay.sim.scenario import run_scenario_full

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(REPO_ROOT, "configs", "adversarial.cfg")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=DEFAULT_CONFIG, help="scenario config path")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args()

    config = parse_scenario_config(open(args.config).read())
    if args.seed is not None:
        config.seed = args.seed
    report, run = run_scenario_full(config)

    print(f"seed {report.seed}, {report.blocks_run} blocks "
          f"({report.blocks_requested} requested plus drain)")
    print(f"state digest {report.state_digest}")
    print()

    cheats = report.cheats
    games = report.games
    print("cheating collects")
    print(f"  attempted {cheats['attempted']}, caught {cheats['caught']}, "
          f"escaped {cheats['escaped']}, stranded {cheats['stranded']}")
    print("challenge games")
    print(f"  opened {games['opened']}, challenged {games['challenged']}, "
          f"won by monitor {games['won_by_monitor']}, "
          f"won by delegate {games['won_by_delegate']}")
    if report.understatements:
        print(f"  understated claims left alone: {report.understatements}")
    if report.instant_advance_losses:
        print(f"  instant advances lost to caught cheats: "
              f"{report.instant_advance_losses}")
    print()

    if report.monitor_net:
        print("monitor net stake income")
        for account, net in sorted(report.monitor_net.items(), key=lambda kv: int(kv[0])):
            print(f"  account {account}: {net:+d}")
        print()

    total_gas = sum(row["gas"] for row in report.gas_by_op.values())
    total_txs = sum(row["count"] for row in report.gas_by_op.values())
    print(f"on-chain activity: {total_txs} transactions, {total_gas} gas")
    for op, row in sorted(report.gas_by_op.items(), key=lambda kv: -kv[1]["gas"])[:6]:
        print(f"  {op:<18} x{row['count']:<5} {row['gas']} gas")
    print()

    print(f"conservation holds: {report.conservation_ok}")
    print(f"ledger vs oracle differences: {len(report.oracle_diffs)}")
    if report.known_gaps:
        print("known gaps")
        for note in report.known_gaps:
            print(f"  - {note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
