"""Sweep batch sizes and print the amortized on-chain cost table.

The two transactions that scale with batching are the batch payment
registration (grows with the payee payload) and the delegate's collect
(flat). Everything else is per-account overhead that washes out. The
table shows how their amortized sum falls as batches grow, next to the
21,000-gas floor a plain individual transfer would pay per payment.

Usage:
    python3 scripts/gas_table.py [--gwei 5] [--ethusd 225] [--sizes 10,100,...]
"""

from __future__ import annotations

import argparse

from batchpay.costmodel import (
    amortized_per_payment,
    collect_gas,
    default_cost_params,
    register_payment_gas,
    usd_cost,
)

DEFAULT_SIZES = (1, 10, 50, 100, 300, 1000, 3000, 10000, 100000)
PLAIN_TRANSFER_GAS = 21000


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--gwei", type=float, default=5.0, help="gas price in gwei")
    parser.add_argument("--ethusd", type=float, default=225.0, help="token price in USD")
    parser.add_argument(
        "--sizes",
        default=",".join(str(n) for n in DEFAULT_SIZES),
        help="comma-separated batch sizes",
    )
    args = parser.parse_args()
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]

    params = default_cost_params()
    flat_collect = collect_gas(params)
    print(
        f"gas price {args.gwei:g} gwei, token {args.ethusd:g} USD, "
        f"collect flat at {flat_collect} gas"
    )
    header = f"{'n':>8} {'register_gas':>14} {'amortized':>10} {'usd/payment':>12} {'vs transfer':>12}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        reg = register_payment_gas(params, n)
        amortized = amortized_per_payment(reg, flat_collect, n)
        usd = usd_cost(amortized, args.gwei, args.ethusd)
        ratio = PLAIN_TRANSFER_GAS / amortized
        print(f"{n:>8} {reg:>14} {amortized:>10} {str(usd):>12} {ratio:>11.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
