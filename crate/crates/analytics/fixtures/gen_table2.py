#!/usr/bin/env python3
"""Regenerates the 219-entry evaluation fixture.

Hard constraints (checked at the end):
  * 219 entries, fees summing to 76703077 x 1e10 wei, delays summing to 1052 s
  * University 1: 45 entries, 21992263 x 1e10 wei, 605 s
  * University 2: 17 entries, 224 s
  * per-university counts 45/17/18/30/28/8; the other 73 entries carry no
    issuer attribution in the source data and are grouped as "unattributed"
  * fee == gas_used * gas_price exactly for every entry

Run from this directory: python3 gen_table2.py
"""
import csv
import hashlib
import json
import random
from decimal import Decimal

UNIT = 10**10  # 1e-8 ether in wei
TOTAL_FEE_UNITS = 76_703_077
TOTAL_DELAY_MS = 1_052_000
GAS_CHOICES = [20_000, 25_000, 32_000, 40_000]
START_S = 1_600_000_000

GROUPS = [
    # name, count, fee units (None = share of remainder), delay ms (None = share of remainder)
    ("U1", 45, 21_992_263, 605_000),
    ("U2", 17, None, 224_000),
    ("U3", 18, None, None),
    ("U4", 30, None, None),
    ("U5", 28, None, None),
    ("U6", 8, None, None),
    ("unattributed", 73, None, None),
]


def split(total, parts, rng, floor=1):
    """Random composition of `total` into `parts` integers, each >= floor."""
    assert total >= parts * floor
    cuts = sorted(rng.sample(range(1, total - parts * floor + parts), parts - 1))
    bounds = [0] + cuts + [total - parts * floor + parts]
    return [b - a - 1 + floor for a, b in zip(bounds, bounds[1:])]


def main():
    rng = random.Random(20200219)
    fixed_fee = sum(g[2] for g in GROUPS if g[2] is not None)
    fixed_delay = sum(g[3] for g in GROUPS if g[3] is not None)
    free_fee = [g for g in GROUPS if g[2] is None]
    free_delay = [g for g in GROUPS if g[3] is None]
    fee_totals = dict(zip([g[0] for g in free_fee],
                          split(TOTAL_FEE_UNITS - fixed_fee, len(free_fee), rng, floor=10**6)))
    # Each free group gets 500 ms per entry up front so every entry can carry a
    # positive delay; the rest is spread at random.
    base = {g[0]: 500 * g[1] for g in free_delay}
    extra = split(TOTAL_DELAY_MS - fixed_delay - sum(base.values()), len(free_delay), rng, floor=1)
    delay_totals = {g[0]: base[g[0]] + e for g, e in zip(free_delay, extra)}

    entries = []
    for name, count, fee, delay in GROUPS:
        fees = split(fee if fee is not None else fee_totals[name], count, rng, floor=1_000)
        delays = split(delay if delay is not None else delay_totals[name], count, rng, floor=500)
        for f, d in zip(fees, delays):
            entries.append((name, f, d))
    rng.shuffle(entries)

    rows = []
    clock_ms = START_S * 1000
    for i, (name, fee_units, delay_ms) in enumerate(entries):
        clock_ms += rng.randint(1_000, 30_000)
        fee_wei = fee_units * UNIT
        gas_used = rng.choice(GAS_CHOICES)
        assert fee_wei % gas_used == 0
        gas_price = fee_wei // gas_used
        tx_hash = hashlib.sha256(f"evaluation-fixture-{i}".encode()).hexdigest()
        submitted = clock_ms
        confirmed = clock_ms + delay_ms
        rows.append([tx_hash, name,
                     ms_text(submitted), ms_text(confirmed), gas_used, gas_price, fee_wei])

    with open("table2_txlog.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["tx_hash", "issuer_university_id", "submitted_at_s", "confirmed_at_s",
                    "gas_used", "gas_price_wei", "fee_wei"])
        w.writerows(rows)

    with open("table2_prices.csv", "w", newline="") as f:
        f.write("effective_at,usd_per_ether\n0,857.085\n")

    check(rows)


def ms_text(ms):
    return f"{ms // 1000}.{ms % 1000:03d}"


def check(rows):
    assert len(rows) == 219
    fee = sum(int(r[6]) for r in rows)
    assert fee == TOTAL_FEE_UNITS * UNIT, fee
    delay = sum(to_ms(r[3]) - to_ms(r[2]) for r in rows)
    assert delay == TOTAL_DELAY_MS, delay
    u1 = [r for r in rows if r[1] == "U1"]
    assert len(u1) == 45
    assert sum(int(r[6]) for r in u1) == 21_992_263 * UNIT
    assert sum(to_ms(r[3]) - to_ms(r[2]) for r in u1) == 605_000
    for r in rows:
        assert int(r[4]) * int(r[5]) == int(r[6])
    usd = Decimal(fee) / Decimal(10**18) * Decimal("857.085")
    print(f"ok: 219 entries, {Decimal(fee) / Decimal(10**18)} ETH, {delay} ms, {usd} USD")


def to_ms(text):
    s, ms = text.split(".")
    return int(s) * 1000 + int(ms)


if __name__ == "__main__":
    main()
