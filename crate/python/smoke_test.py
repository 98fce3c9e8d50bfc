#!/usr/bin/env python3
"""Smoke test for the asyncratt_py extension module.

Build and stage the module first:

    cargo build -p asyncratt-py --release
    cp target/release/libasyncratt_py.so python/asyncratt_py.so

then run:  python3 python/smoke_test.py
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

try:
    import asyncratt_py as art
except ImportError as e:
    sys.stderr.write(
        f"could not import asyncratt_py ({e}); build it with\n"
        "  cargo build -p asyncratt-py --release\n"
        "  cp target/release/libasyncratt_py.so python/asyncratt_py.so\n"
    )
    sys.exit(2)

FIELD1 = """
inputs
  up : p Unit
  toggle : p Unit

outputs
  x : Nat = toggleSig (box (await toggle)) (box (count sigAwait_up)) (box const) 0
"""

SUM = """
inputs
  k : bp Nat

outputs
  total : Nat = sum sig_k
"""

BROKEN = """
inputs
  up : p Unit

outputs
  x : Nat = box (await up)
"""


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    # typechecking
    art.check(FIELD1)
    check(True, "field1 typechecks")
    try:
        art.check(BROKEN)
        raise SystemExit("FAIL: ill-typed program accepted")
    except ValueError as e:
        check("Mismatch" in str(e) or "NotValueType" in str(e), f"ill-typed program rejected ({e})")

    chans = art.channels(FIELD1)
    check(("up", "p", "Unit") in chans, f"channel listing {chans}")

    # the toggled-counter trace
    m = art.Machine(FIELD1)
    check(m.init() == [["x", 0]], "init batch")
    check(m.send("up", None) == [["x", 1]], "up increments")
    check(m.send("toggle", None) == [["x", 1]], "toggle freezes the value")
    check(m.send("up", None) == [], "frozen field ignores up")
    check(m.send("up", None) == [], "still frozen")
    state = m.state()
    clocks = sorted(tuple(entry["clock"]) for entry in state["heap"])
    check(clocks == [("toggle",), ("toggle",)], f"live clocks {clocks}")
    check(m.steps() == 4, "four events processed")

    # buffered channels and whole-run helper
    batches = art.run(SUM, [("k", 1), ("k", 2), ("k", 3)], buffer={"k": 0})
    totals = [v for batch in batches for (name, v) in batch if name == "total"]
    check(totals == [0, 1, 3, 6], f"prefix sums {totals}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
