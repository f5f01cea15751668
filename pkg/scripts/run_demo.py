#!/usr/bin/env python3
"""Run every bundled scenario and print its text report.

Scenarios whose name ends in -xfail are deliberate negative examples and are
expected to exit 1; everything else must pass.
"""

import sys

from lethargy import cli


def main() -> int:
    bad = []
    for name in cli.list_bundled():
        print("=" * 72)
        code = cli.main(["demo", name])
        expected = 1 if name.endswith("-xfail") else 0
        status = "as expected" if code == expected else "UNEXPECTED"
        print(f"--> {name}: exit {code} ({status})")
        if code != expected:
            bad.append(name)
    print("=" * 72)
    if bad:
        print(f"unexpected outcomes: {', '.join(bad)}")
        return 1
    print("all bundled scenarios behaved as expected")
    return 0


if __name__ == "__main__":
    sys.exit(main())
