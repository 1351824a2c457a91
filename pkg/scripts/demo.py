"""Integrate the bundled mixed manifest, validate the result and summarize it.

    python3 scripts/demo.py [out.xml]
"""
import sys
from pathlib import Path

from multiform.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def run(out: str) -> int:
    steps = [
        ["integrate", "--manifest", str(FIXTURES / "mixed.manifest"), "--out", out],
        ["validate", out],
        ["inspect", out],
    ]
    for argv in steps:
        code = main(argv)
        if code:
            print(f"{argv[0]} exited {code}", file=sys.stderr)
            return code
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "mixed.xml"))
