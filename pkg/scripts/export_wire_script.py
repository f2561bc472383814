"""Flatten a dialogue script into raw wire-format turns.

Clients that speak only the HTTP interface (no corpus ids, no symbolic
targets) can replay the result verbatim: one POST per turn.
"""

import argparse
import json
from pathlib import Path

from edg.scripting import compile_turns, load_script


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--script", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    script = load_script(args.script)
    payload = {
        "participants": [
            {"name": name, "role": role} for name, role in script.participants
        ],
        "config": script.config,
        "turns": compile_turns(script),
    }
    text = json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True) + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"{len(payload['turns'])} turns -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
