"""Play a fleet of random legal dialogues and report what the kernel did.

Example:

    python3 scripts/fuzz_dialogues.py --count 1000 --seed 1234
"""

from __future__ import annotations

import argparse
import sys
import time

from edg.simulate import play_fleet


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1234)
    parser.add_argument("--max-turns", type=int, default=50)
    parser.add_argument("--max-participants", type=int, default=6)
    args = parser.parse_args(argv)

    t0 = time.time()
    sessions, stats = play_fleet(
        args.count,
        seed=args.seed,
        max_turns=args.max_turns,
        max_participants=args.max_participants,
    )
    elapsed = time.time() - t0

    print(f"played {stats.sessions} dialogues in {elapsed:.2f}s")
    print(f"  closed normally        {stats.closed_sessions}")
    print(f"  turns accepted         {stats.turns_accepted}")
    print(f"  moves accepted         {stats.moves_accepted}")
    print(f"  politeness injections  {stats.politeness_injections} "
          f"(blocked {stats.politeness_blocked})")
    print(f"  multilateral checks    {stats.multilateral_checks} "
          f"(violations {len(stats.multilateral_violations)})")
    print(f"  closing probes         {stats.closing_probes} "
          f"(failures {len(stats.closing_failures)})")
    print(f"  reopen probes          {stats.reopen_probes} "
          f"(failures {len(stats.reopen_failures)})")
    print("  locution mix:")
    for kind, count in sorted(stats.kind_counts.items()):
        print(f"    {kind:<12} {count}")

    problems = (
        stats.politeness_injections - stats.politeness_blocked
        or stats.politeness_wrong_code
        or stats.multilateral_violations
        or stats.closing_failures
        or stats.reopen_failures
    )
    if problems:
        print("PROBLEMS FOUND", file=sys.stderr)
        for line in (
            stats.politeness_wrong_code
            + stats.multilateral_violations
            + stats.closing_failures
            + stats.reopen_failures
        )[:20]:
            print(f"  {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
