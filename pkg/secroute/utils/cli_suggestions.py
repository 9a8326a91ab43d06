from __future__ import annotations

import argparse
import sys
from difflib import get_close_matches


def _suggest(bad: str, choices: list[str]) -> str:
    tips = get_close_matches(bad, choices, n=3, cutoff=0.6)
    return f"\n\nDid you mean: {', '.join(tips)}?" if tips else ""


class SmartParser(argparse.ArgumentParser):
    """ArgumentParser that proposes near matches for a mistyped subcommand or choice."""

    def error(self, message: str):
        # "invalid choice: 'scp-evl' (choose from 'scp-eval', 'route', ...)"
        if "invalid choice" in message and "choose from" in message:
            bad = message.split("invalid choice:")[1].split("(")[0].strip().strip("'\"")
            choices_str = message.split("choose from")[1]
            choices = [c.strip().strip(",)'\"") for c in choices_str.split() if c.strip(",)")]
            message += _suggest(bad, choices)
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")
