"""Interpreter and deterministic actor runtime for a small object calculus
with gradual reference capabilities.

The heavy lifting lives in the C++ extension module ``gradcap._core``; this
package adds thin JSON-decoding wrappers so run and exploration results come
back as plain dicts.
"""

import json as _json

from gradcap._core import (
    GcapParseError,
    Program,
    __version__,
    erase,
    explore_json,
    parse_file,
    parse_text,
    pretty,
    run_json,
    validate,
)

__all__ = [
    "GcapParseError",
    "Program",
    "__version__",
    "erase",
    "explore",
    "parse_file",
    "parse_text",
    "pretty",
    "run",
    "validate",
]


def run(
    program,
    schedule="round-robin",
    seed=0,
    max_steps=100000,
    literal_lifo=False,
    fail_fast=False,
    trace=False,
):
    """Run a program to quiescence; returns the outcome document as a dict.

    With ``trace=True`` the document carries a ``trace`` list with one entry
    per reduction step.
    """
    return _json.loads(
        run_json(program, schedule, seed, max_steps, literal_lifo, fail_fast, trace)
    )


def explore(program, max_steps=1000, max_nodes=1 << 20, literal_lifo=False):
    """Enumerate every scheduling choice; returns the summary document."""
    return _json.loads(explore_json(program, max_steps, max_nodes, literal_lifo))
