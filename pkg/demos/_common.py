"""Shared helpers for the demo scripts."""
import sys
from pathlib import Path


def output_dir(name: str) -> Path:
    """``<first argv or ./demo_output>/<name>``."""
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
    d = root / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def show_checks(checks):
    for name, passed, detail in checks:
        print(f"  {'PASS' if passed else 'FAIL'}  {name}: {detail}")
