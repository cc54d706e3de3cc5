"""Collects one verdict line per acceptance criterion for the terminal summary."""

RESULTS: dict = {}


def record(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} ({title}): {detail}"
    RESULTS[number] = line
    print(line)
    return line
