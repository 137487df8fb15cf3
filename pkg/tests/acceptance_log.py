"""Collects one summary line per acceptance criterion for the terminal report."""

RESULTS: list[str] = []


def report(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
    print(line)
    RESULTS.append(line)
