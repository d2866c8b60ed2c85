"""Collects one verdict per acceptance criterion for the terminal summary."""

RESULTS: dict = {}


def check(number: int, ok: bool, detail: str):
    RESULTS[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail
