# Minimal test runner speaking the PASS/FAIL line protocol.
import os
import sys
import traceback


def run(tests):
    failed = False
    for fn in tests:
        name = fn.__name__
        try:
            fn()
            print(f"PASS {name}")
        except Exception as exc:  # noqa: BLE001
            failed = True
            detail = str(exc)
            msg = f"{type(exc).__name__}: {detail}" if detail else type(exc).__name__
            print(f"FAIL {name}: {msg}")
            frames = traceback.extract_tb(exc.__traceback__)
            for frame in reversed(frames):
                base = os.path.basename(frame.filename)
                if base.startswith("test_"):
                    print(f"  at {base}:{frame.lineno}")
    sys.exit(1 if failed else 0)


def expect_eq(expected, actual):
    if expected != actual:
        raise AssertionError(f"expected {expected!r} but was {actual!r}")
