from hypothesis import settings

# derandomized so the whole suite is reproducible run to run
settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(test_acceptance.RESULTS, key=lambda c: int(c[1:])):
        ok, line = test_acceptance.RESULTS[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid}: {line}")
