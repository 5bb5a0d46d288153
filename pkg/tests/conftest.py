from hypothesis import settings

# fixed example streams keep the suite reproducible run to run
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
