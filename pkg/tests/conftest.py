def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criterion verdict lines after the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    if getattr(test_acceptance, "VERDICTS", None):
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.VERDICTS:
            terminalreporter.write_line(line)
