def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large-n or long-running checks")
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")
