def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long benchmark reproductions (deselect with -m 'not slow')")
