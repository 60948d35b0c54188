import json
import shutil
import threading
from pathlib import Path

import pytest

from purlite.server import ServerConfig, make_server

FIXTURES = Path(__file__).parent / "fixtures"
TOKEN = "s3cret-token"


def write_config(directory: Path, rules: str = "topology.rules", **extra) -> Path:
    """Copy a rules fixture into ``directory`` and write a config next to it."""
    shutil.copy(FIXTURES / rules, directory / "site.rules")
    data = {
        "listen": "127.0.0.1:0",
        "rules": "site.rules",
        "ledger": "ledger.log",
        "doc_root": str(FIXTURES / "docroot"),
        "admin_token": TOKEN,
        "strategies": {"counter": {"kind": "counter", "prefix": "e"},
                       "fancy": {"kind": "fancyCounter", "length": 2},
                       "random": {"kind": "randomLedger", "length": 4}},
    }
    data.update(extra)
    path = directory / "purlite.json"
    path.write_text(json.dumps(data))
    return path


class Running:
    def __init__(self, config_path: Path):
        self.httpd = make_server(ServerConfig.load(config_path))
        self.service = self.httpd.service
        self.url = self.httpd.url
        self.thread = threading.Thread(target=self.httpd.serve_forever, args=(0.05,), daemon=True)
        self.thread.start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def running(tmp_path, monkeypatch):
    monkeypatch.delenv("PURLITE_ADMIN_TOKEN", raising=False)
    servers = []

    def start(rules="topology.rules", **extra):
        server = Running(write_config(tmp_path, rules, **extra))
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.close()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
