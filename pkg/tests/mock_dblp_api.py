"""A tiny stand-in for the DBLP search API, for live-mode linker tests."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlparse


class MockDblpApi:
    """Serves /search/<kind>/api?q=... from an in-memory table and records
    every request with its arrival time."""

    def __init__(self, responses: dict[tuple[str, str], dict],
                 fail_first: int = 0, status: int = 200):
        self.responses = responses
        self.requests: list[tuple[float, str, str]] = []
        self.fail_first = fail_first
        self.status = status
        self._lock = threading.Lock()

        api = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                parsed = urlparse(self.path)
                kind = parsed.path.split("/")[2]
                query = unquote(parse_qs(parsed.query).get("q", [""])[0])
                with api._lock:
                    api.requests.append((time.monotonic(), kind, query))
                    must_fail = api.fail_first > 0
                    if must_fail:
                        api.fail_first -= 1
                if must_fail or api.status != 200:
                    code = 503 if must_fail else api.status
                    self.send_response(code)
                    self.end_headers()
                    return
                payload = api.responses.get(
                    (kind, query),
                    {"result": {"hits": {"@total": "0"}}})
                body = json.dumps(payload).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self._server.server_address[1]}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
