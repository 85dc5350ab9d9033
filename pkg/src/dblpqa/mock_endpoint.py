"""In-process SPARQL endpoint backed by the local evaluator.

Serves standard results-JSON for queries over a fixture graph, counting
every query it executes.  Tests use it to verify the remote client and
the pipeline's first-accept behaviour; ``python -m dblpqa.mock_endpoint``
runs it standalone.
"""

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .endpoint import Graph, evaluate_local, load_graph, results_to_json
from .sparql import SparqlError, parse


class MockSparqlEndpoint:
    def __init__(self, graph: Graph, host: str = "127.0.0.1", port: int = 0):
        self.graph = graph
        self.query_count = 0
        self.queries: list[str] = []
        self._lock = threading.Lock()

        endpoint = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _respond(self, status: int, payload: dict):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/sparql-results+json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _handle(self, query: str | None):
                if query is None:
                    self._respond(400, {"error": "missing query parameter"})
                    return
                with endpoint._lock:
                    endpoint.query_count += 1
                    endpoint.queries.append(query)
                try:
                    result = evaluate_local(parse(query), endpoint.graph)
                except SparqlError as exc:
                    self._respond(400, {"error": str(exc)})
                    return
                self._respond(200, results_to_json(result))

            def do_GET(self):
                params = parse_qs(urlparse(self.path).query)
                self._handle(params.get("query", [None])[0])

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length).decode("utf-8")
                self._handle(parse_qs(body).get("query", [None])[0])

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/sparql"

    def start(self) -> "MockSparqlEndpoint":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Serve a fixture graph as a SPARQL endpoint")
    ap.add_argument("--graph", required=True, help="triple fixture file")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8890)
    args = ap.parse_args(argv)
    server = MockSparqlEndpoint(load_graph(args.graph), args.host, args.port)
    print(f"serving {args.graph} at {server.url}")
    try:
        server.start()._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
