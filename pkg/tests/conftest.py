import threading
import urllib.parse
from datetime import date, datetime, time, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from icecast.fixtures import FIXTURE_FROM, FIXTURE_TO, fixture_observations
from icecast.store import open_store


def day(iso: str) -> date:
    return date.fromisoformat(iso)


def ts(iso_day: str) -> datetime:
    return datetime.combine(day(iso_day), time(0, 0), tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def fixture_store_dir(tmp_path_factory):
    """The bundled study-span series ingested into a store, built once."""
    root = tmp_path_factory.mktemp("fixture-store") / "store"
    st = open_store(root)
    st.append_records(fixture_observations())
    return root


@pytest.fixture(scope="session")
def fixture_span():
    return FIXTURE_FROM, FIXTURE_TO


class _SeriesHandler(BaseHTTPRequestHandler):
    """Tiny deterministic series endpoint.

    point 999 -> 404; point 998 -> body with one malformed line; anything
    else -> constant 0.5 series over the requested day range.
    """

    def log_message(self, *args):
        pass

    def do_GET(self):
        query = urllib.parse.parse_qs(urllib.parse.urlparse(self.path).query)
        point = int(query["point"][0])
        if point == 999:
            self.send_error(404)
            return
        if point == 998:
            body = "#obs v1\nnot,a,valid,line\n"
        else:
            from_day = date.fromisoformat(query["from"][0])
            to_day = date.fromisoformat(query["to"][0])
            lines = ["#obs v1"]
            for i in range((to_day - from_day).days + 1):
                stamp = from_day + timedelta(days=i)
                lines.append(f"{stamp.isoformat()}T00:00:00Z,{point},0.5")
            body = "\n".join(lines) + "\n"
        payload = body.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/plain")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture(scope="session")
def series_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _SeriesHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/series"
    server.shutdown()
    thread.join()
