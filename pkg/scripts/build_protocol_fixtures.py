"""Regenerate the golden scorer-protocol responses.

Replays tests/fixtures/protocol/requests.jsonl against the in-process
service /score endpoint (built-in scorer, bundled vocabulary) and freezes
the wire-level replies. Run from the repository root:

    python scripts/build_protocol_fixtures.py
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from keyrel.service import create_app  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures" / "protocol"


def main() -> None:
    client = TestClient(create_app())
    lines = []
    for line in (FIXTURES / "requests.jsonl").read_text(encoding="utf-8").splitlines():
        request = json.loads(line)
        reply = client.post("/score", json=request)
        reply.raise_for_status()
        lines.append(json.dumps(reply.json(), ensure_ascii=False))
    out = FIXTURES / "responses.jsonl"
    out.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    print(f"wrote {len(lines)} responses to {out}")


if __name__ == "__main__":
    main()
