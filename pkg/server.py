"""
Thin entry point for the storage planning API.

Usage:
    python server.py              # API on http://localhost:8000
    python server.py --port 8080
"""

from __future__ import annotations

import sys

from backend.src.main import app


if __name__ == "__main__":
    import uvicorn

    port: int = 8000
    if "--port" in sys.argv:
        port = int(sys.argv[sys.argv.index("--port") + 1])
    print(f"\n🚀 Storage planning API running at  http://localhost:{port}\n")
    uvicorn.run(app, host="0.0.0.0", port=port)
