"""Entry point: configuration comes from CONSTSUM_SIDECAR_* variables."""

from __future__ import annotations

import sys

from .service import ServiceConfig, create_app


def main() -> int:
    import uvicorn

    cfg = ServiceConfig.from_env()
    try:
        app = create_app(cfg)
    except Exception as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
