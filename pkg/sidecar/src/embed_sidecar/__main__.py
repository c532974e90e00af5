"""Run the sidecar: python -m embed_sidecar [--port 8799] [--model <id>]"""

import argparse

import uvicorn

from .app import DEFAULT_MODEL_ID, create_app


def main() -> None:
    parser = argparse.ArgumentParser(prog="embed_sidecar")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8799)
    parser.add_argument("--model", default=DEFAULT_MODEL_ID)
    args = parser.parse_args()
    uvicorn.run(create_app(model_id=args.model), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
