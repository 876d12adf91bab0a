"""Runtime shim: one JSON event on stdin, one JSON response on stdout.

With ``--serve-lines`` the process stays alive and answers one event per
input line, which is how the benchmark harness drives a warm function.
"""
import importlib.util
import json
import os
import sys

ENTRYPOINT = os.environ.get("REFAAS_ENTRYPOINT", "handler.py")


def _load_handler():
    root = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(root, ENTRYPOINT)
    spec = importlib.util.spec_from_file_location("refaas_function", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module.handler


def main():
    handler = _load_handler()
    if "--serve-lines" in sys.argv[1:]:
        for line in sys.stdin:
            if not line.strip():
                continue
            out = handler(json.loads(line))
            sys.stdout.write(json.dumps(out, separators=(",", ":")) + "\n")
            sys.stdout.flush()
        return
    event = json.loads(sys.stdin.read() or "null")
    sys.stdout.write(json.dumps(handler(event)))
    sys.stdout.flush()


if __name__ == "__main__":
    main()
