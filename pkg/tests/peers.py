"""Scriptable wire peer for driving the bridge client in tests.

Speaks one JSON frame per line on stdio or a single TCP connection and
misbehaves on demand: sleeping past deadlines, emitting garbage, lying
about the protocol version, or exiting mid-conversation.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import time


def respond(request: dict, args) -> str | None:
    if args.behavior == "garbage":
        return "this is not a frame"
    if args.behavior == "badversion":
        return json.dumps({"v": 99, "update": "x"})
    if args.behavior == "sleep":
        time.sleep(args.sleep_s)

    kind = request.get("kind")
    if kind == "generate":
        tweets = request.get("tweets") or []
        if args.behavior == "null":
            update = None
        elif args.behavior == "upper":
            update = tweets[0].upper() if tweets else None
        elif args.behavior == "count":
            update = str(len(tweets))
        elif args.behavior == "last":
            update = tweets[-1] if tweets else None
        else:
            update = tweets[0] if tweets else None
        return json.dumps({"v": 1, "update": update}, ensure_ascii=False)
    if kind == "classify":
        if args.behavior == "maybe":
            return json.dumps({"v": 1, "decision": "maybe"})
        decision = "no" if args.behavior in ("null", "no") else "yes"
        return json.dumps({"v": 1, "decision": decision})
    return json.dumps({"v": 1, "error": f"unknown kind {kind!r}"})


def serve(lines, write, args) -> None:
    handled = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if args.behavior == "exit":
            sys.exit(args.exit_code)
        request = json.loads(line)
        reply = respond(request, args)
        if reply is not None:
            write(reply + "\n")
        handled += 1
        if args.max_requests and handled >= args.max_requests:
            return


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--behavior",
        default="echo",
        choices=[
            "echo", "upper", "null", "yes", "no", "maybe", "count", "last",
            "sleep", "garbage", "badversion", "exit",
        ],
    )
    parser.add_argument("--tcp", action="store_true", help="serve one TCP connection instead of stdio")
    parser.add_argument("--sleep-s", type=float, default=30.0)
    parser.add_argument("--exit-code", type=int, default=3)
    parser.add_argument("--max-requests", type=int, default=0)
    args = parser.parse_args()

    if args.tcp:
        server = socket.create_server(("127.0.0.1", 0))
        host, port = server.getsockname()
        print(f"LISTENING {host}:{port}", file=sys.stderr, flush=True)
        conn, _ = server.accept()
        with conn, conn.makefile("rw", encoding="utf-8") as stream:
            serve(stream, lambda s: (stream.write(s), stream.flush()), args)
    else:
        serve(sys.stdin, lambda s: (sys.stdout.write(s), sys.stdout.flush()), args)


if __name__ == "__main__":
    main()
