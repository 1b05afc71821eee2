"""TCP transport: announce, serve one connection at a time, sequential reuse."""

import json
import socket

from wire import classify_frame, generate_frame, tcp_peer


def exchange(addr: str, frames: list[dict]) -> list[dict]:
    host, port = addr.rsplit(":", 1)
    responses = []
    # close the makefile too, or the peer never sees EOF
    with socket.create_connection((host, int(port)), timeout=10) as conn:
        with conn.makefile("rb") as rf:
            for frame in frames:
                conn.sendall(json.dumps(frame, ensure_ascii=False).encode("utf-8") + b"\n")
                responses.append(json.loads(rf.readline().decode("utf-8")))
    return responses


def test_announces_bound_address_and_echoes():
    with tcp_peer("--behavior", "echo_first_tweet", "--connections", "1") as (proc, addr):
        host, port = addr.rsplit(":", 1)
        assert host == "127.0.0.1" and int(port) > 0
        responses = exchange(addr, [generate_frame(m, [f"t{m}"]) for m in range(4)])
        assert responses == [{"v": 1, "update": f"t{m}"} for m in range(4)]
        assert proc.wait(timeout=10) == 0


def test_serves_connections_sequentially():
    with tcp_peer("--behavior", "always_yes", "--connections", "2") as (proc, addr):
        first = exchange(addr, [classify_frame(0, ["a"])])
        second = exchange(addr, [classify_frame(1, ["b"]), classify_frame(2, [])])
        assert first == [{"v": 1, "decision": "yes"}]
        assert second == [{"v": 1, "decision": "yes"}] * 2
        assert proc.wait(timeout=10) == 0


def test_error_frames_do_not_kill_the_connection():
    with tcp_peer("--behavior", "template", "--connections", "1") as (proc, addr):
        host, port = addr.rsplit(":", 1)
        with socket.create_connection((host, int(port)), timeout=10) as conn:
            with conn.makefile("rb") as rf:
                conn.sendall(b"garbage\n")
                error = json.loads(rf.readline().decode("utf-8"))
                assert "error" in error
                conn.sendall(json.dumps(generate_frame(5, ["a"], [(2, "x")])).encode() + b"\n")
                ok = json.loads(rf.readline().decode("utf-8"))
                assert ok == {"v": 1, "update": "minute 5: 1 tweets, 1 context"}
        assert proc.wait(timeout=10) == 0
