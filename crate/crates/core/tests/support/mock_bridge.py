"""Scriptable bridge peer for the exec-model tests.

usage: mock_bridge.py MODE [WEIGHTS_JSON BIAS]
"""
import json
import math
import sys
import time

mode = sys.argv[1]
weights = json.loads(sys.argv[2]) if len(sys.argv) > 2 else []
bias = float(sys.argv[3]) if len(sys.argv) > 3 else 0.0


def send(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def score(row):
    z = bias + sum(w * v for w, v in zip(weights, row))
    return 1.0 / (1.0 + math.exp(-z))


hello = json.loads(sys.stdin.readline())
assert hello == {"type": "hello", "protocol": 1}, hello
if mode == "bad-handshake":
    send({"type": "scores", "id": 0, "scores": []})
    sys.exit(0)
if mode == "wrong-protocol":
    send({"type": "ready", "protocol": 99})
    sys.exit(0)
if mode == "hang-handshake":
    time.sleep(30)
send({"type": "ready", "protocol": 1})

for line in sys.stdin:
    req = json.loads(line)
    rid = req["id"]
    rows = req["instances"]
    if mode == "linear":
        send({"type": "scores", "id": rid, "scores": [score(r) for r in rows]})
    elif mode == "echo-first":
        # score encodes the request id so the client can check ordering
        send({"type": "scores", "id": rid, "scores": [((rid % 1000) / 1000.0) for _ in rows]})
    elif mode == "wrong-id":
        send({"type": "scores", "id": rid + 1, "scores": [0.5 for _ in rows]})
    elif mode == "error":
        send({"type": "error", "id": rid, "message": "model exploded"})
    elif mode == "out-of-range":
        send({"type": "scores", "id": rid, "scores": [1.5 for _ in rows]})
    elif mode == "nan":
        sys.stdout.write('{"type":"scores","id":%d,"scores":[NaN]}\n' % rid)
        sys.stdout.flush()
    elif mode == "short":
        send({"type": "scores", "id": rid, "scores": [0.5]})
    elif mode == "slow":
        time.sleep(30)
    elif mode == "die":
        sys.exit(3)
