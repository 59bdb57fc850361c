#!/usr/bin/env python3
"""Minimal stage backend for protocol tests.

Usage: echo_backend.py [MODE [STAGE]]
  ok              answer every stage; inpaint echoes the input image
  malformed STAGE reply with a non-JSON line at STAGE
  hang STAGE      never reply at STAGE
  badversion      report an unsupported protocol version
  error STAGE     reply ok=false at STAGE
"""
import base64
import json
import struct
import sys
import time
import zlib

mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
target = sys.argv[2] if len(sys.argv) > 2 else None


def png_size(data):
    return struct.unpack(">II", data[16:24])


def chunk(tag, body):
    c = struct.pack(">I", len(body)) + tag + body
    return c + struct.pack(">I", zlib.crc32(tag + body) & 0xFFFFFFFF)


def mask_png(w, h):
    # Centred square covering a quarter of the frame.
    rows = []
    for y in range(h):
        inside_y = h // 4 <= y < 3 * h // 4
        row = bytes(255 if inside_y and w // 4 <= x < 3 * w // 4 else 0 for x in range(w))
        rows.append(b"\x00" + row)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(b"".join(rows))) + chunk(b"IEND", b"")


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


for line in sys.stdin:
    req = json.loads(line)
    stage, rid = req["stage"], req["id"]
    if stage == target or (target is None and mode == "badversion" and stage == "hello"):
        if mode == "malformed":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        if mode == "hang":
            sys.stderr.write("stuck in %s\n" % stage)
            sys.stderr.flush()
            time.sleep(60)
            continue
        if mode == "error":
            reply({"id": rid, "ok": False, "error": "model unavailable"})
            continue
        if mode == "badversion":
            reply({"id": rid, "ok": True, "text": "<protocol-version 9>"})
            continue
    if stage == "hello":
        reply({"id": rid, "ok": True, "text": "<protocol-version 1>"})
    elif stage == "caption":
        reply({"id": rid, "ok": True, "text": "a red ball"})
    elif stage == "segment":
        w, h = png_size(base64.b64decode(req["image"]))
        reply({"id": rid, "ok": True, "mask": base64.b64encode(mask_png(w, h)).decode()})
    elif stage == "summarize":
        reply({"id": rid, "ok": True, "text": "a grassy meadow"})
    elif stage == "inpaint":
        reply({"id": rid, "ok": True, "image": req["image"]})
    else:
        reply({"id": rid, "ok": False, "error": "unknown stage " + stage})
