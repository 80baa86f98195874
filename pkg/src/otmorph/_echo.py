"""Reference OTPROJ01 endpoint that echoes every vector back unchanged.

Run as ``python -m otmorph._echo``.  Useful for exercising the external
projector plumbing: driving it through this process must reproduce the
identity projector exactly.
"""

import struct
import sys

MAGIC = b"OTPROJ01"


def _read_exact(stream, count):
    buf = bytearray()
    while len(buf) < count:
        chunk = stream.read(count - len(buf))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


def main() -> int:
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        header = _read_exact(stdin, len(MAGIC) + 4)
        if header is None:
            return 0
        if header[: len(MAGIC)] != MAGIC:
            return 1
        (n,) = struct.unpack("<I", header[len(MAGIC) :])
        payload = _read_exact(stdin, 8 * n)
        if payload is None:
            return 1
        stdout.write(struct.pack("<I", n) + payload)
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
