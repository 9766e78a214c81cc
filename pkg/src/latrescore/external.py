"""Client for the external scorer wire protocol.

Newline-delimited UTF-8 request/response over a child process's
stdin/stdout or a TCP stream::

    -> HELLO v1                     <- OK <scorer-name> <forward|backward>
    -> RESET                        <- OK <state-id>
    -> SCORE <state-id> <word>      <- OK <new-state-id> <logprob-decimal>
    -> RELEASE <state-id>           <- OK
    any failure                     <- ERR <message>

State ids are opaque decimal integers owned by the server.  The client
memoizes (state, word) lookups, which both cuts traffic and keeps advance
bit-pure on the client side.
"""

import shlex
import socket
import subprocess

from .errors import ProtocolError
from .scoring import SequenceScorer

PROTOCOL_VERSION = "v1"


class StdioTransport:
    """Line transport over a child process's stdin/stdout."""

    def __init__(self, command):
        argv = shlex.split(command) if isinstance(command, str) else command
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)

    def exchange(self, line):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
            reply = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"scorer process died: {exc}")
        if not reply:
            raise ProtocolError("scorer process closed the stream")
        return reply.rstrip("\n")

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=5)


class TcpTransport:
    """Line transport over a TCP connection."""

    def __init__(self, host, port):
        self.sock = socket.create_connection((host, port))
        self.reader = self.sock.makefile("r", encoding="utf-8", newline="\n")
        self.writer = self.sock.makefile("w", encoding="utf-8", newline="\n")

    def exchange(self, line):
        try:
            self.writer.write(line + "\n")
            self.writer.flush()
            reply = self.reader.readline()
        except OSError as exc:
            raise ProtocolError(f"scorer connection failed: {exc}")
        if not reply:
            raise ProtocolError("scorer connection closed")
        return reply.rstrip("\n")

    def close(self):
        self.sock.close()


class ExternalScorer(SequenceScorer):
    """Sequence scorer backed by a protocol-speaking server.

    The server declares its own name and direction in the HELLO reply.
    Requests on one connection are serialized; open one scorer per worker
    for parallelism.
    """

    context_kind = "unbounded"

    def __init__(self, command=None, transport=None, host=None, port=None):
        if transport is not None:
            self.transport = transport
        elif command is not None:
            self.transport = StdioTransport(command)
        elif host is not None and port is not None:
            self.transport = TcpTransport(host, port)
        else:
            raise ProtocolError("need a command, transport, or host/port")
        reply = self._request(f"HELLO {PROTOCOL_VERSION}")
        parts = reply.split()
        if len(parts) != 2 or parts[1] not in ("forward", "backward"):
            raise ProtocolError(f"bad HELLO reply: OK {reply!r}")
        self.name, self.direction = parts
        self._initial = None
        self._cache = {}

    def _request(self, line):
        reply = self.transport.exchange(line)
        if reply.startswith("OK"):
            return reply[2:].strip()
        if reply.startswith("ERR"):
            raise ProtocolError(reply[3:].strip() or "unspecified error")
        raise ProtocolError(f"malformed reply {reply!r}")

    def init_state(self):
        if self._initial is None:
            reply = self._request("RESET")
            self._initial = self._parse_state(reply)
        return self._initial

    def advance(self, state, word):
        if any(c.isspace() for c in word):
            raise ProtocolError(f"word {word!r} contains whitespace")
        key = (state, word)
        cached = self._cache.get(key)
        if cached is None:
            reply = self._request(f"SCORE {state} {word}")
            parts = reply.split()
            if len(parts) != 2:
                raise ProtocolError(f"bad SCORE reply: OK {reply!r}")
            try:
                cached = (self._parse_state(parts[0]), float(parts[1]))
            except ValueError:
                raise ProtocolError(f"bad SCORE numbers in OK {reply!r}")
            self._cache[key] = cached
        return cached

    def release(self, state):
        self._request(f"RELEASE {state}")
        self._cache = {k: v for k, v in self._cache.items()
                       if k[0] != state and v[0] != state}

    def close(self):
        self.transport.close()

    @staticmethod
    def _parse_state(token):
        try:
            return int(token)
        except ValueError:
            raise ProtocolError(f"bad state id {token!r}")
