"""Alert decisions, counter-based repeat suppression and sink dispatch.

Alert log line (format version 1, one per dispatched event)::

    ts=<epoch %.3f> module=<kind> action=<LOG|EMAIL|SMS> severity=<%.4f> ratio=<%.4f> tod=<%.2f> suppressed=<n> downgraded=<0|1>

A fresh log file starts with the comment line ``# fuzzdiag-alertlog 1``.
"""
from __future__ import annotations

import json
import logging
import os
import queue
import shlex
import subprocess
import threading
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, TextIO, Union

from .rulebook import ActionLevel, ModuleKind, action_from_severity

log = logging.getLogger(__name__)

LOG_HEADER = "# fuzzdiag-alertlog 1"
DEFAULT_COOLDOWN = 300.0


@dataclass(frozen=True)
class AlertEvent:
    module: ModuleKind
    ts: float
    severity: float
    action: ActionLevel
    ratio: float = 0.0
    tod: float = 0.0
    suppressed_count: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "ts": self.ts, "module": self.module.value, "action": self.action.name,
            "severity": self.severity, "ratio": self.ratio, "tod": self.tod,
            "suppressed": self.suppressed_count,
        }, sort_keys=True)


def format_log_line(event: AlertEvent, downgraded: bool = False) -> str:
    return (f"ts={event.ts:.3f} module={event.module.value} action={event.action.name} "
            f"severity={event.severity:.4f} ratio={event.ratio:.4f} tod={event.tod:.2f} "
            f"suppressed={event.suppressed_count} downgraded={int(downgraded)}")


def decide(module: ModuleKind, ts: float, severity: float, ratio: float = 0.0,
           tod: float = 0.0) -> Optional[AlertEvent]:
    action = action_from_severity(severity)
    if action is ActionLevel.IGNORE:
        return None
    return AlertEvent(module, ts, severity, action, ratio, tod)


class RateLimiter:
    """Per (module, action) cooldown with a counter of swallowed repeats.

    The first event for a key, or the first once `cooldown` seconds have
    passed since the last dispatch, goes out carrying the number of events
    suppressed in between.
    """

    def __init__(self, cooldown: float = DEFAULT_COOLDOWN):
        if cooldown < 0:
            raise ValueError("cooldown must be non-negative")
        self.cooldown = cooldown
        self.last_dispatch: dict[tuple[ModuleKind, ActionLevel], float] = {}
        self.counters: dict[tuple[ModuleKind, ActionLevel], int] = {}

    def __call__(self, event: AlertEvent) -> Optional[AlertEvent]:
        """The event to dispatch (with its suppressed_count filled in), or None to suppress."""
        key = (event.module, event.action)
        last = self.last_dispatch.get(key)
        if last is None or event.ts - last >= self.cooldown:
            pending = self.counters.get(key, 0)
            self.last_dispatch[key] = event.ts
            self.counters[key] = 0
            return replace(event, suppressed_count=pending)
        self.counters[key] = self.counters.get(key, 0) + 1
        return None

    def pending(self) -> dict[tuple[ModuleKind, ActionLevel], int]:
        return {k: c for k, c in self.counters.items() if c}


def rate_limit(event: AlertEvent, state: RateLimiter) -> Optional[AlertEvent]:
    return state(event)


class SinkError(RuntimeError):
    pass


class CommandSink:
    """Runs an external command with the JSON event on its standard input."""

    def __init__(self, argv: list[str], timeout: float = 10.0):
        self.argv = argv
        self.timeout = timeout

    def send(self, event: AlertEvent) -> None:
        try:
            proc = subprocess.run(self.argv, input=event.to_json() + "\n", text=True,
                                  capture_output=True, timeout=self.timeout)
        except (OSError, subprocess.SubprocessError) as exc:
            raise SinkError(f"{self.argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise SinkError(f"{self.argv[0]} exited {proc.returncode}: {proc.stderr.strip()[:200]}")

    def __repr__(self):
        return f"CommandSink({self.argv!r})"


class HttpSink:
    """POSTs the JSON event to an endpoint; the bearer token comes from an env var if named."""

    def __init__(self, url: str, token_env: Optional[str] = None, timeout: float = 10.0):
        self.url = url
        self.token_env = token_env
        self.timeout = timeout

    def send(self, event: AlertEvent) -> None:
        headers = {"Content-Type": "application/json"}
        if self.token_env:
            token = os.environ.get(self.token_env)
            if token is None:
                raise SinkError(f"environment variable {self.token_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(self.url, data=event.to_json().encode(), headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                if resp.status >= 300:
                    raise SinkError(f"{self.url} answered {resp.status}")
        except OSError as exc:
            raise SinkError(f"{self.url}: {exc}") from exc

    def __repr__(self):
        return f"HttpSink({self.url!r})"


def sink_from_descriptor(desc: Union[str, dict, None]):
    """``"cmd:<command line>"``, ``"http://..."``/``"https://..."`` or a table with ``command``/``url`` keys."""
    if desc is None:
        return None
    if isinstance(desc, str):
        if desc.startswith("cmd:"):
            return CommandSink(shlex.split(desc[4:]))
        if desc.startswith(("http://", "https://")):
            return HttpSink(desc)
        raise ValueError(f"unrecognised sink descriptor {desc!r}")
    if "command" in desc:
        argv = desc["command"]
        return CommandSink(shlex.split(argv) if isinstance(argv, str) else list(argv),
                           float(desc.get("timeout", 10.0)))
    if "url" in desc:
        return HttpSink(desc["url"], desc.get("token_env"), float(desc.get("timeout", 10.0)))
    raise ValueError(f"sink table needs 'command' or 'url': {desc!r}")


class AsyncSink:
    """Delivers through a bounded queue on a worker thread so detection never waits on I/O."""

    def __init__(self, sink, maxsize: int = 1000):
        self.sink = sink
        self.failures = 0
        self.overflow = 0
        self.delivered = 0
        self.errors: list[str] = []
        self._q: queue.Queue = queue.Queue(maxsize)
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self):
        while True:
            event = self._q.get()
            if event is None:
                self._q.task_done()
                return
            try:
                self.sink.send(event)
                self.delivered += 1
            except Exception as exc:  # sink failures must never reach detection
                self.failures += 1
                self.errors.append(str(exc))
                log.error("alert delivery via %r failed: %s", self.sink, exc)
            self._q.task_done()

    def send(self, event: AlertEvent) -> None:
        try:
            self._q.put_nowait(event)
        except queue.Full:
            self.overflow += 1
            log.error("alert queue for %r full, dropping delivery of %s", self.sink, format_log_line(event))

    def close(self) -> None:
        self._q.put(None)
        self._thread.join()


@dataclass
class DeliveryRecord:
    event: AlertEvent
    log_line: str
    downgraded: bool = False
    external: Optional[str] = None
    error: Optional[str] = None


@dataclass
class Sinks:
    """Log sink plus optional EMAIL and SMS transports.

    `log` is a path or an open text stream.  Events whose transport is missing
    are written to the log with ``downgraded=1`` instead.
    """

    log: Union[str, os.PathLike, TextIO]
    email: object = None
    sms: object = None
    failures: int = 0
    _stream: Optional[TextIO] = field(default=None, repr=False)
    _owned: bool = field(default=False, repr=False)

    def __post_init__(self):
        if hasattr(self.log, "write"):
            self._stream = self.log
        else:
            path = Path(self.log)
            fresh = not path.exists() or path.stat().st_size == 0
            self._stream = open(path, "a")
            self._owned = True
            if fresh:
                self._stream.write(LOG_HEADER + "\n")

    def transport(self, action: ActionLevel):
        return {ActionLevel.EMAIL: self.email, ActionLevel.SMS: self.sms}.get(action)

    def close(self) -> None:
        for s in (self.email, self.sms):
            if isinstance(s, AsyncSink):
                s.close()
        if self._owned:
            self._stream.close()
        else:
            self._stream.flush()


def dispatch(event: AlertEvent, sinks: Sinks) -> DeliveryRecord:
    transport = sinks.transport(event.action)
    needs_external = event.action >= ActionLevel.EMAIL
    downgraded = needs_external and transport is None
    line = format_log_line(event, downgraded)
    rec = DeliveryRecord(event, line, downgraded)
    try:
        sinks._stream.write(line + "\n")
    except OSError as exc:
        sinks.failures += 1
        rec.error = f"log sink: {exc}"
        log.error("could not write alert log: %s", exc)
    if needs_external and transport is not None:
        rec.external = repr(transport)
        try:
            transport.send(event)
        except Exception as exc:  # recorded, never raised into detection
            sinks.failures += 1
            rec.error = str(exc)
            log.error("alert delivery via %r failed: %s", transport, exc)
    return rec
