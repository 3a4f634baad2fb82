"""Line-oriented event log written by the engine and read back by the metrics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .resources import ResourceVector

SUBMIT = "SUBMIT"
CONTAINER_START = "CONTAINER_START"
CONTAINER_END = "CONTAINER_END"
APP_RUNNING = "APP_RUNNING"
APP_COMPLETE = "APP_COMPLETE"
APP_FAIL = "APP_FAIL"
BATCH_ARRIVE = "BATCH_ARRIVE"
BATCH_START = "BATCH_START"
BATCH_FINISH = "BATCH_FINISH"
RUN_END = "RUN_END"

KINDS = (
    SUBMIT, CONTAINER_START, CONTAINER_END, APP_RUNNING, APP_COMPLETE,
    APP_FAIL, BATCH_ARRIVE, BATCH_START, BATCH_FINISH, RUN_END,
)

FIELDS = ("time", "kind", "app", "container", "node", "queue", "delta", "detail")
HEADER = "#" + "\t".join(FIELDS)


@dataclass(frozen=True)
class LogRecord:
    time: float
    kind: str
    app: str = ""
    container: int | None = None
    node: int | None = None
    queue: str = ""
    # signed change in allocated resources: +1 on start, -1 on release
    sign: int = 0
    delta: ResourceVector | None = None
    detail: str = ""

    def to_line(self) -> str:
        def opt(v):
            return "-" if v is None or v == "" else str(v)

        if self.delta is None:
            delta = "-"
        else:
            delta = f"{'+' if self.sign >= 0 else '-'}{self.delta.vcores}:{self.delta.memory_mb}"
        return "\t".join(
            (repr(float(self.time)), self.kind, opt(self.app), opt(self.container),
             opt(self.node), opt(self.queue), delta, opt(self.detail))
        )

    @classmethod
    def from_line(cls, line: str) -> LogRecord:
        cols = line.rstrip("\n").split("\t")
        if len(cols) != len(FIELDS):
            raise ValueError(f"malformed log line: {line!r}")
        t, kind, app, cont, node, queue, delta, detail = cols
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")

        def opt(v):
            return "" if v == "-" else v

        sign, vec = 0, None
        if delta != "-":
            sign = 1 if delta[0] == "+" else -1
            v, m = delta[1:].split(":")
            vec = ResourceVector(int(v), int(m))
        return cls(
            time=float(t), kind=kind, app=opt(app),
            container=None if cont == "-" else int(cont),
            node=None if node == "-" else int(node),
            queue=opt(queue), sign=sign, delta=vec, detail=opt(detail),
        )


class EventLog(list):
    """Ordered list of :class:`LogRecord` with a stable text form."""

    def to_text(self) -> str:
        return "\n".join([HEADER, *(r.to_line() for r in self)]) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> EventLog:
        return cls(LogRecord.from_line(ln) for ln in text.splitlines() if ln and not ln.startswith("#"))

    @classmethod
    def load(cls, path: str | Path) -> EventLog:
        return cls.from_text(Path(path).read_text())
