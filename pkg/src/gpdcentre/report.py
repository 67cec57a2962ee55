"""Structured pass/fail reports shared by the check functions and the CLI."""

import json

SCHEMA = "gpdcentre/1"


def _plain(value):
    """Coerce a witness to JSON-friendly plain data."""
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    return repr(value)


class Report:
    """Ordered list of named checks, each pass/fail/skipped.

    A witness is recorded only for failing checks.
    """

    def __init__(self, command=""):
        self.command = command
        self.entries = []

    def add(self, check_id, ok, witness=None):
        entry = {"check_id": str(check_id), "status": "pass" if ok else "fail"}
        if not ok:
            entry["witness"] = _plain(witness)
        self.entries.append(entry)
        return ok

    def skip(self, check_id):
        self.entries.append({"check_id": str(check_id), "status": "skipped"})

    def extend(self, other, prefix=""):
        for entry in other.entries:
            copy = dict(entry)
            if prefix:
                copy["check_id"] = prefix + copy["check_id"]
            self.entries.append(copy)

    @property
    def passed(self):
        return all(e["status"] != "fail" for e in self.entries)

    def counts(self):
        out = {"pass": 0, "fail": 0, "skipped": 0}
        for e in self.entries:
            out[e["status"]] += 1
        return out

    def failures(self):
        return [e for e in self.entries if e["status"] == "fail"]

    def to_json_dict(self):
        return {
            "schema": SCHEMA,
            "command": self.command,
            "checks": self.entries,
            "summary": self.counts(),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_text(self):
        lines = []
        if self.command:
            lines.append("# " + self.command)
        width = max((len(e["check_id"]) for e in self.entries), default=0)
        for e in self.entries:
            mark = {"pass": "PASS", "fail": "FAIL", "skipped": "SKIP"}[e["status"]]
            line = "%s  %-*s" % (mark, width, e["check_id"])
            if e["status"] == "fail":
                line += "  witness=%s" % json.dumps(e["witness"], sort_keys=True)
            lines.append(line.rstrip())
        c = self.counts()
        lines.append("summary: %d pass, %d fail, %d skipped" % (c["pass"], c["fail"], c["skipped"]))
        return "\n".join(lines)

    def __repr__(self):
        c = self.counts()
        return "Report(pass=%d, fail=%d, skipped=%d)" % (c["pass"], c["fail"], c["skipped"])
