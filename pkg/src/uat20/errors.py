"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class UAT20Error(Exception):
    code = "error"

    def __init__(self, detail: str = "") -> None:
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


class InvalidValue(UAT20Error, ValueError):
    code = "invalid_value"


class CommitDesync(UAT20Error):
    """A commit would drive a balance negative. Always a protocol bug."""

    code = "commit_desync"


class CoordinatorError(UAT20Error):
    def __init__(self, code: str, detail: str = "") -> None:
        self.code = code
        super().__init__(detail)


class EpochGap(UAT20Error):
    code = "epoch_gap"


class EpochMismatch(UAT20Error):
    code = "epoch_mismatch"


class InvariantViolation(UAT20Error):
    code = "invariant_violation"

    def __init__(self, name: str, epoch: int, diff: str = "") -> None:
        self.name = name
        self.epoch = epoch
        self.diff = diff
        UAT20Error.__init__(self, f"{name} at epoch {epoch}" + (f"\n{diff}" if diff else ""))


class ParseError(UAT20Error):
    code = "parse_error"

    def __init__(self, lineno: int, message: str) -> None:
        self.lineno = lineno
        self.message = message
        UAT20Error.__init__(self, f"line {lineno}: {message}")


class UnsortedLog(ParseError):
    code = "unsorted_log"
