"""Structured pass/fail reports emitted by every checker."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

ENGINE_VERSION = "0.1.0"


@dataclass
class VerificationReport:
    """Outcome of one identity check.

    ``residuals`` holds (label, rendered value) pairs; the verdict is
    "pass" exactly when every residual is the zero polynomial or zero
    operator.  ``values`` keeps the raw residual objects for callers that
    want to inspect them.
    """

    check: str
    inputs: dict[str, str]
    residuals: list[tuple[str, str]]
    verdict: str
    wall_time_ms: float
    engine_version: str = ENGINE_VERSION
    details: dict[str, str] = field(default_factory=dict)
    values: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def make_report(
    check: str,
    inputs: dict[str, str],
    residual_items: list[tuple[str, object]],
    started: float,
    details: dict[str, str] | None = None,
) -> VerificationReport:
    """Render residual objects and derive the verdict from their vanishing."""
    rendered = [(label, str(value)) for label, value in residual_items]
    ok = all(value.is_zero() for _, value in residual_items)
    return VerificationReport(
        check=check,
        inputs=inputs,
        residuals=rendered,
        verdict="pass" if ok else "fail",
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        details=dict(details or {}),
        values=[value for _, value in residual_items],
    )
