"""Input-validation helpers shared by the estimator-style localizers."""

from __future__ import annotations


class NotFittedError(ValueError):
    """Estimator used before fit() was called."""


class InputValidationError(ValueError):
    """Caller-supplied input violates an operation's precondition."""


def check_is_fitted(estimator, attributes: tuple[str, ...]) -> None:
    missing = [a for a in attributes if getattr(estimator, a, None) is None]
    if missing:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first "
            f"(missing: {', '.join(missing)})"
        )


def bug_text(bug) -> str:
    """Query text for a bug report: summary, newline, description."""
    return f"{bug.summary}\n{bug.description}"


def require_bug_text(bug) -> str:
    text = bug_text(bug)
    if not text.strip():
        raise InputValidationError(
            f"bug report {getattr(bug, 'bug_id', '?')} has neither summary nor description"
        )
    return text
