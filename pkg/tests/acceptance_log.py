"""Collects acceptance outcomes so the terminal summary can list them."""

RESULTS: dict[int, tuple[str, str]] = {}
