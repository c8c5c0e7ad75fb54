"""Exception hierarchy.

The three top-level families map onto CLI exit codes: ``ConfigError`` (2),
``InputError`` (3) and ``EmptyResultError`` (4).
"""

from __future__ import annotations


class GridmapError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(GridmapError):
    """A taxonomy, profile or override configuration is invalid."""


class InputError(GridmapError):
    """An input file or record could not be parsed.

    ``file`` and ``row_index`` are filled in as the error travels up through
    the loader so the final message names the offending location.
    """

    def __init__(self, detail: str, *, file: str | None = None, row_index: int | None = None) -> None:
        super().__init__(detail)
        self.detail = detail
        self.file = file
        self.row_index = row_index

    def __str__(self) -> str:
        where = []
        if self.file is not None:
            where.append(str(self.file))
        if self.row_index is not None:
            where.append(f"row {self.row_index}")
        if not where:
            return self.detail
        return f"{', '.join(where)}: {self.detail}"


class EmptyResultError(GridmapError):
    """A computation had nothing to work on."""


# ingest


class MalformedHeader(InputError):
    pass


class RowArityMismatch(InputError):
    pass


class UnparsableValue(InputError):
    def __init__(self, raw: str, field: str, **kw) -> None:
        super().__init__(f"unparsable {field} value {raw!r}", **kw)
        self.raw = raw
        self.field = field


class InvalidDate(InputError):
    pass


class InvalidRecord(InputError):
    """A row violates an Event invariant (year bounds, alert criteria before 2015)."""


class DuplicateEventId(InputError):
    pass


# taxonomy


class UnknownTargetCategory(ConfigError):
    pass


class DuplicateCategoryName(ConfigError):
    pass


class EmptyRuleSet(ConfigError):
    pass


# mapping


class DistributionSumError(ConfigError):
    def __init__(self, axis: str, total: float, category: str | None = None) -> None:
        self.axis = axis
        self.total = total
        self.category = category
        who = f"category {category!r}, " if category is not None else ""
        super().__init__(f"{who}axis {axis!r}: weights sum to {total!r}, expected 1")


class MissingCategoryEntry(ConfigError):
    pass


class UnknownCategory(ConfigError):
    pass


# analytics


class EmptyDistribution(EmptyResultError):
    pass
