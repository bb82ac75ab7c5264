"""Source locations used by every layer of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourceSpan:
    """A region of one source file. Lines are 1-based, columns 0-based."""

    file_path: str
    line_start: int
    line_end: int
    col_start: int = 0
    col_end: int = 0

    def __post_init__(self) -> None:
        if not self.file_path:
            raise ValueError("file_path must be non-empty")
        parts = self.file_path.replace("\\", "/").split("/")
        if ".." in parts:
            raise ValueError(f"file_path escapes the repository: {self.file_path!r}")
        if self.line_start > self.line_end:
            raise ValueError(f"line_start > line_end in {self}")
        if self.line_start == self.line_end and self.col_start > self.col_end:
            raise ValueError(f"col_start > col_end on single-line span {self}")

    def contains_line(self, line: int) -> bool:
        return self.line_start <= line <= self.line_end

    def contains(self, other: "SourceSpan") -> bool:
        return (
            self.file_path == other.file_path
            and self.line_start <= other.line_start
            and other.line_end <= self.line_end
        )

    def line_count(self) -> int:
        return self.line_end - self.line_start + 1

    def sort_key(self) -> tuple[int, int]:
        return (self.line_start, self.col_start)


def line_span(file_path: str, line_start: int, line_end: int) -> SourceSpan:
    """A whole-line span with column information dropped."""
    return SourceSpan(file_path, line_start, line_end, 0, 0)
