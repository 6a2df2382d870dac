"""Corpus loading and code extraction.

A corpus is one JSON record per line with fields ``prompt_id`` (str),
``sample_id`` (int), ``text`` (str) and/or ``source`` (str), and ``correct``
(bool). ``text`` is a raw model completion from which executable code is
extracted; a record carrying ``source`` is treated as pre-extracted and
skips extraction. Records group by prompt into SampleGroup, the unit every
downstream metric operates on.
"""

import ast
import json
import statistics
from dataclasses import dataclass, field

from .similarity import lex_tokens


class CorpusError(ValueError):
    """Raised for malformed corpus input; message carries the line number."""


@dataclass(frozen=True)
class RawCompletion:
    prompt_id: str
    sample_id: int
    text: str
    correct: bool


@dataclass(frozen=True)
class Sample:
    sample_id: int
    text: str  # raw completion
    source: str | None  # extracted code; None when no fenced block exists
    correct: bool


@dataclass
class SampleGroup:
    """All generations for one prompt, ordered by sample_id."""

    prompt_id: str
    samples: list

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def m(self) -> int:
        return sum(1 for s in self.samples if s.correct)

    def sources(self):
        """Extracted source per sample; missing extractions map to ''."""
        return [s.source if s.source is not None else "" for s in self.samples]

    def correct_flags(self):
        return [s.correct for s in self.samples]


@dataclass
class Corpus:
    groups: dict = field(default_factory=dict)  # prompt_id -> SampleGroup

    def prompt_ids(self):
        return sorted(self.groups)

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        for pid in self.prompt_ids():
            yield self.groups[pid]

    def __getitem__(self, prompt_id):
        return self.groups[prompt_id]

    def to_jsonl_lines(self):
        for group in self:
            for s in group.samples:
                record = {
                    "prompt_id": group.prompt_id,
                    "sample_id": s.sample_id,
                    "text": s.text,
                    "correct": s.correct,
                }
                if s.source is not None:
                    record["source"] = s.source
                yield json.dumps(record, sort_keys=True)


def parse_corpus(lines) -> Corpus:
    """Parse line-delimited records into a Corpus.

    Raises CorpusError naming the offending line for malformed JSON, missing
    or mistyped fields, and duplicate (prompt_id, sample_id) keys.
    """
    groups: dict = {}
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise CorpusError(f"line {lineno}: invalid JSON record: {err}") from err
        if not isinstance(record, dict):
            raise CorpusError(f"line {lineno}: record must be an object")

        prompt_id = record.get("prompt_id")
        if not isinstance(prompt_id, str):
            raise CorpusError(f"line {lineno}: missing or non-string field 'prompt_id'")
        sample_id = record.get("sample_id")
        if isinstance(sample_id, bool) or not isinstance(sample_id, int) or sample_id < 0:
            raise CorpusError(f"line {lineno}: missing or invalid field 'sample_id'")
        if "correct" not in record:
            raise CorpusError(f"line {lineno}: missing field 'correct'")
        correct = record["correct"]
        if not isinstance(correct, bool):
            raise CorpusError(f"line {lineno}: field 'correct' must be a boolean")

        text = record.get("text")
        source = record.get("source")
        if source is not None and not isinstance(source, str):
            raise CorpusError(f"line {lineno}: field 'source' must be a string")
        if text is not None and not isinstance(text, str):
            raise CorpusError(f"line {lineno}: field 'text' must be a string")
        if text is None and source is None:
            raise CorpusError(f"line {lineno}: record needs 'text' or 'source'")

        key = (prompt_id, sample_id)
        if key in seen:
            raise CorpusError(
                f"line {lineno}: duplicate sample (prompt_id={prompt_id!r}, sample_id={sample_id})"
            )
        seen.add(key)

        if source is None:
            source = extract_code(text)
        if text is None:
            text = source
        sample = Sample(sample_id=sample_id, text=text, source=source, correct=correct)
        groups.setdefault(prompt_id, []).append(sample)

    assembled = {
        pid: SampleGroup(prompt_id=pid, samples=sorted(samples, key=lambda s: s.sample_id))
        for pid, samples in groups.items()
    }
    return Corpus(groups=assembled)


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def extract_code(text: str):
    """Contents of the last python-tagged or untagged fenced block.

    Returns None when the completion contains no fenced block. A fence left
    open at end of text counts as a block running to the end (truncated
    generations). Fence lines themselves are excluded.
    """
    lines = text.split("\n")
    blocks = []
    open_tag = None
    block_start = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped.startswith("```"):
            continue
        if open_tag is None:
            open_tag = stripped[3:].strip().lower()
            block_start = i + 1
        else:
            blocks.append((open_tag, lines[block_start:i]))
            open_tag = None
    if open_tag is not None:
        blocks.append((open_tag, lines[block_start:]))

    for tag, body in reversed(blocks):
        if tag in ("", "python"):
            if not body:
                return ""
            return "\n".join(body) + ("\n" if body[-1] != "" else "")
    return None


def _strip_comments(source: str):
    """Remove '#' comments outside string literals.

    Returns (lines_without_newlines, removed_any). Lines reduced to nothing
    by comment removal are dropped; untouched lines stay byte-identical.
    """
    out = []
    removed = False
    quote = None  # active string delimiter, e.g. "'" or '"""'
    for line in source.split("\n"):
        i = 0
        cut = None
        while i < len(line):
            ch = line[i]
            if quote is not None:
                if ch == "\\":
                    i += 2  # escaped char never terminates the string
                    continue
                if line.startswith(quote, i):
                    i += len(quote)
                    quote = None
                    continue
                i += 1
                continue
            if ch in "'\"":
                triple = ch * 3
                if line.startswith(triple, i):
                    quote = triple
                    i += 3
                else:
                    quote = ch
                    i += 1
                continue
            if ch == "#":
                cut = i
                break
            i += 1
        if quote is not None and len(quote) == 1 and i <= len(line):
            # Unterminated single-quote string without a trailing backslash
            # continuation (i overshoots by one when a backslash ate the
            # newline): close it so later lines scan sanely.
            quote = None
        if cut is None:
            out.append(line)
        else:
            removed = True
            kept = line[:cut].rstrip(" \t")
            if kept:
                out.append(kept)
            # comment-only lines collapse away entirely
    return out, removed


def _docstring_spans(source: str):
    """(lineno, col, end_lineno, end_col) of leading string statements.

    Covers the maximal leading run of bare string-literal statements in
    every module, function, and class body; taking the whole run (not just
    the first statement) is what makes stripping idempotent.
    """
    tree = ast.parse(source)
    spans = []
    for node in ast.walk(tree):
        if not isinstance(node, (ast.Module, ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            continue
        for stmt in node.body:
            if (
                isinstance(stmt, ast.Expr)
                and isinstance(stmt.value, ast.Constant)
                and isinstance(stmt.value.value, str)
            ):
                spans.append((stmt.lineno, stmt.col_offset, stmt.end_lineno, stmt.end_col_offset))
            else:
                break
    return spans


def strip_comments_docstrings(source: str) -> str:
    """Remove comments and docstring-position string statements.

    Comment stripping never fails; docstring removal needs a parse and is
    skipped for unparseable source. All surviving code is byte-identical;
    lines emptied by a removal are dropped.
    """
    lines, _ = _strip_comments(source)
    stripped = "\n".join(lines)
    try:
        spans = _docstring_spans(stripped)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return stripped
    for lineno, col, end_lineno, end_col in sorted(spans, reverse=True):
        first, last = lineno - 1, end_lineno - 1
        merged = lines[first][:col] + lines[last][end_col:]
        if merged.strip():
            lines[first:last + 1] = [merged]
        else:
            lines[first:last + 1] = []
    return "\n".join(lines)


@dataclass(frozen=True)
class LengthSummary:
    count: int
    mean: float
    median: float
    p90: float
    max: int

    @classmethod
    def of(cls, values):
        values = sorted(values)
        if not values:
            return cls(count=0, mean=0.0, median=0.0, p90=0.0, max=0)
        n = len(values)
        # p90 by linear interpolation between order statistics.
        pos = 0.9 * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        p90 = values[lo] + (pos - lo) * (values[hi] - values[lo])
        return cls(
            count=n,
            mean=sum(values) / n,
            median=float(statistics.median(values)),
            p90=float(p90),
            max=values[-1],
        )


@dataclass(frozen=True)
class LengthGroup:
    raw_chars: LengthSummary
    code_chars: LengthSummary
    raw_tokens: LengthSummary
    code_tokens: LengthSummary


@dataclass(frozen=True)
class LengthReport:
    per_group: dict  # prompt_id -> LengthGroup
    corpus: LengthGroup


def _length_group(samples) -> LengthGroup:
    raw = [s.text for s in samples]
    code = [s.source if s.source is not None else "" for s in samples]
    return LengthGroup(
        raw_chars=LengthSummary.of([len(t) for t in raw]),
        code_chars=LengthSummary.of([len(t) for t in code]),
        raw_tokens=LengthSummary.of([len(lex_tokens(t)) for t in raw]),
        code_tokens=LengthSummary.of([len(lex_tokens(t)) for t in code]),
    )


def length_stats(corpus: Corpus) -> LengthReport:
    """Raw-completion and extracted-code length summaries, per group and overall."""
    per_group = {}
    all_samples = []
    for group in corpus:
        per_group[group.prompt_id] = _length_group(group.samples)
        all_samples.extend(group.samples)
    return LengthReport(per_group=per_group, corpus=_length_group(all_samples))
