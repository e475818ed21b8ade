"""Textual affine loop-nest IR: types, parser, printer.

Grammar (line oriented, indentation insensitive, ``#`` comments):

    nest      := for_line+ stmt_line
    for_line  := "for" NAME "=" INT "to" INT ["step" INT]
    stmt_line := "stmt" ref "+=" ref "*" ref
    ref       := NAME ("[" expr "]")+
    expr      := term ("+" term)*            (at most 2 iterator terms
    term      := [INT "*"] NAME | INT         plus one optional constant)

Loop bounds are inclusive on both ends; the trip count of
``for i = lo to hi step s`` is ``(hi - lo) // s + 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Loop:
    iterator: str
    lower: int
    upper: int
    step: int = 1

    def __post_init__(self):
        if self.step < 1:
            raise ValueError(f"loop {self.iterator}: step must be >= 1")
        if self.upper < self.lower:
            raise ValueError(f"loop {self.iterator}: empty range {self.lower}..{self.upper}")

    @property
    def trip_count(self) -> int:
        return (self.upper - self.lower) // self.step + 1


@dataclass(frozen=True)
class IndexExpr:
    """Affine subscript: ((coeff, iterator), ...) plus an integer constant."""

    terms: tuple[tuple[int, str], ...]
    constant: int = 0

    def __post_init__(self):
        if len(self.terms) > 2:
            raise ValueError("at most 2 iterator terms per subscript")
        names = [n for _, n in self.terms]
        if len(set(names)) != len(names):
            raise ValueError("subscript references an iterator twice")

    def iterators(self) -> tuple[str, ...]:
        return tuple(n for _, n in self.terms)


@dataclass(frozen=True)
class ArrayRef:
    name: str
    indices: tuple[IndexExpr, ...]

    def iterators(self) -> frozenset[str]:
        return frozenset(it for idx in self.indices for it in idx.iterators())


@dataclass(frozen=True)
class Statement:
    """``target += operand_a * operand_b`` at the innermost nesting depth."""

    target: ArrayRef
    operand_a: ArrayRef
    operand_b: ArrayRef

    @property
    def refs(self) -> tuple[ArrayRef, ArrayRef, ArrayRef]:
        return (self.target, self.operand_a, self.operand_b)


@dataclass(frozen=True)
class LoopNestIR:
    loops: tuple[Loop, ...]
    statement: Statement

    def __post_init__(self):
        names = [l.iterator for l in self.loops]
        if len(set(names)) != len(names):
            raise ValueError("duplicate iterator name")
        referenced = frozenset().union(*(r.iterators() for r in self.statement.refs))
        for name in names:
            if name not in referenced:
                raise ValueError(f"iterator {name} not referenced by any array ref")
        for ref in self.statement.refs:
            for idx in ref.indices:
                for _, it in idx.terms:
                    if it not in names:
                        raise ValueError(f"subscript references unknown iterator {it}")

    @property
    def iterators(self) -> tuple[str, ...]:
        return tuple(l.iterator for l in self.loops)

    def trip_counts(self) -> dict[str, int]:
        return {l.iterator: l.trip_count for l in self.loops}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_NAME = r"[A-Za-z_][A-Za-z_0-9]*"
_FOR_RE = re.compile(
    rf"for\s+({_NAME})\s*=\s*(-?\d+)\s+to\s+(-?\d+)(?:\s+step\s+(\d+))?\s*$"
)
_REF_RE = re.compile(rf"({_NAME})((?:\[[^\]]*\])+)\s*$")


def _parse_index(text: str, line: int) -> IndexExpr:
    terms: list[tuple[int, str]] = []
    constant = 0
    for part in text.split("+"):
        part = part.strip()
        if not part:
            raise ParseError("empty subscript term", line)
        if "*" in part:
            coeff_s, _, name = part.partition("*")
            coeff_s, name = coeff_s.strip(), name.strip()
            if not coeff_s.isdigit() or not re.fullmatch(_NAME, name):
                raise ParseError(f"malformed subscript term {part!r}", line)
            terms.append((int(coeff_s), name))
        elif re.fullmatch(_NAME, part):
            terms.append((1, part))
        elif re.fullmatch(r"-?\d+", part):
            constant += int(part)
        else:
            raise ParseError(f"malformed subscript term {part!r}", line)
    try:
        return IndexExpr(tuple(terms), constant)
    except ValueError as e:
        raise ParseError(str(e), line) from None


def _parse_ref(text: str, line: int) -> ArrayRef:
    m = _REF_RE.match(text.strip())
    if not m:
        raise ParseError(f"malformed array reference {text.strip()!r}", line)
    name, subs = m.group(1), m.group(2)
    indices = tuple(
        _parse_index(s, line) for s in re.findall(r"\[([^\]]*)\]", subs)
    )
    return ArrayRef(name, indices)


def parse_loop_nest(text: str) -> LoopNestIR:
    """Parse .nest source into a LoopNestIR; raises ParseError with location."""
    loops: list[Loop] = []
    statement: Statement | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if statement is not None:
            raise ParseError("content after statement line", lineno)
        if line.startswith("for"):
            m = _FOR_RE.match(line)
            if not m:
                raise ParseError(f"malformed for line {line!r}", lineno)
            name, lo, hi, step = m.group(1), int(m.group(2)), int(m.group(3)), m.group(4)
            if any(l.iterator == name for l in loops):
                raise ParseError(f"duplicate iterator {name!r}", lineno)
            try:
                loops.append(Loop(name, lo, hi, int(step) if step else 1))
            except ValueError as e:
                raise ParseError(str(e), lineno) from None
        elif line.startswith("stmt"):
            body = line[len("stmt"):].strip()
            lhs, accum_op, rhs = body.partition("+=")
            if not accum_op:
                raise ParseError("statement must use '+='", lineno)
            # The operand split must not land inside a subscript like [2*x+r]:
            # scan for the '*' separating the two refs (outside brackets).
            depth, split = 0, -1
            for i, ch in enumerate(rhs):
                if ch == "[":
                    depth += 1
                elif ch == "]":
                    depth -= 1
                elif ch == "*" and depth == 0:
                    split = i
                    break
            if split < 0:
                raise ParseError("statement must multiply two operands", lineno)
            a_text, b_text = rhs[:split], rhs[split + 1:]
            statement = Statement(
                _parse_ref(lhs, lineno),
                _parse_ref(a_text, lineno),
                _parse_ref(b_text, lineno),
            )
        else:
            raise ParseError(f"expected 'for' or 'stmt', got {line!r}", lineno)
    if not loops:
        raise ParseError("no loops found", max(1, text.count("\n") + 1))
    if statement is None:
        raise ParseError("missing statement line", text.count("\n") + 1)
    try:
        return LoopNestIR(tuple(loops), statement)
    except ValueError as e:
        raise ParseError(str(e), text.count("\n") + 1) from None


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def _print_index(idx: IndexExpr) -> str:
    parts = [f"{c}*{n}" if c != 1 else n for c, n in idx.terms]
    if idx.constant:
        parts.append(str(idx.constant))
    return " + ".join(parts)


def _print_ref(ref: ArrayRef) -> str:
    return ref.name + "".join(f"[{_print_index(i)}]" for i in ref.indices)


def print_loop_nest(ir: LoopNestIR) -> str:
    lines = []
    for depth, loop in enumerate(ir.loops):
        pad = "  " * depth
        step = f" step {loop.step}" if loop.step != 1 else ""
        lines.append(f"{pad}for {loop.iterator} = {loop.lower} to {loop.upper}{step}")
    pad = "  " * len(ir.loops)
    s = ir.statement
    lines.append(
        f"{pad}stmt {_print_ref(s.target)} += {_print_ref(s.operand_a)} * {_print_ref(s.operand_b)}"
    )
    return "\n".join(lines) + "\n"
