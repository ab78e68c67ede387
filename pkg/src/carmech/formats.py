"""Line-oriented text documents and their JSON mirror.

Text grammar, one statement per line, ``#`` starts a comment::

    space n=3
    set {1,2} p 1/2              # CAR mechanism entry
    given 2 set {2,3} p 1/2      # conditional (general coarsening) entry
    height k=2                   # multicover height
    set {1,2} mult 1             # multicover entry
    cover w 1/2                  # starts one weighted multicover of a model

A document holds exactly one kind of content.  Probabilities are fractions
``p/q`` (or integers); decimals are accepted only when explicitly allowed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Union

from .core import CarMechanism, CoarseningMechanism, MechanismError, SampleSpace, Subset
from .multicover import UniformMulticover
from .simulate import ProceduralModel
from .verify import expand


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


_FRACTION = r"-?\d+(?:/\d+)?"
_DECIMAL = r"-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?"
_SET = r"\{\s*(\d+(?:\s*,\s*\d+)*)?\s*\}"

_STATEMENTS = {
    "space": re.compile(r"space\s+n\s*=\s*(\d+)$"),
    "height": re.compile(r"height\s+k\s*=\s*(\d+)$"),
    "cover": re.compile(rf"cover\s+w\s+({_FRACTION})$"),
    "given": re.compile(rf"given\s+(\d+)\s+set\s+{_SET}\s+p\s+(\S+)$"),
    "set_p": re.compile(rf"set\s+{_SET}\s+p\s+(\S+)$"),
    "set_mult": re.compile(rf"set\s+{_SET}\s+mult\s+(\d+)$"),
}


@dataclass
class Block:
    weight: Fraction = Fraction(1)
    height: Optional[int] = None
    counts: dict = field(default_factory=dict)


@dataclass
class Document:
    space: SampleSpace
    kind: str  # "car", "conditional", "multicover" or "model"
    probs: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)

    def car(self) -> CarMechanism:
        if self.kind != "car":
            raise ParseError(f"expected a CAR mechanism document, got {self.kind}")
        return CarMechanism(self.space, self.probs)

    def conditional(self) -> CoarseningMechanism:
        if self.kind == "car":
            return expand(self.car())
        if self.kind != "conditional":
            raise ParseError(f"expected a mechanism document, got {self.kind}")
        return CoarseningMechanism(self.space, self.table)

    def multicover(self) -> UniformMulticover:
        if self.kind != "multicover" or len(self.blocks) != 1:
            raise ParseError(f"expected a multicover document, got {self.kind}")
        block = self.blocks[0]
        return UniformMulticover(self.space, block.counts, block.height)

    def model(self) -> ProceduralModel:
        if self.kind not in ("multicover", "model"):
            raise ParseError(f"expected a multicover or model document, got {self.kind}")
        covers = tuple(UniformMulticover(self.space, b.counts, b.height) for b in self.blocks)
        return ProceduralModel(covers, tuple(b.weight for b in self.blocks))


def _number(token: str, allow_decimal: bool, line: int, column: int) -> Union[Fraction, float]:
    if re.fullmatch(_FRACTION, token):
        try:
            return Fraction(token)
        except ZeroDivisionError:
            raise ParseError("zero denominator", line, column) from None
    if allow_decimal and re.fullmatch(_DECIMAL, token):
        return float(token)
    raise ParseError(f"expected a fraction p/q, got {token!r}", line, column)


def _subset(text: Optional[str], n: int, line: int, column: int) -> Subset:
    if not text:
        raise ParseError("empty set", line, column)
    elements = [int(v) for v in text.split(",")]
    if len(set(elements)) != len(elements):
        raise ParseError("repeated element in set", line, column)
    try:
        return Subset.of(elements, n)
    except MechanismError as exc:
        raise ParseError(str(exc), line, column) from None


def parse_text(text: str, allow_decimal: bool = False) -> Document:
    space: Optional[SampleSpace] = None
    kinds = set()
    doc_probs: dict = {}
    doc_table: dict = {}
    blocks: list[Block] = []

    def current_block() -> Block:
        if not blocks:
            blocks.append(Block())
        return blocks[-1]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        stripped = content.lstrip()
        if not stripped:
            continue
        col = len(content) - len(stripped) + 1
        match = None
        for name, pattern in _STATEMENTS.items():
            match = pattern.match(stripped)
            if match:
                break
        if not match:
            raise ParseError(f"unrecognised statement {stripped!r}", lineno, col)
        if name == "space":
            if space is not None:
                raise ParseError("duplicate space header", lineno, col)
            try:
                space = SampleSpace(int(match.group(1)))
            except MechanismError as exc:
                raise ParseError(str(exc), lineno, col + match.start(1)) from None
            continue
        if space is None:
            raise ParseError("missing 'space n=<int>' header before content", lineno, col)
        set_col = col + stripped.find("{")
        value_col = col + match.start(match.lastindex)
        if name == "height":
            block = current_block()
            if block.height is not None:
                raise ParseError("duplicate height for this multicover", lineno, col)
            block.height = int(match.group(1))
            kinds.add("multicover")
        elif name == "cover":
            weight = _number(match.group(1), False, lineno, value_col)
            if blocks and not blocks[-1].counts and blocks[-1].height is None:
                blocks[-1].weight = weight
            else:
                blocks.append(Block(weight))
            kinds.add("model")
        elif name == "given":
            x = int(match.group(1))
            a = _subset(match.group(2), space.n, lineno, set_col)
            if (x, a) in doc_table:
                raise ParseError(f"duplicate entry for element {x}, set {a}", lineno, col)
            doc_table[(x, a)] = _number(match.group(3), False, lineno, value_col)
            kinds.add("conditional")
        elif name == "set_p":
            a = _subset(match.group(1), space.n, lineno, set_col)
            if a in doc_probs:
                raise ParseError(f"duplicate entry for set {a}", lineno, col)
            doc_probs[a] = _number(match.group(2), allow_decimal, lineno, value_col)
            kinds.add("car")
        else:
            a = _subset(match.group(1), space.n, lineno, set_col)
            block = current_block()
            if a in block.counts:
                raise ParseError(f"duplicate entry for set {a}", lineno, col)
            block.counts[a] = int(match.group(2))
            kinds.add("multicover")
    if space is None:
        raise ParseError("missing 'space n=<int>' header")
    if "model" in kinds:
        kinds.discard("multicover")
        kinds.discard("model")
        kinds.add("model")
    if len(kinds) > 1:
        raise ParseError(f"document mixes statement kinds: {', '.join(sorted(kinds))}")
    kind = kinds.pop() if kinds else "car"
    for block in blocks:
        if block.height is None and kind in ("multicover", "model"):
            raise ParseError("multicover is missing its 'height k=<int>' line")
    return Document(space, kind, doc_probs, doc_table, blocks)


def _frac_str(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}" if p.denominator != 1 else str(p.numerator)


def format_fraction(p: Fraction) -> str:
    return _frac_str(Fraction(p))


def render(obj) -> str:
    """Text document for a mechanism, multicover or model."""
    if isinstance(obj, CarMechanism):
        lines = [f"space n={obj.space.n}"]
        lines += [f"set {a} p {_frac_str(p)}" for a, p in obj.probs.items()]
    elif isinstance(obj, CoarseningMechanism):
        lines = [f"space n={obj.space.n}"]
        lines += [f"given {x} set {a} p {_frac_str(p)}" for (x, a), p in obj.table.items()]
    elif isinstance(obj, UniformMulticover):
        lines = [f"space n={obj.space.n}", f"height k={obj.height}"]
        lines += [f"set {a} mult {c}" for a, c in obj.multiplicities.items()]
    elif isinstance(obj, ProceduralModel):
        lines = [f"space n={obj.space.n}"]
        for w, mc in zip(obj.weights, obj.multicovers):
            lines += [f"cover w {_frac_str(w)}", f"height k={mc.height}"]
            lines += [f"set {a} mult {c}" for a, c in mc.multiplicities.items()]
    else:
        raise TypeError(f"cannot render {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def frac_json(p: Fraction) -> dict:
    p = Fraction(p)
    return {"num": p.numerator, "den": p.denominator}


def _frac_from_json(value: Any) -> Fraction:
    try:
        return Fraction(int(value["num"]), int(value["den"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError):
        raise ParseError(f"bad fraction {value!r}; expected {{'num': int, 'den': int}}") from None


def subset_json(a: Subset) -> list[int]:
    return list(a.elements)


def to_json(obj) -> dict:
    if isinstance(obj, CarMechanism):
        return {"type": "car", "n": obj.space.n,
                "probs": [{"set": subset_json(a), "p": frac_json(p)} for a, p in obj.probs.items()]}
    if isinstance(obj, CoarseningMechanism):
        return {"type": "conditional", "n": obj.space.n,
                "table": [{"given": x, "set": subset_json(a), "p": frac_json(p)}
                          for (x, a), p in obj.table.items()]}
    if isinstance(obj, UniformMulticover):
        return {"type": "multicover", "n": obj.space.n, "height": obj.height,
                "sets": [{"set": subset_json(a), "mult": c} for a, c in obj.multiplicities.items()]}
    if isinstance(obj, ProceduralModel):
        return {"type": "model", "n": obj.space.n,
                "covers": [{"weight": frac_json(w), **{k: v for k, v in to_json(mc).items()
                                                        if k in ("height", "sets")}}
                           for w, mc in zip(obj.weights, obj.multicovers)]}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_json(data: dict):
    try:
        kind = data["type"]
        space = SampleSpace(int(data["n"]))
        n = space.n
        if kind == "car":
            return CarMechanism(space, {Subset.of(e["set"], n): _frac_from_json(e["p"]) for e in data["probs"]})
        if kind == "conditional":
            return CoarseningMechanism(space, {(int(e["given"]), Subset.of(e["set"], n)): _frac_from_json(e["p"])
                                               for e in data["table"]})
        if kind == "multicover":
            return UniformMulticover(space, {Subset.of(e["set"], n): int(e["mult"]) for e in data["sets"]},
                                     int(data["height"]))
        if kind == "model":
            covers, weights = [], []
            for c in data["covers"]:
                covers.append(UniformMulticover(space, {Subset.of(e["set"], n): int(e["mult"]) for e in c["sets"]},
                                                int(c["height"])))
                weights.append(_frac_from_json(c["weight"]))
            return ProceduralModel(tuple(covers), tuple(weights))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed JSON document: missing or bad field {exc}") from None
    raise ParseError(f"unknown JSON document type {data.get('type')!r}")


def document_from_object(obj) -> Document:
    if isinstance(obj, CarMechanism):
        return Document(obj.space, "car", probs=dict(obj.probs))
    if isinstance(obj, CoarseningMechanism):
        return Document(obj.space, "conditional", table=dict(obj.table))
    if isinstance(obj, UniformMulticover):
        return Document(obj.space, "multicover", blocks=[Block(Fraction(1), obj.height, dict(obj.multiplicities))])
    if isinstance(obj, ProceduralModel):
        return Document(obj.space, "model", blocks=[Block(w, mc.height, dict(mc.multiplicities))
                                                    for w, mc in zip(obj.weights, obj.multicovers)])
    raise TypeError(type(obj).__name__)


def load_document(text: str, allow_decimal: bool = False) -> Document:
    """Parse a text document, or a JSON document when the text starts with ``{``."""
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
        return document_from_object(from_json(data))
    return parse_text(text, allow_decimal)
