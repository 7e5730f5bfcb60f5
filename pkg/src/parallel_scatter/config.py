"""Line-oriented text format for networks and sweeps.

One statement per line; indentation is ignored and ``#`` starts a comment.
``series`` and ``parallel`` open a block closed by ``end``. See
``docs/config_format.md`` for the grammar.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .elements import Custom, DeltaBarrier, DirectionalPhaseSegment, FreeSegment
from .errors import ScatterError
from .junctions import JunctionSpec, check_junction, symmetric_junction
from .network import Leaf, NetworkNode, Parallel, Series
from .numerics import Tolerances

LEAF_KEYWORDS = ("free", "phase", "delta", "matrix")
BLOCK_KEYWORDS = ("series", "parallel")
NODE_KEYWORDS = LEAF_KEYWORDS + BLOCK_KEYWORDS
TOP_KEYWORDS = ("sweep", "options") + NODE_KEYWORDS


class ConfigError(ScatterError, ValueError):
    def __init__(self, line: int, column: int, message: str, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.message = message
        self.expected = tuple(expected)
        super().__init__(str(self))

    def __str__(self) -> str:
        text = f"line {self.line}, column {self.column}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


@dataclass(frozen=True)
class Sweep:
    k_min: float
    k_max: float
    n_points: int


@dataclass(frozen=True)
class Options:
    reference_k: int | None = None
    oracle_check: bool = False
    resonance_threshold: float = 0.99
    tolerances: Tolerances = field(default_factory=Tolerances)


@dataclass(frozen=True)
class NetworkConfig:
    network: NetworkNode
    sweep: Sweep
    options: Options = field(default_factory=Options)

    def resolved_network(self) -> NetworkNode:
        """Network with the global reference-branch override applied."""
        if self.options.reference_k is None:
            return self.network
        return _override_reference(self.network, self.options.reference_k)


def _override_reference(node: NetworkNode, ref: int) -> NetworkNode:
    if isinstance(node, Leaf):
        return node
    children = tuple(_override_reference(c, ref) for c in node.children)
    if isinstance(node, Series):
        return Series(children)
    return Parallel(children, node.splitter, node.merger, ref)


@dataclass
class _Token:
    text: str
    column: int


@dataclass
class _Block:
    kind: str
    line: int
    column: int
    ref: int | None = None
    splitter: JunctionSpec | None = None
    merger: JunctionSpec | None = None
    children: list = field(default_factory=list)


def _tokenize(line: str) -> list[_Token]:
    line = line.split("#", 1)[0]
    return [_Token(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _parse_real(tok: _Token, lineno: int, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(lineno, tok.column, f"invalid number {text!r}", ("a real number",)) from None
    if not math.isfinite(value):
        raise ParseError(lineno, tok.column, f"number {text!r} is not finite", ("a finite real number",))
    return value


def _parse_int(tok: _Token, lineno: int, text: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ParseError(lineno, tok.column, f"invalid integer {text!r}", ("an integer",))
    return int(text)


def _parse_complex(tok: _Token, lineno: int, text: str) -> complex:
    try:
        value = complex(text)
    except ValueError:
        raise ParseError(lineno, tok.column, f"invalid complex number {text!r}", ("a complex number like 0.5-1j",)) from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParseError(lineno, tok.column, f"complex number {text!r} is not finite", ("a finite complex number",))
    return value


def _parse_bool(tok: _Token, lineno: int, text: str) -> bool:
    if text in ("true", "false"):
        return text == "true"
    raise ParseError(lineno, tok.column, f"invalid boolean {text!r}", ("true", "false"))


def _key_values(tokens: list[_Token], lineno: int, schema: dict, required: tuple[str, ...]) -> dict:
    """Parse ``key=value`` tokens against ``schema`` (key -> value parser)."""
    values: dict = {}
    for tok in tokens:
        key, sep, raw = tok.text.partition("=")
        if not sep or not key:
            raise ParseError(lineno, tok.column, f"expected key=value, got {tok.text!r}", tuple(f"{k}=..." for k in schema))
        if key not in schema:
            raise ParseError(lineno, tok.column, f"unknown key {key!r}", tuple(schema))
        if key in values:
            raise ParseError(lineno, tok.column, f"duplicate key {key!r}")
        values[key] = schema[key](tok, lineno, raw)
    last_col = tokens[-1].column + len(tokens[-1].text) if tokens else 1
    missing = [k for k in required if k not in values]
    if missing:
        raise ParseError(lineno, last_col, f"missing {', '.join(missing)}", tuple(f"{k}=..." for k in missing))
    return values


def _parse_rows(tok: _Token, lineno: int, text: str) -> np.ndarray:
    rows = [[_parse_complex(tok, lineno, cell) for cell in row.split(",")] for row in text.split(";")]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError(lineno, tok.column, f"branch block must be square, got rows of lengths {[len(r) for r in rows]}")
    return np.array(rows, dtype=complex)


def _parse_junction(tokens: list[_Token], lineno: int) -> JunctionSpec | str:
    if len(tokens) == 1 and tokens[0].text == "symmetric":
        return "symmetric"
    if not tokens:
        raise ParseError(lineno, 1, "missing junction description", ("symmetric", "alpha=... beta=... s=..."))
    schema = {"alpha": _parse_complex, "beta": _parse_complex, "s": _parse_rows}
    vals = _key_values(tokens, lineno, schema, ("alpha", "beta", "s"))
    try:
        return JunctionSpec(vals["alpha"], vals["beta"], vals["s"])
    except ScatterError as exc:
        raise ValidationError(lineno, tokens[0].column, str(exc)) from None


def _leaf(keyword: str, tokens: list[_Token], lineno: int, column: int) -> Leaf:
    real = _parse_real
    cx = _parse_complex
    try:
        if keyword == "free":
            v = _key_values(tokens, lineno, {"length": real}, ("length",))
            return Leaf(FreeSegment(v["length"]))
        if keyword == "phase":
            v = _key_values(tokens, lineno, {"plus": real, "minus": real}, ("plus", "minus"))
            return Leaf(DirectionalPhaseSegment(v["plus"], v["minus"]))
        if keyword == "delta":
            v = _key_values(tokens, lineno, {"strength": real}, ("strength",))
            return Leaf(DeltaBarrier(v["strength"]))
        keys = ("m11", "m12", "m21", "m22")
        v = _key_values(tokens, lineno, dict.fromkeys(keys, cx), keys)
        return Leaf(Custom(tuple(v[k] for k in keys)))
    except ParseError:
        raise
    except ScatterError as exc:
        raise ValidationError(lineno, column, str(exc)) from None


def _close_block(block: _Block, lineno: int, column: int) -> NetworkNode:
    n = len(block.children)
    if block.kind == "series":
        if n < 1:
            raise ValidationError(block.line, block.column, "series block has no children")
        return Series(tuple(block.children))
    if n < 2:
        raise ValidationError(block.line, block.column, f"parallel block needs at least 2 children, got {n}")
    junctions = {}
    for name in ("splitter", "merger"):
        j = getattr(block, name)
        if j is None or j == "symmetric":
            j = symmetric_junction(n)
        elif j.n_branches != n:
            raise ValidationError(
                block.line, block.column,
                f"{name} junction has N={j.n_branches} branches but the block has {n} children",
            )
        junctions[name] = j
    if block.ref is not None and not 0 <= block.ref < n:
        raise ValidationError(block.line, block.column, f"ref={block.ref} outside [0, {n - 1}]")
    return Parallel(tuple(block.children), junctions["splitter"], junctions["merger"], block.ref)


def parse_config(text: str) -> NetworkConfig:
    """Parse a config; raises ``ParseError`` or ``ValidationError`` with a position."""
    sweep: Sweep | None = None
    options: Options | None = None
    root: NetworkNode | None = None
    stack: list[_Block] = []
    junction_sites: list[tuple[str, JunctionSpec, int, int]] = []
    last_line = 1

    def attach(node: NetworkNode, lineno: int, column: int) -> None:
        nonlocal root
        if stack:
            stack[-1].children.append(node)
        elif root is None:
            root = node
        else:
            raise ParseError(lineno, column, "a config holds exactly one root network node", ("sweep", "options"))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        tokens = _tokenize(raw)
        if not tokens:
            continue
        head, rest = tokens[0], tokens[1:]
        word = head.text
        if word in ("sweep", "options") and stack:
            raise ParseError(lineno, head.column, f"'{word}' is not allowed inside a block", NODE_KEYWORDS + ("end",))
        if word == "sweep":
            if sweep is not None:
                raise ParseError(lineno, head.column, "duplicate sweep statement")
            v = _key_values(rest, lineno, {"k_min": _parse_real, "k_max": _parse_real, "n_points": _parse_int},
                            ("k_min", "k_max", "n_points"))
            if not v["k_min"] < v["k_max"]:
                raise ValidationError(lineno, head.column, f"k_min={v['k_min']} must be < k_max={v['k_max']}")
            if v["n_points"] < 2:
                raise ValidationError(lineno, head.column, f"n_points={v['n_points']} must be >= 2")
            sweep = Sweep(v["k_min"], v["k_max"], v["n_points"])
        elif word == "options":
            if options is not None:
                raise ParseError(lineno, head.column, "duplicate options statement")
            schema = {
                "reference_k": _parse_int,
                "oracle_check": _parse_bool,
                "resonance_threshold": _parse_real,
                "tol_det": _parse_real,
                "tol_singular": _parse_real,
                "tol_unitary": _parse_real,
            }
            v = _key_values(rest, lineno, schema, ())
            threshold = v.get("resonance_threshold", Options.resonance_threshold)
            if not 0 < threshold <= 1:
                raise ValidationError(lineno, head.column, f"resonance_threshold={threshold} must lie in (0, 1]")
            tols = Tolerances(
                det=v.get("tol_det", Tolerances.det),
                singular=v.get("tol_singular", Tolerances.singular),
                unitary=v.get("tol_unitary", Tolerances.unitary),
            )
            if min(tols.det, tols.singular, tols.unitary) <= 0:
                raise ValidationError(lineno, head.column, "tolerances must be positive")
            options = Options(v.get("reference_k"), v.get("oracle_check", False), threshold, tols)
        elif word in LEAF_KEYWORDS:
            attach(_leaf(word, rest, lineno, head.column), lineno, head.column)
        elif word in BLOCK_KEYWORDS:
            block = _Block(word, lineno, head.column)
            if word == "parallel":
                block.ref = _key_values(rest, lineno, {"ref": _parse_int}, ()).get("ref")
            elif rest:
                raise ParseError(lineno, rest[0].column, "series takes no arguments", ("end of line",))
            if not stack and root is not None:
                raise ParseError(lineno, head.column, "a config holds exactly one root network node")
            stack.append(block)
        elif word in ("splitter", "merger"):
            if not stack or stack[-1].kind != "parallel":
                raise ParseError(lineno, head.column, f"'{word}' only allowed inside a parallel block")
            block = stack[-1]
            if block.children:
                raise ParseError(lineno, head.column, f"'{word}' must precede the first child")
            if getattr(block, word) is not None:
                raise ParseError(lineno, head.column, f"duplicate {word}")
            junction = _parse_junction(rest, lineno)
            setattr(block, word, junction)
            if junction != "symmetric":
                junction_sites.append((word, junction, lineno, head.column))
        elif word == "end":
            if not stack:
                raise ParseError(lineno, head.column, "'end' without an open block", TOP_KEYWORDS)
            if rest:
                raise ParseError(lineno, rest[0].column, "unexpected text after 'end'", ("end of line",))
            block = stack.pop()
            node = _close_block(block, lineno, head.column)
            attach(node, block.line, block.column)
        else:
            expected = NODE_KEYWORDS + ("splitter", "merger", "end") if stack else TOP_KEYWORDS
            raise ParseError(lineno, head.column, f"unknown statement {word!r}", expected)

    if stack:
        block = stack[-1]
        raise ParseError(last_line + 1, 1, f"unterminated {block.kind} block opened on line {block.line}", ("end",))
    if root is None:
        raise ParseError(last_line + 1, 1, "no network node found", NODE_KEYWORDS)
    if sweep is None:
        raise ParseError(last_line + 1, 1, "missing sweep statement", ("sweep k_min=... k_max=... n_points=...",))
    options = options or Options()
    for name, junction, lineno, column in junction_sites:
        try:
            check_junction(junction, options.tolerances)
        except ScatterError as exc:
            raise ValidationError(lineno, column, f"{name} junction: {exc}") from None
    if options.reference_k is not None:
        try:
            _override_reference(root, options.reference_k)
        except ScatterError as exc:
            raise ValidationError(1, 1, f"options reference_k={options.reference_k}: {exc}") from None
    return NetworkConfig(root, sweep, options)


def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_complex(z: complex) -> str:
    return repr(complex(z))


def _render_junction(j: JunctionSpec) -> str:
    if j == symmetric_junction(j.n_branches):
        return "symmetric"
    rows = ";".join(",".join(_fmt_complex(z) for z in row) for row in j.s)
    return f"alpha={_fmt_complex(j.alpha)} beta={_fmt_complex(j.beta)} s={rows}"


def _render_node(node: NetworkNode, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    if isinstance(node, Leaf):
        el = node.element
        if isinstance(el, FreeSegment):
            lines.append(f"{pad}free length={_fmt_real(el.length)}")
        elif isinstance(el, DirectionalPhaseSegment):
            lines.append(f"{pad}phase plus={_fmt_real(el.phi_plus)} minus={_fmt_real(el.phi_minus)}")
        elif isinstance(el, DeltaBarrier):
            lines.append(f"{pad}delta strength={_fmt_real(el.strength)}")
        else:
            parts = " ".join(f"{k}={_fmt_complex(z)}" for k, z in zip(("m11", "m12", "m21", "m22"), el.entries))
            lines.append(f"{pad}matrix {parts}")
        return
    if isinstance(node, Series):
        lines.append(f"{pad}series")
    else:
        ref = "" if node.reference_k is None else f" ref={node.reference_k}"
        lines.append(f"{pad}parallel{ref}")
        lines.append(f"{pad}  splitter {_render_junction(node.splitter)}")
        lines.append(f"{pad}  merger {_render_junction(node.merger)}")
    for child in node.children:
        _render_node(child, depth + 1, lines)
    lines.append(f"{pad}end")


def render_config(cfg: NetworkConfig) -> str:
    """Canonical text form; ``parse_config(render_config(c)) == c``."""
    s, o, t = cfg.sweep, cfg.options, cfg.options.tolerances
    lines = [f"sweep k_min={_fmt_real(s.k_min)} k_max={_fmt_real(s.k_max)} n_points={s.n_points}"]
    opts = [
        f"oracle_check={'true' if o.oracle_check else 'false'}",
        f"resonance_threshold={_fmt_real(o.resonance_threshold)}",
        f"tol_det={_fmt_real(t.det)}",
        f"tol_singular={_fmt_real(t.singular)}",
        f"tol_unitary={_fmt_real(t.unitary)}",
    ]
    if o.reference_k is not None:
        opts.insert(0, f"reference_k={o.reference_k}")
    lines.append("options " + " ".join(opts))
    _render_node(cfg.network, 0, lines)
    return "\n".join(lines) + "\n"


def replace_options(cfg: NetworkConfig, **changes) -> NetworkConfig:
    return dataclasses.replace(cfg, options=dataclasses.replace(cfg.options, **changes))
