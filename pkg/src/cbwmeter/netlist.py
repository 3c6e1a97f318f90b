"""Textual optical-network descriptions and the coupled-MZI chain.

Grammar (whitespace separated, ``#`` comments to end of line)::

    network  := element*
    element  := "BS" | "SWAP"
              | "PHASE" "phi=" num "zeta=" num
              | "MZI" "phi=" num "zeta=" num          # sugar for BS PHASE BS
              | "DUMMY" "psi=" num ["kind=" ("mzi" | "diag")]
              | "REPEAT" int "{" element* "}"
    num      := float | ["-"][int]"pi"["/"int]

Textual order is propagation order: the first element acts first on the
input state, so it is the rightmost factor of the compiled matrix.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Union

import numpy as np

from .unitary import (
    SIGMA_X,
    SIGMA_Z,
    MziParams,
    beam_splitter,
    cbw_closed_form,
    equal_up_to_global_phase,
    mzi_unitary,
    phase_plate,
    rotation_frame,
)

MAX_DEPTH = 16
DUMMY_KINDS = ("mzi", "diag")
PSI_TEST_PHASES = (0.3, 0.7, 1.1, 2.0, 2.9)


class NetlistError(ValueError):
    """Syntax or semantic error with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class BeamSplitter:
    pass


@dataclass(frozen=True)
class PhasePlate:
    phi: float
    zeta: float


@dataclass(frozen=True)
class Swap:
    pass


@dataclass(frozen=True)
class DummyMzi:
    psi: float
    kind: str = "mzi"

    def __post_init__(self):
        if self.kind not in DUMMY_KINDS:
            raise ValueError(f"unknown dummy kind {self.kind!r}")


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("repeat count must be >= 1")


Element = Union[BeamSplitter, PhasePlate, Swap, DummyMzi, Repeat]


@dataclass(frozen=True)
class NetworkSpec:
    elements: tuple
    source_text: str = field(default="", compare=False)


@dataclass(frozen=True)
class ChainConfig:
    """M coupled MZIs sharing phases ``phi``/``zeta``, joined by dummy ``psi`` couplers."""

    M: int
    phi: float
    zeta: float = 0.0
    psi: float = 0.0
    kind: str = "mzi"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if self.kind not in DUMMY_KINDS:
            raise ValueError(f"unknown dummy kind {self.kind!r}")


# --------------------------------------------------------------------------
# lexing / parsing

class _Token(NamedTuple):
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"#[^\n]*|[{}]|[^\s{}#]+|\n|[ \t\r\f\v]+")
_PI_RE = re.compile(r"^(-?)(\d*)pi(?:/(\d+))?$")
_FLOAT_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    for mt in _TOKEN_RE.finditer(text):
        s = mt.group()
        if s == "\n":
            line += 1
            line_start = mt.end()
            continue
        if s[0] == "#" or s.isspace():
            continue
        tokens.append(_Token(s, line, mt.start() - line_start + 1))
    return tokens


def parse_number(text: str) -> float:
    """Decimal float, or a ``pi`` multiple such as ``pi/2``, ``-pi``, ``2pi``."""
    mt = _PI_RE.match(text)
    if mt:
        sign, mult, div = mt.groups()
        if div is not None and int(div) == 0:
            raise ValueError("division by zero")
        value = math.pi * (int(mult) if mult else 1) / (int(div) if div else 1)
        return -value if sign else value
    if not _FLOAT_RE.match(text):
        raise ValueError(f"malformed number {text!r}")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        lines = text.split("\n")
        self.eof = (len(lines), len(lines[-1]) + 1)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def error(self, msg: str, tok: _Token | None = None):
        line, col = (tok.line, tok.col) if tok else self.eof
        raise NetlistError(msg, line, col)

    def next(self, expected: str) -> _Token:
        tok = self.peek()
        if tok is None:
            self.error(f"unexpected end of input, expected {expected}")
        self.pos += 1
        return tok

    def keyvalue(self, key: str, parse=parse_number):
        tok = self.next(f"'{key}=<value>'")
        name, eq, raw = tok.text.partition("=")
        if name != key or not eq:
            self.error(f"expected '{key}=<value>', got {tok.text!r}", tok)
        try:
            return parse(raw)
        except ValueError as exc:
            # point at the value, not the key
            self.error(str(exc), _Token(raw, tok.line, tok.col + len(key) + 1))

    def optional_key(self, key: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text.startswith(key + "=")

    def sequence(self, depth: int, closing: bool) -> list:
        out = []
        while True:
            tok = self.peek()
            if tok is None:
                if closing:
                    self.error("unbalanced REPEAT: missing '}'")
                return out
            if tok.text == "}":
                if not closing:
                    self.error("unbalanced '}'", tok)
                self.pos += 1
                return out
            out.extend(self.element(depth))

    def element(self, depth: int) -> list:
        tok = self.next("element")
        word = tok.text
        if word == "BS":
            return [BeamSplitter()]
        if word == "SWAP":
            return [Swap()]
        if word == "PHASE":
            return [PhasePlate(self.keyvalue("phi"), self.keyvalue("zeta"))]
        if word == "MZI":
            plate = PhasePlate(self.keyvalue("phi"), self.keyvalue("zeta"))
            return [BeamSplitter(), plate, BeamSplitter()]
        if word == "DUMMY":
            psi = self.keyvalue("psi")
            kind = "mzi"
            if self.optional_key("kind"):
                kind_tok = self.peek()
                kind = self.keyvalue("kind", parse=str)
                if kind not in DUMMY_KINDS:
                    self.error(f"unknown dummy kind {kind!r}", kind_tok)
            return [DummyMzi(psi, kind)]
        if word == "REPEAT":
            if depth >= MAX_DEPTH:
                self.error(f"REPEAT nesting deeper than {MAX_DEPTH}", tok)
            count_tok = self.next("repeat count")
            if not count_tok.text.isdigit() or int(count_tok.text) < 1:
                self.error(f"repeat count must be a positive integer, got {count_tok.text!r}", count_tok)
            brace = self.next("'{'")
            if brace.text != "{":
                self.error(f"expected '{{', got {brace.text!r}", brace)
            body = self.sequence(depth + 1, closing=True)
            return [Repeat(int(count_tok.text), tuple(body))]
        self.error(f"unknown element {word!r}", tok)


def parse_network(text: str) -> NetworkSpec:
    """Parse netlist text; raises :class:`NetlistError` with line/column on failure."""
    parser = _Parser(text)
    elements = parser.sequence(0, closing=False)
    return NetworkSpec(tuple(elements), text)


def _fmt(value: float) -> str:
    return repr(float(value))


def format_elements(elements: Iterable[Element], indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for el in elements:
        if isinstance(el, BeamSplitter):
            lines.append(pad + "BS")
        elif isinstance(el, Swap):
            lines.append(pad + "SWAP")
        elif isinstance(el, PhasePlate):
            lines.append(f"{pad}PHASE phi={_fmt(el.phi)} zeta={_fmt(el.zeta)}")
        elif isinstance(el, DummyMzi):
            lines.append(f"{pad}DUMMY psi={_fmt(el.psi)} kind={el.kind}")
        elif isinstance(el, Repeat):
            lines.append(f"{pad}REPEAT {el.count} {{")
            lines.append(format_elements(el.body, indent + 1))
            lines.append(pad + "}")
        else:
            raise TypeError(f"not a network element: {el!r}")
    return "\n".join(line for line in lines if line)


def format_network(spec: NetworkSpec) -> str:
    """Canonical text; ``parse_network(format_network(s)) == s``."""
    return format_elements(spec.elements) + "\n"


# --------------------------------------------------------------------------
# compilation

def dummy_unitary(psi: float, kind: str = "mzi") -> np.ndarray:
    if kind == "mzi":
        return mzi_unitary(MziParams(psi, 0.0))
    if kind == "diag":
        return phase_plate(MziParams(psi, 0.0))
    raise ValueError(f"unknown dummy kind {kind!r}")


def element_unitary(el: Element) -> np.ndarray:
    if isinstance(el, BeamSplitter):
        return beam_splitter()
    if isinstance(el, Swap):
        return SIGMA_X.copy()
    if isinstance(el, PhasePlate):
        return phase_plate(MziParams(el.phi, el.zeta))
    if isinstance(el, DummyMzi):
        return dummy_unitary(el.psi, el.kind)
    if isinstance(el, Repeat):
        return np.linalg.matrix_power(compile_elements(el.body), el.count)
    raise TypeError(f"not a network element: {el!r}")


def compile_elements(elements: Iterable[Element]) -> np.ndarray:
    u = np.eye(2, dtype=np.complex128)
    for el in elements:
        u = element_unitary(el) @ u
    if not np.all(np.isfinite(u)):
        raise ArithmeticError("network compiled to a non-finite matrix")
    return u


def compile_network(spec: NetworkSpec) -> np.ndarray:
    return compile_elements(spec.elements)


# --------------------------------------------------------------------------
# coupled chain

def _mzi_elements(phi: float, zeta: float) -> list:
    return [BeamSplitter(), PhasePlate(phi, zeta), BeamSplitter()]


def coupler_elements(psi: float, kind: str = "mzi") -> list:
    """Anti-symmetric coupler: swap the paths, dummy block, swap back."""
    return [Swap(), DummyMzi(psi, kind), Swap()]


def build_cbw_chain(config: ChainConfig) -> NetworkSpec:
    """M MZI units joined by M-1 couplers.

    For M=1 this is a bare MZI (3 elements); each further unit adds a
    coupler and an MZI (6 elements).
    """
    elements = _mzi_elements(config.phi, config.zeta)
    for _ in range(config.M - 1):
        elements += coupler_elements(config.psi, config.kind)
        elements += _mzi_elements(config.phi, config.zeta)
    return NetworkSpec(tuple(elements), format_elements(elements))


def naive_cascade(config: ChainConfig) -> NetworkSpec:
    """M identical MZIs back to back with no coupler (negative control)."""
    body = tuple(_mzi_elements(config.phi, config.zeta))
    return NetworkSpec((Repeat(config.M, body),))


def verify_basis_preservation(d: np.ndarray, tol: float = 1e-12) -> bool:
    """``D^dagger sigma_z D == sigma_z`` in the max norm."""
    return bool(np.max(np.abs(d.conj().T @ SIGMA_Z @ d - SIGMA_Z)) < tol)


def effective_dummy(psi: float, kind: str = "mzi") -> np.ndarray:
    """Operator the coupler leaves between consecutive rotation-form MZIs.

    With ``R = Q @ SIGMA_X`` (``Q`` the rotation form), a coupled pair is
    ``R (X D X) R X = Q (D X) Q``, so ``D @ SIGMA_X`` is what has to commute
    with ``sigma_z`` for the chain to multiply phases.
    """
    return dummy_unitary(psi, kind) @ SIGMA_X


@dataclass(frozen=True)
class ChainReport:
    passed: bool
    residual: float
    phase: float
    basis_preserved: bool
    naive_passed: bool
    naive_residual: float

    @property
    def basis_violation(self) -> bool:
        return not self.basis_preserved


def chain_residual(config: ChainConfig) -> tuple[float, float]:
    """Max-norm residual and global phase of the chain against the closed form.

    The compiled chain is read in the rotation frame (input swap removed, see
    :mod:`cbwmeter.unitary`).
    """
    u = rotation_frame(compile_network(build_cbw_chain(config)))
    target = cbw_closed_form(config.phi - config.zeta, config.M)
    match = equal_up_to_global_phase(u, target, tol=1.0)
    return match.residual, match.phase


def verify_mth_power(config: ChainConfig, tol: float = 1e-9) -> ChainReport:
    residual, phase = chain_residual(config)
    target = cbw_closed_form(config.phi - config.zeta, config.M)
    naive = rotation_frame(compile_network(naive_cascade(config)))
    naive_match = equal_up_to_global_phase(naive, target, tol=tol)
    return ChainReport(
        passed=residual < tol,
        residual=residual,
        phase=phase,
        basis_preserved=verify_basis_preservation(effective_dummy(config.psi, config.kind), tol=max(tol, 1e-12)),
        naive_passed=naive_match.equal,
        naive_residual=naive_match.residual,
    )


@dataclass(frozen=True)
class PsiSearchResult:
    M: int
    kind: str
    best_psi: float
    best_residual: float
    found: bool
    table: tuple  # ((psi, worst residual), ...)


def psi_search(M: int, tol: float = 1e-9, grid: int = 64, kind: str = "mzi",
               phases: Iterable[float] = PSI_TEST_PHASES) -> PsiSearchResult:
    """Brute-force scan of the coupler phase on ``grid`` points of [0, 2pi).

    Each row holds the worst M-th-power residual over the test phases
    (``zeta = 0``).  Finding nothing below ``tol`` is a valid outcome.
    """
    if grid < 8:
        raise ValueError("grid must be >= 8")
    phases = tuple(phases)
    rows = []
    for psi in 2 * np.pi * np.arange(grid) / grid:
        worst = max(chain_residual(ChainConfig(M, p, 0.0, float(psi), kind))[0] for p in phases)
        rows.append((float(psi), worst))
    best_psi, best_res = min(rows, key=lambda r: r[1])
    return PsiSearchResult(M, kind, best_psi, best_res, best_res < tol, tuple(rows))


def chain_intensity(config: ChainConfig, phi_grid) -> np.ndarray:
    """``|<u|U_chain|u>|^2`` over a grid of ``phi`` (other settings from ``config``)."""
    phi_grid = np.asarray(phi_grid, dtype=float)
    out = np.empty_like(phi_grid)
    for k, phi in enumerate(phi_grid):
        u = compile_network(build_cbw_chain(ChainConfig(config.M, float(phi), config.zeta, config.psi, config.kind)))
        out[k] = abs(u[0, 0]) ** 2
    return out
