"""
GField - Test functions (payoff language)

    Grammar:
        expr   := term (('+' | '-') term)*
        term   := factor ('*' factor)*
        factor := '-' factor | atom ('^' uint)?
        atom   := number | variable | '(' expr ')'
                | ('min' | 'max') '(' expr ',' expr ')' | 'abs' '(' expr ')'

    Variables are x1, x2, ... (1-based). With a layer width m, x<i>_<j> names
        cell j of layer i and maps to the layer-major index (i - 1) * m + j.
    Every expression is locally Lipschitz with polynomial growth by construction:
        there is no division and powers are nonnegative integers <= MAX_POWER.
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import re
import math

from abc import abstractmethod
from dataclasses import dataclass
from typing import Sequence, Union

import numpy

from .common import log


MAX_POWER = 12
"""Largest integer exponent accepted by the parser"""

MAX_NESTING = 100
"""Deepest nesting of parentheses, function calls and unary minus accepted by the parser"""


class PhiException(Exception):
    """Error while building or evaluating a test function"""


class PhiSyntaxError(PhiException):
    """Error while parsing a test function, carries the 0-based position in the text"""

    def __init__(self, message: str, position: int, text: str = '') -> None:
        self.position = position
        self.text = text
        super().__init__(f'{message} at position {position}')


@dataclass(frozen=True)
class GrowthBound:
    """Conservative bounds for a test function on a ball"""
    lipschitz: float
    """Lipschitz constant on the ball"""
    sup: float
    """Supremum of |f| on the ball"""


# AST

PREC_SUM = 1
PREC_PRODUCT = 2
PREC_NEG = 3
PREC_POWER = 4
PREC_ATOM = 5


class Node:
    """Base class for expression tree nodes"""
    precedence = PREC_ATOM

    @abstractmethod
    def evaluate(self, cols: Sequence) -> Union[numpy.ndarray, float]:
        """Evaluate on (broadcastable) columns, cols[i] holds variable x(i+1)"""

    @abstractmethod
    def bound(self, radius: float) -> tuple[float, float, float]:
        """Interval (lo, hi) of the value and a Lipschitz bound, on the cube [-radius, radius]^n"""

    @abstractmethod
    def variables(self) -> frozenset[int]:
        """1-based indices of referenced variables"""

    @abstractmethod
    def degree(self) -> int:
        """Polynomial growth degree"""

    @abstractmethod
    def to_text(self) -> str:
        """Canonical text form"""

    def wrap(self, parent_precedence: int, strict: bool = False) -> str:
        """Text of this node as an operand, parenthesized when needed"""
        text = self.to_text()
        if self.precedence < parent_precedence or (strict and self.precedence == parent_precedence):
            return f'({text})'
        return text


def format_number(value: float) -> str:
    """Shortest text that parses back to the same float"""
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Const(Node):
    """A numeric constant"""
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise PhiException(f'Constants must be finite, got: {self.value}')

    def evaluate(self, cols):
        return self.value

    def bound(self, radius):
        return self.value, self.value, 0.0

    def variables(self):
        return frozenset()

    def degree(self):
        return 0

    def to_text(self):
        if self.value < 0:
            return f'(-{format_number(-self.value)})'
        return format_number(self.value)


@dataclass(frozen=True)
class Var(Node):
    """A variable x<index>, index is 1-based"""
    index: int

    def evaluate(self, cols):
        return cols[self.index - 1]

    def bound(self, radius):
        return -radius, radius, 1.0

    def variables(self):
        return frozenset((self.index,))

    def degree(self):
        return 1

    def to_text(self):
        return f'x{self.index}'


@dataclass(frozen=True)
class Add(Node):
    """left + right"""
    left: Node
    right: Node
    precedence = PREC_SUM

    def evaluate(self, cols):
        return self.left.evaluate(cols) + self.right.evaluate(cols)

    def bound(self, radius):
        alo, ahi, al = self.left.bound(radius)
        blo, bhi, bl = self.right.bound(radius)
        return alo + blo, ahi + bhi, al + bl

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree(self):
        return max(self.left.degree(), self.right.degree())

    def to_text(self):
        return f'{self.left.wrap(PREC_SUM)} + {self.right.wrap(PREC_SUM, strict=True)}'


@dataclass(frozen=True)
class Sub(Node):
    """left - right"""
    left: Node
    right: Node
    precedence = PREC_SUM

    def evaluate(self, cols):
        return self.left.evaluate(cols) - self.right.evaluate(cols)

    def bound(self, radius):
        alo, ahi, al = self.left.bound(radius)
        blo, bhi, bl = self.right.bound(radius)
        return alo - bhi, ahi - blo, al + bl

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree(self):
        return max(self.left.degree(), self.right.degree())

    def to_text(self):
        return f'{self.left.wrap(PREC_SUM)} - {self.right.wrap(PREC_SUM, strict=True)}'


@dataclass(frozen=True)
class Mul(Node):
    """left * right"""
    left: Node
    right: Node
    precedence = PREC_PRODUCT

    def evaluate(self, cols):
        return self.left.evaluate(cols) * self.right.evaluate(cols)

    def bound(self, radius):
        alo, ahi, al = self.left.bound(radius)
        blo, bhi, bl = self.right.bound(radius)
        products = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
        amax = max(abs(alo), abs(ahi))
        bmax = max(abs(blo), abs(bhi))
        return min(products), max(products), amax * bl + bmax * al

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree(self):
        return self.left.degree() + self.right.degree()

    def to_text(self):
        return f'{self.left.wrap(PREC_PRODUCT)} * {self.right.wrap(PREC_PRODUCT, strict=True)}'


@dataclass(frozen=True)
class Pow(Node):
    """base ^ exponent, exponent a small nonnegative integer"""
    base: Node
    exponent: int
    precedence = PREC_POWER

    def __post_init__(self):
        if not 0 <= self.exponent <= MAX_POWER:
            raise PhiException(f'Power exponent must be within 0..{MAX_POWER}, got: {self.exponent}')

    def evaluate(self, cols):
        return numpy.power(self.base.evaluate(cols), self.exponent)

    def bound(self, radius):
        lo, hi, lip = self.base.bound(radius)
        k = self.exponent
        if k == 0:
            return 1.0, 1.0, 0.0
        mag = max(abs(lo), abs(hi))
        if k % 2 == 1 or lo >= 0:
            vlo, vhi = lo ** k, hi ** k
        elif hi <= 0:
            vlo, vhi = hi ** k, lo ** k
        else:
            vlo, vhi = 0.0, mag ** k
        return vlo, vhi, k * mag ** (k - 1) * lip

    def variables(self):
        return self.base.variables()

    def degree(self):
        return self.base.degree() * self.exponent

    def to_text(self):
        return f'{self.base.wrap(PREC_ATOM)}^{self.exponent}'


@dataclass(frozen=True)
class Min(Node):
    """min(left, right)"""
    left: Node
    right: Node

    def evaluate(self, cols):
        return numpy.minimum(self.left.evaluate(cols), self.right.evaluate(cols))

    def bound(self, radius):
        alo, ahi, al = self.left.bound(radius)
        blo, bhi, bl = self.right.bound(radius)
        return min(alo, blo), min(ahi, bhi), max(al, bl)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree(self):
        return max(self.left.degree(), self.right.degree())

    def to_text(self):
        return f'min({self.left.to_text()}, {self.right.to_text()})'


@dataclass(frozen=True)
class Max(Node):
    """max(left, right)"""
    left: Node
    right: Node

    def evaluate(self, cols):
        return numpy.maximum(self.left.evaluate(cols), self.right.evaluate(cols))

    def bound(self, radius):
        alo, ahi, al = self.left.bound(radius)
        blo, bhi, bl = self.right.bound(radius)
        return max(alo, blo), max(ahi, bhi), max(al, bl)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree(self):
        return max(self.left.degree(), self.right.degree())

    def to_text(self):
        return f'max({self.left.to_text()}, {self.right.to_text()})'


@dataclass(frozen=True)
class Abs(Node):
    """abs(operand)"""
    operand: Node

    def evaluate(self, cols):
        return numpy.abs(self.operand.evaluate(cols))

    def bound(self, radius):
        lo, hi, lip = self.operand.bound(radius)
        if lo >= 0:
            return lo, hi, lip
        if hi <= 0:
            return -hi, -lo, lip
        return 0.0, max(-lo, hi), lip

    def variables(self):
        return self.operand.variables()

    def degree(self):
        return self.operand.degree()

    def to_text(self):
        return f'abs({self.operand.to_text()})'


@dataclass(frozen=True)
class Neg(Node):
    """-operand"""
    operand: Node
    precedence = PREC_NEG

    def evaluate(self, cols):
        return -self.operand.evaluate(cols)

    def bound(self, radius):
        lo, hi, lip = self.operand.bound(radius)
        return -hi, -lo, lip

    def variables(self):
        return self.operand.variables()

    def degree(self):
        return self.operand.degree()

    def to_text(self):
        return f'-{self.operand.wrap(PREC_NEG)}'


# Parser

_TOKEN_RE = re.compile(r'\s*(?:(?P<number>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^(),]))')
_VAR_RE = re.compile(r'x(\d+)(?:_(\d+))?')
_FUNCTIONS = ('min', 'max', 'abs')


@dataclass(frozen=True)
class Token:
    """A lexical token"""
    kind: str
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    """Split text into tokens, the list ends with an 'end' token"""
    tokens: list[Token] = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            raise PhiSyntaxError(f'Unexpected character {text[pos]!r}', pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(Token('end', '', len(text)))
    return tokens


class Parser:
    """Recursive descent parser producing a Node tree"""

    def __init__(self, text: str, layer_width: Union[int, None] = None) -> None:
        self.text = text
        self.layer_width = layer_width
        self.tokens = tokenize(text)
        self.index = 0
        self.depth = 0

    @property
    def current(self) -> Token:
        """Token under the cursor"""
        return self.tokens[self.index]

    def advance(self) -> Token:
        """Consume and return the current token"""
        token = self.tokens[self.index]
        if token.kind != 'end':
            self.index += 1
        return token

    def error(self, message: str, token: Union[Token, None] = None) -> PhiSyntaxError:
        """Build a syntax error at the given (or current) token"""
        token = self.current if token is None else token
        return PhiSyntaxError(message, token.position, self.text)

    def expect(self, op: str) -> Token:
        """Consume the given operator or fail"""
        token = self.current
        if token.kind != 'op' or token.text != op:
            found = 'end of input' if token.kind == 'end' else repr(token.text)
            raise self.error(f'Expected {op!r}, found {found}')
        return self.advance()

    def parse(self) -> Node:
        """Parse the whole text"""
        if self.current.kind == 'end':
            raise self.error('Empty expression')
        try:
            node = self.parse_expr()
        except RecursionError:
            raise self.error('Expression nested too deeply') from None
        if self.current.kind != 'end':
            raise self.error(f'Unexpected token {self.current.text!r}')
        return node

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            right = self.parse_term()
            node = Add(node, right) if op == '+' else Sub(node, right)
        return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while self.current.kind == 'op' and self.current.text == '*':
            self.advance()
            node = Mul(node, self.parse_factor())
        return node

    def parse_factor(self) -> Node:
        if self.depth >= MAX_NESTING:
            raise self.error(f'Expression nested deeper than {MAX_NESTING} levels')
        self.depth += 1
        try:
            return self._parse_factor()
        finally:
            self.depth -= 1

    def _parse_factor(self) -> Node:
        if self.current.kind == 'op' and self.current.text == '-':
            self.advance()
            return Neg(self.parse_factor())
        node = self.parse_atom()
        if self.current.kind == 'op' and self.current.text == '^':
            self.advance()
            token = self.current
            if token.kind != 'number' or not token.text.isdigit():
                raise self.error('Power exponent must be an unsigned integer', token)
            exponent = int(token.text)
            if exponent > MAX_POWER:
                raise self.error(f'Power exponent {exponent} exceeds {MAX_POWER}', token)
            self.advance()
            node = Pow(node, exponent)
        return node

    def parse_atom(self) -> Node:
        token = self.current
        if token.kind == 'number':
            self.advance()
            return Const(float(token.text))
        if token.kind == 'ident':
            self.advance()
            if token.text in _FUNCTIONS:
                self.expect('(')
                first = self.parse_expr()
                if token.text == 'abs':
                    self.expect(')')
                    return Abs(first)
                self.expect(',')
                second = self.parse_expr()
                self.expect(')')
                return Min(first, second) if token.text == 'min' else Max(first, second)
            return Var(self.variable_index(token))
        if token.kind == 'op' and token.text == '(':
            self.advance()
            node = self.parse_expr()
            self.expect(')')
            return node
        if token.kind == 'end':
            raise self.error('Unexpected end of input')
        raise self.error(f'Unexpected token {token.text!r}')

    def variable_index(self, token: Token) -> int:
        """Resolve x<k> or x<i>_<j> to a 1-based flat index"""
        match = _VAR_RE.fullmatch(token.text)
        if match is None:
            raise self.error(f'Unknown identifier {token.text!r}', token)
        first = int(match.group(1))
        if match.group(2) is None:
            if first < 1:
                raise self.error(f'Variable indices start at 1, got {token.text!r}', token)
            return first
        cell = int(match.group(2))
        if self.layer_width is None:
            raise self.error(f'Layered variable {token.text!r} needs a cell count', token)
        if first < 1 or not 1 <= cell <= self.layer_width:
            raise self.error(f'Layered variable {token.text!r} out of range for {self.layer_width} cell(s)', token)
        return (first - 1) * self.layer_width + cell


# Payoffs


class Payoff:
    """
    Anything an expectation engine can integrate: a function of x1..x_arity,
        evaluated column-wise on broadcastable numpy arrays
    """
    arity: int = 0

    @abstractmethod
    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        """Values on broadcastable columns, cols[i] holds x(i+1)"""

    @abstractmethod
    def variables(self) -> frozenset[int]:
        """1-based indices this payoff actually depends on"""

    def growth_degree(self) -> int:
        """Polynomial growth degree (used to guard quadrature)"""
        return 0

    def __call__(self, *x: float) -> float:
        """Value at a single point"""
        return float(self.evaluate([numpy.asarray(v, dtype=float) for v in x]))


def _broadcast(result, cols: Sequence, count: int) -> numpy.ndarray:
    """(internal) broadcast a result to the common shape of the first count columns"""
    shapes = [numpy.shape(c) for c in cols[:count]]
    shape = numpy.broadcast_shapes(*shapes) if shapes else ()
    return numpy.array(numpy.broadcast_to(numpy.asarray(result, dtype=float), shape), dtype=float)


class TestFunction(Payoff):
    """A parsed test function in C_l.Lip(R^n)"""
    __test__ = False  # not a pytest class

    def __init__(self, ast: Node, arity: Union[int, None] = None) -> None:
        self.ast = ast
        """Expression tree"""
        referenced = ast.variables()
        needed = max(referenced) if referenced else 0
        if arity is None:
            arity = needed
        if arity < needed:
            raise PhiException(f'Arity {arity} is smaller than the highest referenced variable x{needed}')
        self.arity = arity
        """Number of variables (highest referenced index unless given)"""

    @property
    def text(self) -> str:
        """Canonical text"""
        return self.ast.to_text()

    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        if len(cols) < self.arity:
            raise PhiException(f'Need {self.arity} columns, got {len(cols)}')
        return _broadcast(self.ast.evaluate(cols), cols, self.arity)

    def eval(self, x: Sequence[float]) -> float:
        """Exact recursive evaluation at one point, len(x) >= arity"""
        if len(x) < self.arity:
            raise PhiException(f'Need a vector of length >= {self.arity}, got {len(x)}')
        return float(self.ast.evaluate([float(v) for v in x]))

    def variables(self) -> frozenset[int]:
        return self.ast.variables()

    def degree(self) -> int:
        """Polynomial growth degree m"""
        return self.ast.degree()

    def growth_degree(self) -> int:
        return self.degree()

    def growth_bound(self, radius: float) -> GrowthBound:
        """Lipschitz constant and sup of |f| on the ball of given radius (interval arithmetic on the enclosing cube)"""
        if radius <= 0:
            raise PhiException(f'Radius must be positive, got: {radius}')
        lo, hi, lip = self.ast.bound(float(radius))
        return GrowthBound(lip, max(abs(lo), abs(hi)))

    def with_arity(self, arity: int) -> TestFunction:
        """Same expression, declared over more variables"""
        return TestFunction(self.ast, arity)

    def _other_ast(self, other) -> Node:
        if isinstance(other, TestFunction):
            return other.ast
        if isinstance(other, (int, float)):
            return Const(float(other)) if other >= 0 else Neg(Const(-float(other)))
        raise PhiException(f'Cannot combine a test function with {type(other).__name__}')

    def _combine(self, node: Node, other) -> TestFunction:
        arity = max(self.arity, other.arity if isinstance(other, TestFunction) else 0)
        return TestFunction(node, arity)

    def __add__(self, other) -> TestFunction:
        return self._combine(Add(self.ast, self._other_ast(other)), other)

    def __sub__(self, other) -> TestFunction:
        return self._combine(Sub(self.ast, self._other_ast(other)), other)

    def __mul__(self, other) -> TestFunction:
        return self._combine(Mul(self.ast, self._other_ast(other)), other)

    def __rmul__(self, other) -> TestFunction:
        return self._combine(Mul(self._other_ast(other), self.ast), other)

    def __neg__(self) -> TestFunction:
        return TestFunction(Neg(self.ast), self.arity)

    def __eq__(self, other) -> bool:
        return isinstance(other, TestFunction) and self.ast == other.ast and self.arity == other.arity

    def __hash__(self) -> int:
        return hash((self.ast, self.arity))

    def __repr__(self) -> str:
        return f'TestFunction({self.text!r}, arity={self.arity})'


def parse(text: str, layer_width: Union[int, None] = None, arity: Union[int, None] = None) -> TestFunction:
    """Parse text into a TestFunction (arity = highest referenced variable unless given)"""
    if not isinstance(text, str):
        raise PhiException(f'Expected expression text, got: {type(text).__name__}')
    ast = Parser(text, layer_width).parse()
    log.debug(f'Parsed test function: {ast.to_text()}')
    return TestFunction(ast, arity)


def eval_at(f: TestFunction, x: Sequence[float]) -> float:
    """Evaluate f at the point x"""
    return f.eval(x)


def growth_bound(f: TestFunction, radius: float) -> GrowthBound:
    """Conservative (lipschitz, sup) bounds of f on the ball of given radius"""
    return f.growth_bound(radius)


def constant(value: float, arity: int = 0) -> TestFunction:
    """The constant test function"""
    node = Const(float(value)) if value >= 0 else Neg(Const(-float(value)))
    return TestFunction(node, arity)


def variable(index: int, arity: Union[int, None] = None) -> TestFunction:
    """The coordinate function x<index>"""
    return TestFunction(Var(index), arity)


def compose_sum(fs: Sequence[TestFunction]) -> TestFunction:
    """f1 + f2 + ... (left to right)"""
    if not fs:
        return constant(0.0)
    result = fs[0]
    for f in fs[1:]:
        result = result + f
    return result


def compose_product(fs: Sequence[TestFunction]) -> TestFunction:
    """f1 * f2 * ... (left to right)"""
    if not fs:
        return constant(1.0)
    result = fs[0]
    for f in fs[1:]:
        result = result * f
    return result


def scale(f: TestFunction, c: float) -> TestFunction:
    """c * f"""
    return c * f


def maximum(f: TestFunction, g: TestFunction) -> TestFunction:
    """max(f, g)"""
    return TestFunction(Max(f.ast, g.ast), max(f.arity, g.arity))


class LinearPullback(Payoff):
    """z -> base(L z), for a factor L of shape (n, r)"""

    def __init__(self, base: Payoff, factor: numpy.ndarray) -> None:
        self.base = base
        self.factor = numpy.asarray(factor, dtype=float)
        if self.factor.ndim != 2:
            raise PhiException(f'Factor must be a matrix, got shape {self.factor.shape}')
        if base.arity > self.factor.shape[0]:
            raise PhiException(f'Payoff needs {base.arity} variables, factor provides {self.factor.shape[0]}')
        self.arity = self.factor.shape[1]

    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        zs = [numpy.asarray(c, dtype=float) for c in cols[:self.arity]]
        xs = []
        for i in range(self.base.arity):
            x = 0.0
            for k, z in enumerate(zs):
                coef = self.factor[i, k]
                if coef != 0.0:
                    x = x + coef * z
            xs.append(_broadcast(x, zs, self.arity))
        return _broadcast(self.base.evaluate(xs), zs, self.arity)

    def variables(self) -> frozenset[int]:
        used = set()
        for i in self.base.variables():
            used.update(int(k) + 1 for k in numpy.nonzero(self.factor[i - 1])[0])
        return frozenset(used)

    def growth_degree(self) -> int:
        return self.base.growth_degree()


class Negated(Payoff):
    """-base"""

    def __init__(self, base: Payoff) -> None:
        self.base = base
        self.arity = base.arity

    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        return -self.base.evaluate(cols)

    def variables(self) -> frozenset[int]:
        return self.base.variables()

    def growth_degree(self) -> int:
        return self.base.growth_degree()


class SumPayoff(Payoff):
    """Sum of payoffs over a common variable numbering"""

    def __init__(self, terms: Sequence[Payoff]) -> None:
        self.terms = list(terms)
        self.arity = max((t.arity for t in self.terms), default=0)

    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        total = _broadcast(0.0, cols, self.arity)
        for term in self.terms:
            total = total + term.evaluate(cols)
        return total

    def variables(self) -> frozenset[int]:
        used: frozenset[int] = frozenset()
        for term in self.terms:
            used = used | term.variables()
        return used

    def growth_degree(self) -> int:
        return max((t.growth_degree() for t in self.terms), default=0)


def negate(payoff: Payoff) -> Payoff:
    """-payoff, symbolic when possible"""
    if isinstance(payoff, TestFunction):
        return -payoff
    if isinstance(payoff, Negated):
        return payoff.base
    return Negated(payoff)


def _split_ast(node: Node, sign: int) -> list[tuple[int, Node]]:
    """(internal) flatten top level sums into signed terms"""
    if isinstance(node, Add):
        return _split_ast(node.left, sign) + _split_ast(node.right, sign)
    if isinstance(node, Sub):
        return _split_ast(node.left, sign) + _split_ast(node.right, -sign)
    if isinstance(node, Neg):
        return _split_ast(node.operand, -sign)
    return [(sign, node)]


def split_terms(payoff: Payoff) -> list[Payoff]:
    """Top level additive terms of a payoff (their sum is the payoff)"""
    if isinstance(payoff, TestFunction):
        terms = []
        for sign, node in _split_ast(payoff.ast, 1):
            terms.append(TestFunction(node if sign > 0 else Neg(node), payoff.arity))
        return terms
    if isinstance(payoff, SumPayoff):
        return [term for sub in payoff.terms for term in split_terms(sub)]
    if isinstance(payoff, Negated):
        return [negate(term) for term in split_terms(payoff.base)]
    return [payoff]


def expand_product(a: Payoff, b: Payoff) -> Payoff:
    """a * b distributed over the top level terms of both factors"""
    products: list[Payoff] = []
    for x in split_terms(a):
        for y in split_terms(b):
            if not (isinstance(x, TestFunction) and isinstance(y, TestFunction)):
                raise PhiException('Only parsed test functions can be multiplied symbolically')
            products.append(x * y)
    if all(isinstance(p, TestFunction) for p in products):
        return compose_sum(products).with_arity(max(a.arity, b.arity))
    return SumPayoff(products)


def expand_square(a: Payoff) -> Payoff:
    """a^2 with the square distributed over the top level terms"""
    return expand_product(a, a)
