"""Exact sparse multivariate polynomial arithmetic over the rationals.

Coefficients are `fractions.Fraction` throughout and every operation is
closed over them, so algebraic identities checked elsewhere in the package
hold exactly rather than to rounding error.  Polynomials are immutable after
construction and safe to share between threads.

Variables are written ``x1 .. xn``.  Substitution targets (semigroup maps,
scaling pullbacks) may carry one extra formal parameter; by convention the
parameter always occupies the *last* variable slot, see `parse_polynomial`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

Scalar = Union[int, Fraction]
Exponents = Tuple[int, ...]


def grlex_key(exps: Exponents):
    """Sort key: graded order, then lexicographic with x1 largest."""
    return (sum(exps), tuple(-e for e in exps))


class Polynomial:
    """Sparse polynomial: map from exponent vectors to nonzero rationals."""

    __slots__ = ("n_vars", "_terms")

    def __init__(self, n_vars: int, terms: Optional[Mapping[Exponents, Scalar]] = None):
        if n_vars < 1:
            raise ValueError("n_vars must be a positive integer")
        clean: dict = {}
        if terms:
            for exps, coeff in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != n_vars:
                    raise ValueError(f"exponent vector {exps} has length {len(exps)}, expected {n_vars}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                c = Fraction(coeff)
                if c:
                    prev = clean.get(exps)
                    c = c + prev if prev is not None else c
                    if c:
                        clean[exps] = c
                    else:
                        del clean[exps]
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int) -> "Polynomial":
        return cls(n_vars)

    @classmethod
    def constant(cls, value: Scalar, n_vars: int) -> "Polynomial":
        return cls(n_vars, {(0,) * n_vars: Fraction(value)})

    @classmethod
    def variable(cls, index: int, n_vars: int) -> "Polynomial":
        """The monomial x_index (1-based)."""
        if not 1 <= index <= n_vars:
            raise ValueError(f"variable index {index} out of range 1..{n_vars}")
        exps = tuple(1 if i == index - 1 else 0 for i in range(n_vars))
        return cls(n_vars, {exps: 1})

    # -- inspection --------------------------------------------------------

    def terms(self) -> list:
        """Term list in canonical order: degree descending, x1 leading."""
        return sorted(self._terms.items(),
                      key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))

    def raw_terms(self) -> Mapping[Exponents, Fraction]:
        return self._terms

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def total_degree(self) -> int:
        """Largest term degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def homogeneity_degree(self) -> Optional[int]:
        """Common total degree of all terms, or None if degrees are mixed.

        Rejects the zero polynomial (every degree would fit vacuously).
        """
        if not self._terms:
            raise ValueError("homogeneity degree of the zero polynomial is undefined")
        degrees = {sum(e) for e in self._terms}
        if len(degrees) == 1:
            return degrees.pop()
        return None

    # -- ring operations ---------------------------------------------------

    def _check_same_ring(self, other: "Polynomial") -> None:
        if self.n_vars != other.n_vars:
            raise ValueError(f"mismatched n_vars: {self.n_vars} vs {other.n_vars}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.n_vars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_same_ring(other)
        res = dict(self._terms)
        for exps, c in other._terms.items():
            v = res.get(exps, 0) + c
            if v:
                res[exps] = v
            else:
                res.pop(exps, None)
        return Polynomial(self.n_vars, res)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.n_vars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return Polynomial.zero(self.n_vars)
            return Polynomial(self.n_vars, {e: cc * c for e, cc in self._terms.items()})
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_same_ring(other)
        res: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                v = res.get(key, 0) + c1 * c2
                if v:
                    res[key] = v
                else:
                    del res[key]
        return Polynomial(self.n_vars, res)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, int) or power < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(1, self.n_vars)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base if power > 1 else base
            power >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.n_vars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n_vars == other.n_vars and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_vars, frozenset(self._terms.items())))

    def __bool__(self):
        return bool(self._terms)

    # -- calculus ----------------------------------------------------------

    def partial(self, index: int) -> "Polynomial":
        """Exact partial derivative with respect to x_index (1-based)."""
        if not 1 <= index <= self.n_vars:
            raise ValueError(f"variable index {index} out of range 1..{self.n_vars}")
        i = index - 1
        res: dict = {}
        for exps, c in self._terms.items():
            e = exps[i]
            if e == 0:
                continue
            key = exps[:i] + (e - 1,) + exps[i + 1:]
            v = res.get(key, 0) + c * e
            if v:
                res[key] = v
            else:
                del res[key]
        return Polynomial(self.n_vars, res)

    def gradient(self) -> Tuple["Polynomial", ...]:
        return tuple(self.partial(i) for i in range(1, self.n_vars + 1))

    # -- substitution & evaluation ------------------------------------------

    def evaluate(self, values: Sequence):
        """Evaluate at a point.  Exact for int/Fraction inputs, float for floats."""
        if len(values) != self.n_vars:
            raise ValueError(f"expected {self.n_vars} values, got {len(values)}")
        total = 0
        for exps, c in self._terms.items():
            term = c
            for v, e in zip(values, exps):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def substitute(self, replacements: Sequence["Polynomial"]) -> "Polynomial":
        """Exact substitution x_i -> replacements[i-1].

        All replacement polynomials must share one ring; the result lives in
        that ring (which may carry extra variables, e.g. a formal parameter).
        """
        if len(replacements) != self.n_vars:
            raise ValueError(f"expected {self.n_vars} replacement polynomials, got {len(replacements)}")
        target_n = replacements[0].n_vars
        for g in replacements:
            if g.n_vars != target_n:
                raise ValueError("replacement polynomials live in different rings")
        # cache powers of each replacement as needed
        powers: list = [{0: Polynomial.constant(1, target_n)} for _ in replacements]

        def power(i: int, e: int) -> Polynomial:
            cache = powers[i]
            if e not in cache:
                cache[e] = power(i, e - 1) * replacements[i]
            return cache[e]

        total = Polynomial.zero(target_n)
        for exps, c in self._terms.items():
            term = Polynomial.constant(c, target_n)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            total = total + term
        return total

    def lift(self, extra: int = 1) -> "Polynomial":
        """Embed into a ring with `extra` additional trailing variables."""
        if extra < 0:
            raise ValueError("extra must be nonnegative")
        if extra == 0:
            return self
        pad = (0,) * extra
        return Polynomial(self.n_vars + extra, {e + pad: c for e, c in self._terms.items()})

    def permute_vars(self, perm: Sequence[int]) -> "Polynomial":
        """Relabel variables: x_i becomes x_{perm[i-1]} (perm is 1-based)."""
        if sorted(perm) != list(range(1, self.n_vars + 1)):
            raise ValueError("perm must be a permutation of 1..n_vars")
        res = {}
        for exps, c in self._terms.items():
            new = [0] * self.n_vars
            for i, e in enumerate(exps):
                new[perm[i] - 1] = e
            res[tuple(new)] = c
        return Polynomial(self.n_vars, res)

    # -- printing ------------------------------------------------------------

    def to_text(self, names: Optional[Sequence[str]] = None) -> str:
        """Canonical printer: graded-lex descending, explicit ``*`` and ``^``."""
        if not self._terms:
            return "0"
        if names is None:
            names = [f"x{i}" for i in range(1, self.n_vars + 1)]
        parts = []
        for exps, c in self.terms():
            factors = []
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Polynomial({self.n_vars}, {self.to_text()!r})"


class PolyParseError(ValueError):
    """Raised on malformed polynomial text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^/":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise PolyParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


def parse_polynomial(text: str, n_vars: int, param: Optional[str] = None) -> Polynomial:
    """Parse a sum of rational-coefficient monomials in ``x1 .. xn``.

    Caret powers and explicit ``*`` between factors, e.g. ``"x1^2 - 3/2*x1*x2"``.
    If `param` is given (say ``"a"``), occurrences of that name map to an
    extra trailing variable slot and the result has ``n_vars + 1`` variables.
    Parsing the canonical printer's output returns an equal polynomial.
    """
    tokens = _tokenize(text)
    pos = 0
    total_vars = n_vars + (1 if param is not None else 0)

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_uint(context: str) -> int:
        kind, value, at = advance()
        if kind != "num" or "." in value:
            raise PolyParseError(f"expected an integer {context}", at)
        return int(value)

    def parse_number(value: str, at: int) -> Fraction:
        try:
            coeff = Fraction(value)
        except ValueError:
            raise PolyParseError(f"malformed number {value!r}", at) from None
        if peek()[0] == "/":
            advance()
            kind, den, dat = advance()
            if kind != "num" or "." in den:
                raise PolyParseError("expected an integer denominator", dat)
            if int(den) == 0:
                raise PolyParseError("zero denominator", dat)
            coeff /= int(den)
        return coeff

    def parse_factor(coeff: Fraction, exps: list) -> Fraction:
        kind, value, at = advance()
        if kind == "num":
            return coeff * parse_number(value, at)
        if kind == "name":
            if param is not None and value == param:
                index = total_vars
            elif value.startswith("x") and value[1:].isdigit():
                index = int(value[1:])
                if not 1 <= index <= n_vars:
                    raise PolyParseError(f"variable index out of range: {value} (have x1..x{n_vars})", at)
            else:
                raise PolyParseError(f"unknown variable {value!r}", at)
            exponent = 1
            if peek()[0] == "^":
                advance()
                exponent = parse_uint("exponent")
            exps[index - 1] += exponent
            return coeff
        raise PolyParseError("expected a number or variable", at)

    terms: dict = {}

    def parse_term(sign: int) -> None:
        coeff = Fraction(sign)
        exps = [0] * total_vars
        coeff = parse_factor(coeff, exps)
        while peek()[0] == "*":
            advance()
            coeff = parse_factor(coeff, exps)
        key = tuple(exps)
        v = terms.get(key, 0) + coeff
        if v:
            terms[key] = v
        else:
            terms.pop(key, None)

    sign = 1
    if peek()[0] in "+-":
        sign = -1 if advance()[0] == "-" else 1
    parse_term(sign)
    while peek()[0] != "end":
        kind, _, at = advance()
        if kind not in "+-":
            raise PolyParseError("expected '+' or '-' between terms", at)
        parse_term(-1 if kind == "-" else 1)

    return Polynomial(total_vars, terms)
