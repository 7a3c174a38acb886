"""Exact symbolic algebra for the commuting bosonic mode pair (x, y).

The photon-like mode x and the phonon-like mode y satisfy [x, x+] = 1,
[y, y+] = 1 and commute with each other, so every operator product reduces
to a normal-ordered polynomial in x+, x, y+, y.  Coefficients are kept
exact: each one is a polynomial in the Lamb-Dicke parameter eta with
complex-rational values, so derived moment equations can be compared
against closed forms as rational numbers, with no floating-point noise.

The module also derives the closed set of 25 moment equations
mechanically.  For a Hermitian observable A the master equation gives

    d<A>/dt = -i <[A, H]> - (kappa/2) <A x+x + x+x A> + kappa <x+ S(A) x>

where S(A) substitutes y -> y + i*eta and y+ -> y+ - i*eta (conjugation by
the recoil displacement; x and x+ are left unchanged).  Applying this to
the 25 named moment observables and projecting back onto the named set
yields the linear rate system; couplings to monomials outside the named
set are collected per row and reported, never silently dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import DegreeOverflow, ResidualError
from .params import SystemParams

ScalarLike = Union[int, Fraction, float, "ComplexRational"]

# Highest exponent any single ladder operator may carry.  The named moment
# set needs products up to x+^4 x^4 during derivation.
DEFAULT_MAX_DEGREE = 4


# ---------------------------------------------------------------------------
# exact scalars
# ---------------------------------------------------------------------------

class ComplexRational:
    """A complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: ScalarLike = 0, im=0):
        if isinstance(re, ComplexRational):
            if im != 0:
                raise ValueError("cannot add imaginary part to a ComplexRational")
            self.re, self.im = re.re, re.im
            return
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other: "ComplexRational") -> "ComplexRational":
        other = _as_crat(other)
        return ComplexRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other: "ComplexRational") -> "ComplexRational":
        other = _as_crat(other)
        return ComplexRational(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "ComplexRational") -> "ComplexRational":
        other = _as_crat(other)
        return ComplexRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: "ComplexRational") -> "ComplexRational":
        other = _as_crat(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero ComplexRational")
        return ComplexRational(
            (self.re * other.re + self.im * other.im) / den,
            (self.im * other.re - self.re * other.im) / den,
        )

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def __pow__(self, n: int) -> "ComplexRational":
        if n < 0:
            raise ValueError("negative powers not supported")
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        other = _as_crat(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        if self.im == 0:
            return f"{self.re}"
        if self.re == 0:
            return f"{self.im}j"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}j)"


def _as_crat(v) -> ComplexRational:
    return v if isinstance(v, ComplexRational) else ComplexRational(v)


ONE = ComplexRational(1)
I = ComplexRational(0, 1)


# ---------------------------------------------------------------------------
# eta-graded coefficients
# ---------------------------------------------------------------------------

class EtaCoefficient:
    """Polynomial in the Lamb-Dicke parameter eta with exact coefficients.

    Stored as a map eta-power -> ComplexRational with no zero entries.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, ScalarLike] | None = None):
        self.terms: dict[int, ComplexRational] = {}
        if terms:
            for power, value in terms.items():
                value = _as_crat(value)
                if value:
                    if power < 0:
                        raise ValueError("eta powers must be non-negative")
                    self.terms[int(power)] = value

    @classmethod
    def of(cls, value: ScalarLike, power: int = 0) -> "EtaCoefficient":
        return cls({power: value})

    @classmethod
    def zero(cls) -> "EtaCoefficient":
        return cls()

    def __add__(self, other: "EtaCoefficient") -> "EtaCoefficient":
        out = dict(self.terms)
        for p, v in other.terms.items():
            s = out.get(p, ComplexRational()) + v
            if s:
                out[p] = s
            else:
                out.pop(p, None)
        result = EtaCoefficient()
        result.terms = out
        return result

    def __sub__(self, other: "EtaCoefficient") -> "EtaCoefficient":
        return self + (-other)

    def __neg__(self) -> "EtaCoefficient":
        result = EtaCoefficient()
        result.terms = {p: -v for p, v in self.terms.items()}
        return result

    def __mul__(self, other: "EtaCoefficient") -> "EtaCoefficient":
        out: dict[int, ComplexRational] = {}
        for p1, v1 in self.terms.items():
            for p2, v2 in other.terms.items():
                s = out.get(p1 + p2, ComplexRational()) + v1 * v2
                if s:
                    out[p1 + p2] = s
                else:
                    out.pop(p1 + p2, None)
        result = EtaCoefficient()
        result.terms = out
        return result

    def scaled(self, s: ScalarLike) -> "EtaCoefficient":
        s = _as_crat(s)
        result = EtaCoefficient()
        if s:
            result.terms = {p: v * s for p, v in self.terms.items()}
        return result

    def conjugate(self) -> "EtaCoefficient":
        result = EtaCoefficient()
        result.terms = {p: v.conjugate() for p, v in self.terms.items()}
        return result

    def truncated(self, eta_order: int) -> "EtaCoefficient":
        result = EtaCoefficient()
        result.terms = {p: v for p, v in self.terms.items() if p <= eta_order}
        return result

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        return all(v.im == 0 for v in self.terms.values())

    def real_terms(self) -> dict[int, Fraction]:
        if not self.is_real():
            raise ValueError(f"coefficient {self} is not real")
        return {p: v.re for p, v in self.terms.items()}

    def evaluate(self, eta: float) -> complex:
        return sum((complex(v) * eta**p for p, v in self.terms.items()), 0j)

    def evaluate_exact(self, eta: ScalarLike) -> ComplexRational:
        e = _as_crat(eta)
        total = ComplexRational()
        for p, v in self.terms.items():
            term = v
            for _ in range(p):
                term = term * e
            total = total + term
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, EtaCoefficient):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for p in sorted(self.terms):
            v = self.terms[p]
            if p == 0:
                parts.append(f"{v}")
            elif p == 1:
                parts.append(f"{v}*eta")
            else:
                parts.append(f"{v}*eta^{p}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# monomials and polynomials
# ---------------------------------------------------------------------------

class OperatorMonomial(NamedTuple):
    """Normal-ordered monomial x+^px_dag x^px y+^py_dag y^py."""

    px_dag: int
    px: int
    py_dag: int
    py: int

    def dagger(self) -> "OperatorMonomial":
        return OperatorMonomial(self.px, self.px_dag, self.py, self.py_dag)

    @property
    def degree(self) -> int:
        return self.px_dag + self.px + self.py_dag + self.py

    @property
    def is_identity(self) -> bool:
        return self == (0, 0, 0, 0)

    def label(self) -> str:
        parts = []
        for exp, sym in zip(self, ("x+", "x", "y+", "y")):
            if exp == 1:
                parts.append(sym)
            elif exp > 1:
                parts.append(f"{sym}^{exp}")
        return " ".join(parts) if parts else "1"


IDENTITY_MONOMIAL = OperatorMonomial(0, 0, 0, 0)


def _mode_product(b1: int, a2: int) -> list[tuple[int, int]]:
    """Expand a^b1 a+^a2 into normal order: list of (contractions k, weight).

    a^b a+^c = sum_k k! C(b,k) C(c,k) a+^(c-k) a^(b-k).
    """
    out = []
    for k in range(min(b1, a2) + 1):
        out.append((k, math.factorial(k) * math.comb(b1, k) * math.comb(a2, k)))
    return out


class OperatorPolynomial:
    """Normal-ordered operator polynomial with eta-graded exact coefficients.

    Values are immutable after construction; all arithmetic returns new
    objects, so instances are safe to share between threads.
    """

    __slots__ = ("terms", "max_degree")

    def __init__(
        self,
        terms: Mapping[OperatorMonomial, EtaCoefficient] | None = None,
        max_degree: int = DEFAULT_MAX_DEGREE,
    ):
        self.max_degree = max_degree
        self.terms: dict[OperatorMonomial, EtaCoefficient] = {}
        if terms:
            for mon, coeff in terms.items():
                mon = OperatorMonomial(*mon)
                self._check_degree(mon)
                if coeff:
                    self.terms[mon] = coeff

    def _check_degree(self, mon: OperatorMonomial) -> None:
        if max(mon) > self.max_degree:
            raise DegreeOverflow(
                f"monomial {mon.label()} exceeds max exponent {self.max_degree}"
            )

    @classmethod
    def zero(cls, max_degree: int = DEFAULT_MAX_DEGREE) -> "OperatorPolynomial":
        return cls({}, max_degree)

    @classmethod
    def scalar(
        cls, value: ScalarLike, power: int = 0, max_degree: int = DEFAULT_MAX_DEGREE
    ) -> "OperatorPolynomial":
        return cls({IDENTITY_MONOMIAL: EtaCoefficient.of(value, power)}, max_degree)

    def __add__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        out = dict(self.terms)
        for mon, coeff in other.terms.items():
            s = out.get(mon, EtaCoefficient.zero()) + coeff
            if s:
                out[mon] = s
            else:
                out.pop(mon, None)
        result = OperatorPolynomial(max_degree=max(self.max_degree, other.max_degree))
        result.terms = out
        return result

    def __sub__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        return self + (-other)

    def __neg__(self) -> "OperatorPolynomial":
        result = OperatorPolynomial(max_degree=self.max_degree)
        result.terms = {m: -c for m, c in self.terms.items()}
        return result

    def scaled(self, s: ScalarLike, power: int = 0) -> "OperatorPolynomial":
        factor = EtaCoefficient.of(s, power)
        result = OperatorPolynomial(max_degree=self.max_degree)
        if factor:
            result.terms = {m: c * factor for m, c in self.terms.items()}
        return result

    def __mul__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        """Operator product, normal-ordered on the fly."""
        max_degree = max(self.max_degree, other.max_degree)
        out: dict[OperatorMonomial, EtaCoefficient] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                coeff = c1 * c2
                # x-block and y-block reorder independently; they commute.
                for kx, wx in _mode_product(m1.px, m2.px_dag):
                    for ky, wy in _mode_product(m1.py, m2.py_dag):
                        mon = OperatorMonomial(
                            m1.px_dag + m2.px_dag - kx,
                            m1.px + m2.px - kx,
                            m1.py_dag + m2.py_dag - ky,
                            m1.py + m2.py - ky,
                        )
                        if max(mon) > max_degree:
                            raise DegreeOverflow(
                                f"product monomial {mon.label()} exceeds max "
                                f"exponent {max_degree}"
                            )
                        term = coeff.scaled(wx * wy)
                        s = out.get(mon, EtaCoefficient.zero()) + term
                        if s:
                            out[mon] = s
                        else:
                            out.pop(mon, None)
        result = OperatorPolynomial(max_degree=max_degree)
        result.terms = out
        return result

    def hermitian_conjugate(self) -> "OperatorPolynomial":
        result = OperatorPolynomial(max_degree=self.max_degree)
        result.terms = {m.dagger(): c.conjugate() for m, c in self.terms.items()}
        return result

    def is_hermitian(self) -> bool:
        return self.hermitian_conjugate() == self

    def shift_y_by_i_eta(self) -> "OperatorPolynomial":
        """Substitute y -> y + i*eta and y+ -> y+ - i*eta, x unchanged.

        This is conjugation by the recoil displacement operator, which
        shifts the y mode but leaves x invariant.
        """
        out: dict[OperatorMonomial, EtaCoefficient] = {}
        for mon, coeff in self.terms.items():
            for j in range(mon.py_dag + 1):
                for k in range(mon.py + 1):
                    # (y+ - i eta)^c (y + i eta)^d binomial expansion
                    w = (
                        EtaCoefficient.of(math.comb(mon.py_dag, j))
                        * EtaCoefficient.of((-I) ** j, j)
                        * EtaCoefficient.of(math.comb(mon.py, k))
                        * EtaCoefficient.of(I**k, k)
                    )
                    new = OperatorMonomial(
                        mon.px_dag, mon.px, mon.py_dag - j, mon.py - k
                    )
                    s = out.get(new, EtaCoefficient.zero()) + coeff * w
                    if s:
                        out[new] = s
                    else:
                        out.pop(new, None)
        result = OperatorPolynomial(max_degree=self.max_degree)
        result.terms = out
        return result

    def truncated(self, eta_order: int) -> "OperatorPolynomial":
        result = OperatorPolynomial(max_degree=self.max_degree)
        result.terms = {
            m: t for m, c in self.terms.items() if (t := c.truncated(eta_order))
        }
        return result

    def coefficient(self, mon: OperatorMonomial | tuple) -> EtaCoefficient:
        return self.terms.get(OperatorMonomial(*mon), EtaCoefficient.zero())

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = [
            f"({coeff})*{mon.label()}"
            for mon, coeff in sorted(self.terms.items())
        ]
        return " + ".join(parts)


def normal_order(p: OperatorPolynomial) -> OperatorPolynomial:
    """Return the canonical normal-ordered form of p.

    Polynomials are normal-ordered by construction, so this re-canonicalizes
    (drops exact zeros) and is idempotent; products created with ``*`` have
    already been reordered through the commutators [x, x+] = [y, y+] = 1.
    """
    return OperatorPolynomial(p.terms, p.max_degree)


def commutator(a: OperatorPolynomial, b: OperatorPolynomial) -> OperatorPolynomial:
    """Normal-ordered commutator a b - b a."""
    return a * b - b * a


# atom constructors ---------------------------------------------------------

def op_x(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return OperatorPolynomial({OperatorMonomial(0, 1, 0, 0): EtaCoefficient.of(1)}, max_degree)


def op_xdag(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return OperatorPolynomial({OperatorMonomial(1, 0, 0, 0): EtaCoefficient.of(1)}, max_degree)


def op_y(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return OperatorPolynomial({OperatorMonomial(0, 0, 0, 1): EtaCoefficient.of(1)}, max_degree)


def op_ydag(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return OperatorPolynomial({OperatorMonomial(0, 0, 1, 0): EtaCoefficient.of(1)}, max_degree)


def op_identity(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return OperatorPolynomial.scalar(1, max_degree=max_degree)


def op_b(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    """Phonon annihilation operator b = y + i*eta x+x."""
    return OperatorPolynomial(
        {
            OperatorMonomial(0, 0, 0, 1): EtaCoefficient.of(1),
            OperatorMonomial(1, 1, 0, 0): EtaCoefficient.of(I, 1),
        },
        max_degree,
    )


def op_bdag(max_degree: int = DEFAULT_MAX_DEGREE) -> OperatorPolynomial:
    return op_b(max_degree).hermitian_conjugate()


# ---------------------------------------------------------------------------
# Hamiltonian and adjoint derivative
# ---------------------------------------------------------------------------

def build_hamiltonian(
    params: SystemParams, max_degree: int = DEFAULT_MAX_DEGREE
) -> OperatorPolynomial:
    """Interaction Hamiltonian over hbar in the (x, y) picture.

    H/hbar = g_eff (x + x+) + delta_eff x+x + eta^2 nu x+x x+x
             - i eta nu x+x (y - y+) + nu y+y

    eta stays symbolic (the grading); nu, delta_eff, g_eff enter as exact
    rationals of the given values.  Normal ordering turns x+x x+x into
    x+^2 x^2 + x+x.
    """
    g = Fraction(params.g_eff)
    d = Fraction(params.delta_eff)
    nu = Fraction(params.nu)
    terms = {
        OperatorMonomial(0, 1, 0, 0): EtaCoefficient.of(g),
        OperatorMonomial(1, 0, 0, 0): EtaCoefficient.of(g),
        OperatorMonomial(1, 1, 0, 0): EtaCoefficient({0: d, 2: nu}),
        OperatorMonomial(2, 2, 0, 0): EtaCoefficient.of(nu, 2),
        OperatorMonomial(1, 1, 0, 1): EtaCoefficient.of(-I * nu, 1),
        OperatorMonomial(1, 1, 1, 0): EtaCoefficient.of(I * nu, 1),
        OperatorMonomial(0, 0, 1, 1): EtaCoefficient.of(nu),
    }
    return OperatorPolynomial(terms, max_degree)


def adjoint_derivative(
    a: OperatorPolynomial,
    params: SystemParams,
    hamiltonian: OperatorPolynomial | None = None,
) -> OperatorPolynomial:
    """Heisenberg-picture derivative of <a> under the master equation.

    Returns -i [a, H] - (kappa/2)(a x+x + x+x a) + kappa x+ S(a) x with
    S the y-displacement substitution, normal-ordered and exact.
    """
    if hamiltonian is None:
        hamiltonian = build_hamiltonian(params, a.max_degree)
    kappa = Fraction(params.kappa)
    nx = OperatorPolynomial(
        {OperatorMonomial(1, 1, 0, 0): EtaCoefficient.of(1)}, a.max_degree
    )
    xdag = op_xdag(a.max_degree)
    x = op_x(a.max_degree)

    out = commutator(a, hamiltonian).scaled(-I)
    out = out + (a * nx + nx * a).scaled(-Fraction(kappa, 2))
    out = out + (xdag * a.shift_y_by_i_eta() * x).scaled(kappa)
    return out


# ---------------------------------------------------------------------------
# the 25 named moments
# ---------------------------------------------------------------------------

MOMENTS: tuple[str, ...] = ("n1", "n2", "n3") + tuple(f"k{i}" for i in range(1, 23))
MOMENT_INDEX: dict[str, int] = {name: i for i, name in enumerate(MOMENTS)}


def _moment_table() -> dict[str, OperatorPolynomial]:
    """Hermitian observable for every named moment.

    Even/odd pairs follow the convention k_even = <A + A+> and
    k_odd = i <A - A+>, which makes every named moment real.
    """
    m = OperatorMonomial

    def pair(mon: OperatorMonomial) -> tuple[dict, dict]:
        plus = {mon: EtaCoefficient.of(1), mon.dagger(): EtaCoefficient.of(1)}
        minus = {mon: EtaCoefficient.of(I), mon.dagger(): EtaCoefficient.of(-I)}
        return plus, minus

    k1, k2 = pair(m(0, 1, 0, 0))          # x +- x+
    k3, k4 = pair(m(0, 2, 0, 0))          # x^2 +- x+^2
    k5, k6 = pair(m(1, 2, 0, 0))          # x+ (x +- x+) x
    k7, k8 = pair(m(0, 0, 0, 1))          # y +- y+
    k9, k10 = pair(m(0, 0, 0, 2))         # y^2 +- y+^2
    k11, k12 = pair(m(1, 1, 0, 1))        # x+x (y +- y+)
    k13, k14 = pair(m(0, 1, 1, 1))        # (x +- x+) y+y

    def quad(py_dag: int, py: int) -> tuple[dict, dict, dict, dict]:
        # (x -+ x+)(Y -+ Y+) combinations for Y = y or y^2
        a = m(0, 1, py_dag, py)            # x Y
        b = m(0, 1, py, py_dag)            # x Y+
        c = m(1, 0, py_dag, py)            # x+ Y
        d = m(1, 0, py, py_dag)            # x+ Y+
        one, i = EtaCoefficient.of(1), EtaCoefficient.of(I)
        minus_one, minus_i = EtaCoefficient.of(-1), EtaCoefficient.of(-I)
        minus_minus = {a: one, b: minus_one, c: minus_one, d: one}
        plus_minus = {a: i, b: minus_i, c: i, d: minus_i}
        plus_plus = {a: one, b: one, c: one, d: one}
        minus_plus = {a: i, b: i, c: minus_i, d: minus_i}
        return minus_minus, plus_minus, plus_plus, minus_plus

    k15, k16, k17, k18 = quad(0, 1)
    k19, k20, k21, k22 = quad(0, 2)

    table = {
        "n1": {m(1, 1, 0, 0): EtaCoefficient.of(1)},
        "n2": {m(0, 0, 1, 1): EtaCoefficient.of(1)},
        # x+x x+x normal-ordered
        "n3": {m(2, 2, 0, 0): EtaCoefficient.of(1), m(1, 1, 0, 0): EtaCoefficient.of(1)},
        "k1": k1, "k2": k2, "k3": k3, "k4": k4, "k5": k5, "k6": k6,
        "k7": k7, "k8": k8, "k9": k9, "k10": k10,
        "k11": k11, "k12": k12, "k13": k13, "k14": k14,
        "k15": k15, "k16": k16, "k17": k17, "k18": k18,
        "k19": k19, "k20": k20, "k21": k21, "k22": k22,
    }
    return {name: OperatorPolynomial(terms) for name, terms in table.items()}


MOMENT_OPERATORS: dict[str, OperatorPolynomial] = _moment_table()

# Monomial basis spanned by the named moments (identity excluded).
NAMED_MONOMIALS: tuple[OperatorMonomial, ...] = tuple(
    sorted({mon for poly in MOMENT_OPERATORS.values() for mon in poly.terms})
)
_MONOMIAL_INDEX = {mon: i for i, mon in enumerate(NAMED_MONOMIALS)}


def _invert_exact(matrix: list[list[ComplexRational]]) -> list[list[ComplexRational]]:
    """Gauss-Jordan inversion over exact complex rationals."""
    n = len(matrix)
    aug = [row[:] + [ONE if i == j else ComplexRational() for j in range(n)]
           for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise ValueError("moment definition matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = ONE / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [vr - f * vc for vr, vc in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _moment_projection() -> list[list[ComplexRational]]:
    """Exact map from named-monomial coefficients to moment coefficients.

    With T[mon][moment] the coefficient of <mon> in the moment definition, a
    monomial-coefficient vector c decomposes as gamma = T^-1 c over the
    moments; this returns T^-1 indexed [moment][mon].
    """
    n = len(NAMED_MONOMIALS)
    T = [[ComplexRational() for _ in range(n)] for _ in range(n)]
    for j, name in enumerate(MOMENTS):
        for mon, coeff in MOMENT_OPERATORS[name].terms.items():
            if coeff.terms.keys() != {0}:
                raise ValueError("moment definitions must be eta-free")
            T[_MONOMIAL_INDEX[mon]][j] = coeff.terms[0]
    return _invert_exact(T)


_PROJECTION = _moment_projection()  # [moment][mon] of T^-1


# ---------------------------------------------------------------------------
# rate-row derivation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolicRateRow:
    """One derived moment equation: d<target>/dt as exact coefficients.

    linear_part maps moment names to real eta-graded coefficients, drive is
    the constant term, and residual collects couplings to monomials outside
    the named set (empty iff the row closes over the 25 moments).
    """

    target: str
    linear_part: dict[str, EtaCoefficient]
    drive: EtaCoefficient
    residual: OperatorPolynomial

    @property
    def is_closed(self) -> bool:
        return self.residual.is_zero()

    def truncated(self, eta_order: int) -> "SymbolicRateRow":
        linear = {}
        for name, coeff in self.linear_part.items():
            t = coeff.truncated(eta_order)
            if t:
                linear[name] = t
        return SymbolicRateRow(
            target=self.target,
            linear_part=linear,
            drive=self.drive.truncated(eta_order),
            residual=self.residual.truncated(eta_order),
        )

    def coefficient(self, name: str) -> EtaCoefficient:
        return self.linear_part.get(name, EtaCoefficient.zero())


def derive_symbolic_row(
    name: str,
    params: SystemParams,
    hamiltonian: OperatorPolynomial | None = None,
) -> SymbolicRateRow:
    """Exact (all eta orders) rate row for one named moment."""
    derivative = adjoint_derivative(MOMENT_OPERATORS[name], params, hamiltonian)

    # split monomial coefficients into named basis + residual
    coeffs = [EtaCoefficient.zero() for _ in NAMED_MONOMIALS]
    drive = EtaCoefficient.zero()
    residual_terms: dict[OperatorMonomial, EtaCoefficient] = {}
    for mon, coeff in derivative.terms.items():
        if mon.is_identity:
            drive = drive + coeff
        elif mon in _MONOMIAL_INDEX:
            coeffs[_MONOMIAL_INDEX[mon]] = coeff
        else:
            residual_terms[mon] = coeff

    linear: dict[str, EtaCoefficient] = {}
    for j, moment in enumerate(MOMENTS):
        acc = EtaCoefficient.zero()
        for i, c in enumerate(coeffs):
            if c and _PROJECTION[j][i]:
                acc = acc + c.scaled(_PROJECTION[j][i])
        if acc:
            if not acc.is_real():
                raise AssertionError(
                    f"non-real coefficient {acc} on {moment} in row {name}; "
                    "the adjoint derivative of a Hermitian observable must "
                    "project onto real moment coefficients"
                )
            linear[moment] = acc
    if not drive.is_real():
        raise AssertionError(f"non-real drive {drive} in row {name}")

    residual = OperatorPolynomial(max_degree=derivative.max_degree)
    residual.terms = residual_terms
    return SymbolicRateRow(name, linear, drive, residual)


def derive_symbolic_rows(params: SystemParams) -> list[SymbolicRateRow]:
    """Exact rate rows for all 25 named moments, in canonical order."""
    hamiltonian = build_hamiltonian(params)
    return [derive_symbolic_row(name, params, hamiltonian) for name in MOMENTS]


def derive_rate_system(
    params: SystemParams,
    eta_order: int,
    *,
    strict: bool = False,
) -> tuple[list[SymbolicRateRow], list[SymbolicRateRow]]:
    """Derive the 25 moment equations truncated at eta^eta_order.

    Returns (rows, open_rows): the truncated rows in canonical order, and
    the subset that still couples to unnamed monomials at the working order
    (their dropped couplings sit in row.residual).  With strict=True any
    such residual raises ResidualError instead.
    """
    if eta_order not in (0, 1, 2):
        raise ValueError("eta_order must be 0, 1, or 2")
    rows = [row.truncated(eta_order) for row in derive_symbolic_rows(params)]
    open_rows = [row for row in rows if not row.is_closed]
    if strict and open_rows:
        names = ", ".join(row.target for row in open_rows)
        raise ResidualError(
            f"rows {names} couple to monomials outside the 25-moment set "
            f"at order eta^{eta_order}"
        )
    return rows, open_rows


def rows_to_numeric(
    rows: Iterable[SymbolicRateRow], eta: float
) -> tuple[list[list[float]], list[float]]:
    """Evaluate symbolic rows at numeric eta: (matrix, drive) as floats.

    Evaluation is carried out in exact arithmetic and rounded once, so each
    entry is the correctly rounded value of the exact coefficient.
    """
    eta_frac = Fraction(eta)
    matrix = []
    drive = []
    for row in rows:
        line = [0.0] * len(MOMENTS)
        for name, coeff in row.linear_part.items():
            value = coeff.evaluate_exact(eta_frac)
            line[MOMENT_INDEX[name]] = float(value.re)
        matrix.append(line)
        drive.append(float(row.drive.evaluate_exact(eta_frac).re))
    return matrix, drive


def format_row(row: SymbolicRateRow, eta: float | None = None) -> str:
    """Human-readable rendering of one moment equation."""
    parts = []
    for name in MOMENTS:
        coeff = row.linear_part.get(name)
        if coeff is None:
            continue
        if eta is None:
            parts.append(f"({coeff})*{name}")
        else:
            parts.append(f"{coeff.evaluate(eta).real:+.9g}*{name}")
    if row.drive:
        if eta is None:
            parts.append(f"({row.drive})")
        else:
            parts.append(f"{row.drive.evaluate(eta).real:+.9g}")
    rhs = " + ".join(parts) if parts else "0"
    text = f"d{row.target}/dt = {rhs}"
    if not row.is_closed:
        dropped = ", ".join(
            f"({coeff})*<{mon.label()}>" for mon, coeff in sorted(row.residual.terms.items())
        )
        text += f"   [dropped: {dropped}]"
    return text
