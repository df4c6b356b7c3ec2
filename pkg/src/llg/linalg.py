"""Dense exact rational linear algebra.

Everything here works on :class:`fractions.Fraction` entries; there is no
floating point arithmetic in this module.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


class CompositionError(ValueError):
    """Two consecutive differentials do not compose to zero."""


class QMatrix:
    """A dense ``rows x cols`` matrix of rationals."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: Sequence[Sequence] | None = None):
        self.rows = rows
        self.cols = cols
        if data is None:
            self.data = [[Fraction(0)] * cols for _ in range(rows)]
        else:
            if len(data) != rows or any(len(r) != cols for r in data):
                raise ValueError("shape mismatch")
            self.data = [[Fraction(v) for v in r] for r in data]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "QMatrix":
        rows = list(rows)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, rows)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> "QMatrix":
        m = cls(rows, len(columns))
        for j, col in enumerate(columns):
            if len(col) != rows:
                raise ValueError("column length mismatch")
            for i, v in enumerate(col):
                m.data[i][j] = Fraction(v)
        return m

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        m = cls(n, n)
        for i in range(n):
            m.data[i][i] = Fraction(1)
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMatrix":
        return cls(rows, cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def __setitem__(self, ij, value):
        i, j = ij
        self.data[i][j] = Fraction(value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and self.data == other.data

    def __repr__(self) -> str:
        return f"QMatrix({self.rows}x{self.cols})"

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def copy(self) -> "QMatrix":
        m = QMatrix(self.rows, self.cols)
        m.data = [list(r) for r in self.data]
        return m

    def transpose(self) -> "QMatrix":
        return QMatrix(self.cols, self.rows, [[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        out = QMatrix(self.rows, other.cols)
        ocols = list(zip(*other.data)) if other.rows else [()] * other.cols
        for i, row in enumerate(self.data):
            nz = [(k, v) for k, v in enumerate(row) if v]
            if not nz:
                continue
            orow = out.data[i]
            for j in range(other.cols):
                col = ocols[j]
                s = Fraction(0)
                for k, v in nz:
                    c = col[k]
                    if c:
                        s += v * c
                orow[j] = s
        return out

    def apply(self, vec: Sequence) -> list[Fraction]:
        return [sum((a * b for a, b in zip(row, vec) if a and b), Fraction(0)) for row in self.data]

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.data for v in row)

    def to_json(self) -> list[list[str]]:
        return [[_q(v) for v in row] for row in self.data]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[str]]) -> "QMatrix":
        return cls.from_rows([[Fraction(v) for v in row] for row in data])


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def rref(m: QMatrix) -> tuple[QMatrix, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    a = m.copy()
    data = a.data
    pivots: list[int] = []
    r = 0
    for c in range(a.cols):
        if r >= a.rows:
            break
        piv = next((i for i in range(r, a.rows) if data[i][c] != 0), None)
        if piv is None:
            continue
        data[r], data[piv] = data[piv], data[r]
        pv = data[r][c]
        if pv != 1:
            data[r] = [v / pv for v in data[r]]
        prow = data[r]
        nz = [j for j in range(c, a.cols) if prow[j] != 0]
        for i in range(a.rows):
            if i == r:
                continue
            f = data[i][c]
            if f == 0:
                continue
            row = data[i]
            for j in nz:
                row[j] -= f * prow[j]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: QMatrix) -> int:
    """Rank over the rationals."""
    if m.rows == 0 or m.cols == 0:
        return 0
    # eliminate along the shorter side
    if m.rows > m.cols:
        m = m.transpose()
    return len(rref(m)[1])


def kernel_basis(m: QMatrix) -> list[list[Fraction]]:
    """Basis of the right nullspace ``{v : M v = 0}``; size is ``cols - rank``."""
    if m.rows == 0:
        return [[Fraction(int(i == j)) for i in range(m.cols)] for j in range(m.cols)]
    red, pivots = rref(m)
    free = [c for c in range(m.cols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * m.cols
        v[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red.data[r][f]
        basis.append(v)
    return basis


def solve(a: QMatrix, b: QMatrix) -> QMatrix:
    """Solve ``A X = B`` exactly; raises ``ValueError`` if inconsistent or not unique."""
    aug = QMatrix(a.rows, a.cols + b.cols, [list(ra) + list(rb) for ra, rb in zip(a.data, b.data)])
    red, pivots = rref(aug)
    if any(p >= a.cols for p in pivots):
        raise ValueError("inconsistent linear system")
    if len(pivots) != a.cols:
        raise ValueError("linear system has no unique solution")
    x = QMatrix(a.cols, b.cols)
    for r, pc in enumerate(pivots):
        x.data[pc] = list(red.data[r][a.cols :])
    return x


def stack_rows(mats: Iterable[QMatrix], cols: int) -> QMatrix:
    rows = []
    for m in mats:
        if m.cols != cols:
            raise ValueError("column mismatch")
        rows.extend(m.data)
    return QMatrix(len(rows), cols, rows)


def check_complex(d_list: Sequence[QMatrix]) -> None:
    """Raise :class:`CompositionError` unless ``d_{k+1} d_k = 0`` exactly."""
    for k in range(len(d_list) - 1):
        a, b = d_list[k], d_list[k + 1]
        if b.cols != a.rows:
            raise ValueError(f"d_{k+1} has {b.cols} columns but d_{k} has {a.rows} rows")
        if not (b @ a).is_zero():
            raise CompositionError(f"d_{k+1} o d_{k} != 0")


def cohomology_dims(d_list: Sequence[QMatrix], dims: Sequence[int] | None = None) -> list[int]:
    """Dimensions of H^k for the complex C^0 -> C^1 -> ... given by ``d_list``.

    ``d_list[k]`` maps C^k to C^{k+1}.  ``dims`` may be passed to fix the
    cochain dimensions (needed when ``d_list`` is empty).
    """
    if dims is None:
        if not d_list:
            raise ValueError("need dims for an empty complex")
        dims = [d.cols for d in d_list] + [d_list[-1].rows]
    dims = list(dims)
    if len(d_list) != len(dims) - 1:
        raise ValueError("need len(dims) - 1 differentials")
    for k, d in enumerate(d_list):
        if d.shape != (dims[k + 1], dims[k]):
            raise ValueError(f"d_{k} has shape {d.shape}, expected {(dims[k + 1], dims[k])}")
    check_complex(d_list)
    ranks = [rank(d) for d in d_list] + [0]
    out = []
    for k, dim in enumerate(dims):
        prev = ranks[k - 1] if k > 0 else 0
        out.append(dim - ranks[k] - prev)
    return out


def euler_characteristic(values: Sequence[int]) -> int:
    return sum((-1) ** k * v for k, v in enumerate(values))
