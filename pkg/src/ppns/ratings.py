"""Sparse rating matrices and dataset ingestion.

Rows of a :class:`RatingMatrix` are always the entities whose neighbours are
computed.  In user-based CF those are users; :func:`transpose` turns the same
ratings into an item-based matrix whose rows are items, so every downstream
module is written once against "rows" and "columns".

External ids are remapped to dense 0-based indices in ascending id order, so
"ascending user id" and "ascending row index" are the same tie-break.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

MIN_RATING = 1
MAX_RATING = 5

_AXES = ("user", "item")


@dataclass(frozen=True)
class UserProfile:
    user: int
    rated_items: frozenset
    mean_rating: float
    l2_norm: float


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Immutable sparse matrix of integer star ratings.

    ``rows``, ``cols`` and ``values`` hold the entries in canonical
    (row, col) order.  ``row_ids``/``col_ids`` map dense indices back to the
    external ids found in the source file.
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    row_ids: tuple
    col_ids: tuple
    axis: str = "user"

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValidationError(f"axis must be one of {_AXES}, got {self.axis!r}")
        for name in ("rows", "cols", "values"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    # construction -----------------------------------------------------

    @classmethod
    def from_triples(cls, triples: Iterable[tuple], axis: str = "user") -> "RatingMatrix":
        """Build a matrix from ``(row_id, col_id, rating)`` triples.

        Duplicate pairs and out-of-range ratings raise :class:`ValidationError`.
        """
        triples = list(triples)
        row_ids = tuple(sorted({t[0] for t in triples}))
        col_ids = tuple(sorted({t[1] for t in triples}))
        return cls._from_external(triples, row_ids, col_ids, axis)

    @classmethod
    def _from_external(cls, triples, row_ids, col_ids, axis):
        rindex = {rid: i for i, rid in enumerate(row_ids)}
        cindex = {cid: i for i, cid in enumerate(col_ids)}
        n = len(triples)
        rows = np.empty(n, dtype=np.int64)
        cols = np.empty(n, dtype=np.int64)
        values = np.empty(n, dtype=np.int64)
        for pos, (r, c, v) in enumerate(triples):
            rows[pos] = rindex[r]
            cols[pos] = cindex[c]
            values[pos] = _check_rating(v)
        return cls._canonical(rows, cols, values, row_ids, col_ids, axis)

    @classmethod
    def _canonical(cls, rows, cols, values, row_ids, col_ids, axis):
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if len(rows) > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                at = int(np.flatnonzero(dup)[0])
                raise ValidationError(
                    f"duplicate rating for ({row_ids[rows[at]]!r}, {col_ids[cols[at]]!r})"
                )
        return cls(rows, cols, values, tuple(row_ids), tuple(col_ids), axis)

    # shape ------------------------------------------------------------

    @property
    def n_users(self) -> int:
        """Number of rows (users for a user-based matrix, items after transpose)."""
        return len(self.row_ids)

    @property
    def n_items(self) -> int:
        return len(self.col_ids)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def __len__(self):
        return self.nnz

    def __repr__(self):
        return (
            f"RatingMatrix(axis={self.axis!r}, n_users={self.n_users}, "
            f"n_items={self.n_items}, nnz={self.nnz})"
        )

    def __eq__(self, other):
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return (
            self.axis == other.axis
            and self.row_ids == other.row_ids
            and self.col_ids == other.col_ids
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    # sparse views -----------------------------------------------------

    @cached_property
    def csr(self) -> sp.csr_matrix:
        m = sp.csr_matrix(
            (self.values.astype(np.float64), (self.rows, self.cols)),
            shape=(self.n_users, self.n_items),
        )
        m.sort_indices()
        return m

    @cached_property
    def csc(self) -> sp.csc_matrix:
        m = self.csr.tocsc()
        m.sort_indices()
        return m

    @cached_property
    def sq_norms(self) -> np.ndarray:
        """Squared L2 norm of every row."""
        out = np.zeros(self.n_users)
        np.add.at(out, self.rows, self.values.astype(np.float64) ** 2)
        out.setflags(write=False)
        return out

    @cached_property
    def row_counts(self) -> np.ndarray:
        out = np.bincount(self.rows, minlength=self.n_users)
        out.setflags(write=False)
        return out

    @cached_property
    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.n_users)
        np.add.at(out, self.rows, self.values.astype(np.float64))
        out.setflags(write=False)
        return out

    @cached_property
    def global_mean(self) -> float:
        return float(self.values.mean()) if self.nnz else float("nan")

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and ratings of row ``u``, ascending by column."""
        m = self.csr
        lo, hi = m.indptr[u], m.indptr[u + 1]
        return m.indices[lo:hi], m.data[lo:hi]

    def column(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and ratings of column ``i``, ascending by row."""
        m = self.csc
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return m.indices[lo:hi], m.data[lo:hi]

    def get(self, u: int, i: int) -> int:
        """Rating of row ``u`` on column ``i``; 0 when unrated."""
        cols, vals = self.row(u)
        pos = np.searchsorted(cols, i)
        if pos < len(cols) and cols[pos] == i:
            return int(vals[pos])
        return 0

    def mean_rating(self, u: int) -> float:
        c = self.row_counts[u]
        return float(self.row_sums[u] / c) if c else float("nan")

    def profile(self, u: int) -> UserProfile:
        cols, _ = self.row(u)
        return UserProfile(
            user=u,
            rated_items=frozenset(int(c) for c in cols),
            mean_rating=self.mean_rating(u),
            l2_norm=float(np.sqrt(self.sq_norms[u])),
        )

    # id mapping -------------------------------------------------------

    @cached_property
    def _row_index(self):
        return {rid: i for i, rid in enumerate(self.row_ids)}

    @cached_property
    def _col_index(self):
        return {cid: i for i, cid in enumerate(self.col_ids)}

    def user_index(self, external_id) -> int:
        try:
            return self._row_index[external_id]
        except KeyError:
            raise ValidationError(f"unknown row id {external_id!r}") from None

    def item_index(self, external_id) -> int:
        try:
            return self._col_index[external_id]
        except KeyError:
            raise ValidationError(f"unknown column id {external_id!r}") from None

    # derived matrices ---------------------------------------------------

    def transpose(self) -> "RatingMatrix":
        return transpose(self)

    def with_rows(self, new_ids: Sequence, ratings: Sequence[dict]) -> "RatingMatrix":
        """Copy of this matrix with extra rows appended.

        ``ratings[j]`` maps column *indices* to ratings for ``new_ids[j]``.
        New ids must sort after every existing id so existing indices are
        unchanged.
        """
        if self.row_ids and new_ids and not all(nid > self.row_ids[-1] for nid in new_ids):
            raise ValidationError("appended row ids must sort after existing ids")
        add_r, add_c, add_v = [], [], []
        base = self.n_users
        for j, rmap in enumerate(ratings):
            for c, v in sorted(rmap.items()):
                add_r.append(base + j)
                add_c.append(int(c))
                add_v.append(_check_rating(v))
        rows = np.concatenate([self.rows, np.asarray(add_r, dtype=np.int64)])
        cols = np.concatenate([self.cols, np.asarray(add_c, dtype=np.int64)])
        values = np.concatenate([self.values, np.asarray(add_v, dtype=np.int64)])
        return RatingMatrix._canonical(
            rows, cols, values, self.row_ids + tuple(new_ids), self.col_ids, self.axis
        )

    # output -----------------------------------------------------------

    def triples(self):
        """External ``(row_id, col_id, rating)`` triples in canonical order."""
        rid, cid = self.row_ids, self.col_ids
        for r, c, v in zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()):
            yield rid[r], cid[c], v

    def to_csv(self, path=None) -> str:
        """Serialise as ``user,item,rating`` CSV (user = row id).

        Returns the text; writes it to ``path`` as well when given.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user", "item", "rating"])
        w.writerows(self.triples())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _check_rating(v) -> int:
    if isinstance(v, (float, np.floating)):
        if not float(v).is_integer():
            raise ValidationError(f"rating {v!r} is not integral")
        v = int(v)
    v = int(v)
    if not MIN_RATING <= v <= MAX_RATING:
        raise ValidationError(f"rating {v} outside {MIN_RATING}-{MAX_RATING}")
    return v


def _parse_rating(text, lineno, path):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"rating {text!r} is not a number", lineno, path) from None
    try:
        return _check_rating(value)
    except ValidationError as exc:
        raise ParseError(str(exc), lineno, path) from None


def _maybe_int_ids(ids):
    try:
        return [int(x) for x in ids], True
    except ValueError:
        return list(ids), False


def ingest_movielens(path) -> RatingMatrix:
    """Read a MovieLens ``u.data`` file (``user item rating timestamp``, tab separated)."""
    path = Path(path)
    triples = []
    with path.open("r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 4:
                raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", lineno, path)
            try:
                u, i, _, _ = (int(f) for f in fields)
            except ValueError:
                raise ParseError(f"non-integer field in {line.strip()!r}", lineno, path) from None
            triples.append((u, i, _parse_rating(fields[2], lineno, path)))
    return _build(triples, path)


def ingest_csv(path, user_col: str = "user", item_col: str = "item", rating_col: str = "rating") -> RatingMatrix:
    """Read a ``user,item,rating`` CSV with a header row.

    Ids that all parse as integers are stored as ``int``; otherwise as
    strings.  Extra columns are ignored.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header", 1, path) from None
        header = [h.strip() for h in header]
        try:
            ui, ii, ri = (header.index(c) for c in (user_col, item_col, rating_col))
        except ValueError:
            raise ParseError(
                f"header must contain {user_col},{item_col},{rating_col}; got {','.join(header)}", 1, path
            ) from None
        raw = []
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, path)
            raw.append((row[ui].strip(), row[ii].strip(), _parse_rating(row[ri].strip(), lineno, path)))
    users, _ = _maybe_int_ids([r[0] for r in raw])
    items, _ = _maybe_int_ids([r[1] for r in raw])
    return _build(list(zip(users, items, (r[2] for r in raw))), path)


def _build(triples, path):
    try:
        return RatingMatrix.from_triples(triples)
    except ParseError:
        raise
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def load(path, fmt: str = "movielens") -> RatingMatrix:
    if fmt == "movielens":
        return ingest_movielens(path)
    if fmt == "csv":
        return ingest_csv(path)
    raise ValidationError(f"unknown dataset format {fmt!r}")


def transpose(matrix: RatingMatrix) -> RatingMatrix:
    axis = "item" if matrix.axis == "user" else "user"
    return RatingMatrix._canonical(
        matrix.cols.copy(), matrix.rows.copy(), matrix.values.copy(),
        matrix.col_ids, matrix.row_ids, axis,
    )
