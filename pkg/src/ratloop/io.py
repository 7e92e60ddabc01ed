"""Canonical JSON encodings for scalars, matrices, loops and simple elements.

Rationals are strings ``"p/q"`` with ``q > 0``; Gaussian rationals with a
nonzero imaginary part are ``[re, im]``; elements of a larger tower are
``{"radicands": [...], "coords": [...]}``.  Writers always emit the canonical
form, readers also accept plain integers and ``"p"`` strings.
"""

from __future__ import annotations

import json

from gmpy2 import mpq

from .elements import SimpleElement
from .errors import ParseError, RatLoopError
from .linalg import Subspace
from .loops import RationalLoop
from .poly import Poly, RatFunc
from .scalars import TowerScalar, to_mpq


# -- scalars ---------------------------------------------------------------------

def _q(x) -> str:
    x = mpq(x)
    return f"{x.numerator}/{x.denominator}"


def _parse_q(v, loc):
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise ParseError("expected a rational string", loc)
    try:
        return to_mpq(v)
    except (ValueError, ZeroDivisionError, TypeError, RatLoopError) as exc:
        raise ParseError(f"bad rational {v!r}: {exc}", loc) from None


def encode_scalar(x: TowerScalar):
    if x.tower:
        return {"radicands": list(x.tower), "coords": [_q(c) for c in x.coords()]}
    re, im = x.coords()
    return _q(re) if not im else [_q(re), _q(im)]


def decode_scalar(v, loc="$"):
    if isinstance(v, dict):
        if set(v) != {"radicands", "coords"}:
            raise ParseError("tower element needs exactly 'radicands' and 'coords'", loc)
        rad, coords = v["radicands"], v["coords"]
        if not isinstance(rad, list) or not all(isinstance(p, int) and not isinstance(p, bool) for p in rad):
            raise ParseError("radicands must be a list of integers", loc)
        if not isinstance(coords, list):
            raise ParseError("coords must be a list", loc)
        vals = [_parse_q(c, f"{loc}.coords[{i}]") for i, c in enumerate(coords)]
        return TowerScalar.from_coords(rad, vals)
    if isinstance(v, list):
        if len(v) != 2:
            raise ParseError("complex scalar must be [re, im]", loc)
        return TowerScalar(_parse_q(v[0], loc + "[0]"), _parse_q(v[1], loc + "[1]"))
    return TowerScalar(_parse_q(v, loc))


def encode_vector(v):
    return [encode_scalar(x) for x in v]


def decode_vector(v, loc="$", n=None):
    if not isinstance(v, list) or (n is not None and len(v) != n):
        raise ParseError("expected a vector" + (f" of length {n}" if n is not None else ""), loc)
    return tuple(decode_scalar(x, f"{loc}[{i}]") for i, x in enumerate(v))


def encode_matrix(A):
    return [encode_vector(row) for row in A]


def decode_matrix(v, loc="$", n=None):
    if not isinstance(v, list) or not v:
        raise ParseError("expected a nonempty matrix", loc)
    n = len(v) if n is None else n
    if len(v) != n:
        raise ParseError(f"expected {n} rows", loc)
    return [list(decode_vector(row, f"{loc}[{i}]", n)) for i, row in enumerate(v)]


# -- polynomials and loops ----------------------------------------------------------

def encode_poly(p: Poly):
    return [encode_scalar(c) for c in p.c]


def decode_poly(v, loc="$"):
    if not isinstance(v, list):
        raise ParseError("polynomial must be a coefficient list", loc)
    return Poly([decode_scalar(c, f"{loc}[{i}]") for i, c in enumerate(v)])


def encode_loop(g: RationalLoop):
    return {"n": g.n,
            "entries": [[{"num": encode_poly(f.num), "den": encode_poly(f.den)} for f in row]
                        for row in g.entries]}


def decode_loop(v, loc="$"):
    if not isinstance(v, dict) or "n" not in v or "entries" not in v:
        raise ParseError("loop needs 'n' and 'entries'", loc)
    n = v["n"]
    if not isinstance(n, int) or n < 1:
        raise ParseError("n must be a positive integer", loc + ".n")
    rows = v["entries"]
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"entries must have {n} rows", loc + ".entries")
    entries = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"row must have {n} entries", f"{loc}.entries[{i}]")
        out = []
        for j, e in enumerate(row):
            el = f"{loc}.entries[{i}][{j}]"
            if not isinstance(e, dict) or "num" not in e:
                raise ParseError("entry needs 'num' (and optionally 'den')", el)
            num = decode_poly(e["num"], el + ".num")
            den = decode_poly(e.get("den", ["1/1"]), el + ".den")
            if den.is_zero():
                raise ParseError("zero denominator", el + ".den")
            out.append(RatFunc(num, den))
        entries.append(out)
    return RationalLoop.from_entries(entries)


# -- simple elements ------------------------------------------------------------------

_FIELDS = ("alpha", "beta", "k", "V", "W", "N", "N_prime", "M", "signature", "reality")


def encode_element(e: SimpleElement):
    out = {"kind": e.kind, "alpha": encode_scalar(e.alpha)}
    if e.beta is not None:
        out["beta"] = encode_scalar(e.beta)
    if e.k is not None:
        out["k"] = e.k
    for name in ("V", "W"):
        sub = getattr(e, name)
        if sub is not None:
            out[name] = [encode_vector(b) for b in sub.basis]
    for name in ("N", "N_prime", "M"):
        A = getattr(e, name)
        if A is not None:
            out[name] = encode_matrix(A)
    if e.signature is not None:
        out["signature"] = list(e.signature)
    if e.reality is not None:
        out["reality"] = e.reality
    out["n"] = e.n
    return out


def decode_element(v, loc="$"):
    if not isinstance(v, dict) or "kind" not in v or "alpha" not in v or "n" not in v:
        raise ParseError("element needs 'kind', 'n' and 'alpha'", loc)
    unknown = set(v) - set(_FIELDS) - {"kind", "n"}
    if unknown:
        raise ParseError(f"unknown fields {sorted(unknown)}", loc)
    n = v["n"]
    kw = {"kind": v["kind"], "alpha": decode_scalar(v["alpha"], loc + ".alpha")}
    if "beta" in v:
        kw["beta"] = decode_scalar(v["beta"], loc + ".beta")
    if "k" in v:
        kw["k"] = v["k"]
    for name in ("V", "W"):
        if name in v:
            basis = v[name]
            if not isinstance(basis, list):
                raise ParseError("subspace must be a list of basis vectors", f"{loc}.{name}")
            kw[name] = Subspace(n, [decode_vector(b, f"{loc}.{name}[{i}]", n) for i, b in enumerate(basis)])
    for name in ("N", "N_prime", "M"):
        if name in v:
            kw[name] = decode_matrix(v[name], f"{loc}.{name}", n)
    if "signature" in v:
        kw["signature"] = tuple(v["signature"])
    if "reality" in v:
        kw["reality"] = v["reality"]
    return SimpleElement(**kw)


def encode_factors(factors, n):
    return {"n": n, "factors": [encode_element(e) for e in factors]}


def decode_factors(v, loc="$"):
    if not isinstance(v, dict) or "factors" not in v or "n" not in v:
        raise ParseError("factor list needs 'n' and 'factors'", loc)
    if not isinstance(v["factors"], list):
        raise ParseError("'factors' must be a list", loc + ".factors")
    out = [decode_element(e, f"{loc}.factors[{i}]") for i, e in enumerate(v["factors"])]
    if any(e.n != v["n"] for e in out):
        raise ParseError("factor dimension does not match 'n'", loc)
    return v["n"], out


# -- files ----------------------------------------------------------------------------

def dumps(obj) -> str:
    """Canonical text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text, loc="$"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{loc}:{exc.lineno}:{exc.colno}") from None


def read_json(path):
    with open(path) as fh:
        return loads(fh.read(), str(path))


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


__all__ = [
    "decode_element",
    "decode_factors",
    "decode_loop",
    "decode_matrix",
    "decode_poly",
    "decode_scalar",
    "decode_vector",
    "dumps",
    "encode_element",
    "encode_factors",
    "encode_loop",
    "encode_matrix",
    "encode_poly",
    "encode_scalar",
    "encode_vector",
    "loads",
    "read_json",
    "write_json",
]
