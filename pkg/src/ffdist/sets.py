"""Seeded point-set generators addressed by short descriptor strings.

Grammar::

    full | empty
    random:<alpha>                  exactly floor(alpha q^d) points, seeded
    sphere:<t>                      {x : Q(x) = t} for a quadratic form
    affine:<k>                      a seeded random k-dimensional affine subspace
    affine:basis=(..)(..)[;offset=(..)]
    product:<S1>*<S2>*...           S1 x ... x Sd, each Si a comma list of field indices
    explicit:<i>,<j>,...            vector indices, or explicit:(x1,..,xd),(..)
    union(<set>|<set>|...)  intersect(<set>|<set>|...)  complement(<set>)

Every generator is a pure function of (descriptor, form, seed).
"""

from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

from .embed import PointSet
from .forms import BILINEAR, DistanceFn, Space, rank_and_det, sphere


class SetSpecError(ValueError):
    pass


def _rng(space: Space, seed: int, path: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng([int(seed), space.field.q, space.d, *path])


def _split_top(body: str) -> list[str]:
    """Split on '|' outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise SetSpecError(f"unbalanced parentheses in {body!r}")
        if ch == "|" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise SetSpecError(f"unbalanced parentheses in {body!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _vec(space: Space, text: str) -> int:
    coords = [int(c) for c in text.strip().strip("()").split(",")]
    if len(coords) != space.d or any(not 0 <= c < space.field.q for c in coords):
        raise SetSpecError(f"bad vector {text!r} for F_{space.field.q}^{space.d}")
    return space.vector(*coords)


def _random(space: Space, alpha: str, seed: int, path) -> np.ndarray:
    a = Fraction(alpha)
    if not 0 <= a <= 1:
        raise SetSpecError(f"density {alpha} outside [0, 1]")
    k = int(a * space.size)
    mask = np.zeros(space.size, dtype=bool)
    mask[_rng(space, seed, path).permutation(space.size)[:k]] = True
    return mask


def _span(space: Space, basis: list[int], offset: int) -> np.ndarray:
    F = space.field
    pts = np.array([offset], dtype=np.int64)
    for b in basis:
        pts = np.concatenate([space.add(pts, space.scale(c, b)) for c in range(F.q)])
    mask = np.zeros(space.size, dtype=bool)
    mask[pts] = True
    return mask


def _affine(space: Space, arg: str, seed: int, path) -> np.ndarray:
    if arg.startswith("basis="):
        fields = dict(part.split("=", 1) for part in arg.split(";"))
        basis = [_vec(space, v) for v in re.findall(r"\([^()]*\)", fields["basis"])]
        offset = _vec(space, fields["offset"]) if "offset" in fields else 0
        return _span(space, basis, offset)
    k = int(arg)
    if not 0 <= k <= space.d:
        raise SetSpecError(f"affine dimension {k} outside [0, {space.d}]")
    rng = _rng(space, seed, path)
    while True:
        rows = rng.integers(0, space.field.q, size=(k, space.d))
        if k == 0 or rank_and_det(space.field, rows if k == space.d else _pad(rows, space.d))[0] >= k:
            break
    basis = [space.vector(*r) for r in rows]
    return _span(space, basis, int(rng.integers(0, space.size)))


def _pad(rows: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=np.int64)
    out[:len(rows)] = rows
    return out


def _product(space: Space, arg: str) -> np.ndarray:
    factors = arg.split("*")
    if len(factors) != space.d:
        raise SetSpecError(f"product needs {space.d} factors, got {len(factors)}")
    coords = space.coords(space.all())
    mask = np.ones(space.size, dtype=bool)
    for i, fac in enumerate(factors):
        vals = [int(v) for v in fac.split(",") if v.strip()]
        if any(not 0 <= v < space.field.q for v in vals):
            raise SetSpecError(f"factor {fac!r} has entries outside the field")
        mask &= np.isin(coords[:, i], vals)
    return mask


def _explicit(space: Space, arg: str) -> np.ndarray:
    mask = np.zeros(space.size, dtype=bool)
    if "(" in arg:
        for v in re.findall(r"\([^()]*\)", arg):
            mask[_vec(space, v)] = True
        return mask
    for tok in arg.split(","):
        if tok.strip():
            i = int(tok)
            if not 0 <= i < space.size:
                raise SetSpecError(f"index {i} outside [0, {space.size})")
            mask[i] = True
    return mask


def _mask(desc: str, fn: DistanceFn, seed: int, path: tuple[int, ...]) -> np.ndarray:
    space = fn.space
    desc = desc.strip()
    m = re.fullmatch(r"(union|intersect|complement)\((.*)\)", desc)
    if m:
        op, body = m.groups()
        parts = _split_top(body)
        masks = [_mask(p, fn, seed, path + (i + 1,)) for i, p in enumerate(parts)]
        if op == "complement":
            if len(masks) != 1:
                raise SetSpecError("complement takes one set")
            return ~masks[0]
        out = masks[0].copy()
        for other in masks[1:]:
            out = out | other if op == "union" else out & other
        return out
    kind, _, arg = desc.partition(":")
    if kind == "full" and not arg:
        return np.ones(space.size, dtype=bool)
    if kind == "empty" and not arg:
        return np.zeros(space.size, dtype=bool)
    if kind == "random":
        return _random(space, arg, seed, path)
    if kind == "sphere":
        if fn.kind == BILINEAR:
            raise SetSpecError("sphere sets need a quadratic form")
        return np.array(sphere(fn, int(arg)).points)
    if kind == "affine":
        return _affine(space, arg, seed, path)
    if kind == "product":
        return _product(space, arg)
    if kind == "explicit":
        return _explicit(space, arg)
    raise SetSpecError(f"unrecognised set descriptor {desc!r}")


def make_set(desc: str, fn: DistanceFn, seed: int = 0) -> PointSet:
    """Materialise a descriptor as a PointSet (deterministic in desc, form and seed)."""
    try:
        mask = _mask(desc, fn, int(seed), ())
    except SetSpecError:
        raise
    except (ValueError, KeyError, IndexError) as exc:
        raise SetSpecError(f"{desc}: {exc}") from exc
    return PointSet(fn.space, mask, desc.strip())


__all__ = ["SetSpecError", "make_set"]
