"""Potential expressions for the command line.

Grammar
-------
``polynomial``
    A polynomial in ``x1..xm`` with rational coefficients, using ``+ - * /``,
    ``^`` or ``**`` for integer powers and parentheses, e.g. ``x1^3 - 3*x1*x2^2/2``.
``wave:F=<p(s)>,G=<p(s)>``
    ``u = F(x1 + x2) + G(x1 - x2)`` for polynomials F, G in one variable
    (written in ``s`` or ``t``), e.g. ``wave:F=s^2/4,G=0``; m must be 2.
``wave:spline,seed=<int>[,knots=<int>][,bound=<float>]``
    A random natural cubic-spline pair with ``|F''| |G''| < bound``; valid on
    the box ``|x1|, |x2| <= 3``.
"""
from __future__ import annotations

import re

import numpy as np

from .errors import InvalidInputError
from .graphs import PotentialField, WavePair, random_wave_pair, wave_potential

_TOKEN = re.compile(r"^[0-9xst+\-*/^().\s]*$")
SPLINE_SPAN = 6.0


def _sympy_poly(text: str, names: list[str]):
    import sympy as sp
    from sympy.parsing.sympy_parser import parse_expr, standard_transformations

    text = text.strip()
    if not text:
        raise InvalidInputError("empty expression")
    if not _TOKEN.match(text):
        raise InvalidInputError(f"unsupported characters in {text!r}")
    syms = {n: sp.Symbol(n) for n in names}
    try:
        e = parse_expr(text.replace("^", "**"), local_dict=syms, global_dict={
            "Integer": sp.Integer, "Rational": sp.Rational, "Float": sp.Float, "Symbol": sp.Symbol},
            transformations=standard_transformations, evaluate=True)
    except Exception as exc:  # sympy raises many exception types on bad input
        raise InvalidInputError(f"cannot parse {text!r}: {exc}") from None
    e = sp.nsimplify(e, rational=True)
    free = {str(s) for s in e.free_symbols}
    if free - set(names):
        raise InvalidInputError(f"unknown symbols {sorted(free - set(names))} in {text!r}")
    gens = [syms[n] for n in names]
    try:
        poly = sp.Poly(e, *gens)
    except sp.PolynomialError:
        raise InvalidInputError(f"{text!r} is not a polynomial") from None
    return e, gens, poly


def polynomial_potential(text: str, m: int) -> PotentialField:
    """Polynomial in ``x1..xm`` with exact derivatives."""
    import sympy as sp

    if m < 1:
        raise InvalidInputError("m must be positive")
    names = [f"x{i + 1}" for i in range(m)]
    e, gens, _ = _sympy_poly(text, names)
    grad = [sp.diff(e, g) for g in gens]
    hess = [[sp.diff(gi, g) for g in gens] for gi in grad]
    third = [[[sp.diff(hij, g) for g in gens] for hij in row] for row in hess]
    fv = sp.lambdify([gens], e, "numpy")
    fg = sp.lambdify([gens], grad, "numpy")
    fh = sp.lambdify([gens], hess, "numpy")
    ft = sp.lambdify([gens], third, "numpy")
    shape3 = (m, m, m)
    return PotentialField(
        m,
        value=lambda x: float(fv(list(x))),
        gradient=lambda x: np.array(fg(list(x)), dtype=float).reshape(m),
        hessian=lambda x: np.array(fh(list(x)), dtype=float).reshape(m, m),
        third=lambda x: np.array(ft(list(x)), dtype=float).reshape(shape3),
    )


def _one_var(text: str):
    for v in ("s", "t"):
        try:
            _, _, poly = _sympy_poly(text, [v])
            coeffs = [float(c) for c in reversed(poly.all_coeffs())]
            return coeffs
        except InvalidInputError:
            continue
    raise InvalidInputError(f"{text!r} is not a polynomial in s (or t)")


def parse_wave(spec: str) -> WavePair:
    body = spec.strip()
    parts = [p.strip() for p in body.split(",") if p.strip()]
    if parts and parts[0] == "spline":
        opts = {}
        for p in parts[1:]:
            if "=" not in p:
                raise InvalidInputError(f"bad wave option {p!r}")
            k, v = (s.strip() for s in p.split("=", 1))
            opts[k] = v
        bad = set(opts) - {"seed", "knots", "bound"}
        if bad or "seed" not in opts:
            raise InvalidInputError("wave:spline needs seed=<int> and accepts knots, bound")
        try:
            rng = np.random.default_rng(int(opts["seed"]))
            return random_wave_pair(rng, knots=int(opts.get("knots", 8)),
                                    bound=float(opts.get("bound", 0.2)), span=SPLINE_SPAN)
        except ValueError as exc:
            raise InvalidInputError(str(exc)) from None
    kv = {}
    for p in parts:
        if "=" not in p:
            raise InvalidInputError(f"expected F=... and G=..., got {p!r}")
        k, v = (s.strip() for s in p.split("=", 1))
        kv[k] = v
    if set(kv) != {"F", "G"}:
        raise InvalidInputError("wave: needs exactly F=... and G=...")
    return WavePair.from_polynomials(_one_var(kv["F"]), _one_var(kv["G"]))


def parse_potential(text: str, m: int) -> tuple[PotentialField, dict]:
    """Returns the potential and a description record."""
    text = text.strip()
    if text.startswith("wave:"):
        if m != 2:
            raise InvalidInputError("wave potentials need m = 2")
        body = text[5:]
        pair = parse_wave(body)
        kind = "wave-spline" if body.strip().startswith("spline") else "wave"
        return wave_potential(pair), {"kind": kind, "text": text}
    return polynomial_potential(text, m), {"kind": "polynomial", "text": text}


def domain_half_width(desc: dict, requested: float) -> float:
    """Spline pairs are only certified on a bounded window."""
    if desc["kind"] == "wave-spline":
        return min(requested, SPLINE_SPAN / 2)
    return requested
