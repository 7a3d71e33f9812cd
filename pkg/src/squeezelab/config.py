"""Plain-text domain configuration files.

Format: one `key = value` pair per line, `#` starts a comment.  Recognized
keys depend on `kind`:

    kind = disc | ball | polydisc | ellipsoid | generic
    dim = <int>                  (ball, generic; disc is 1)
    radius = <float>             (disc, ball; default 1)
    radii = r1, r2, ...          (polydisc)
    coeffs = c1, c2, ...         (ellipsoid)
    rho = <expression>           (generic)
    bounding_radius = <float>    (generic, required)
    convex = true | false        (generic, default false)

The `rho` expression grammar is a signed sum of terms; each term is a product
of numeric literals and modulus powers `|zK|^P`:

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | '|' 'z' INT '|' ['^' INT]

Example: ``rho = |z1|^2 + 4*|z2|^2 - 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import domains


class ConfigError(ValueError):
    """Malformed configuration; carries file/line/column for diagnostics."""

    def __init__(self, message: str, filename: str = "<config>",
                 line: int = 0, col: int = 0):
        self.filename = filename
        self.line = line
        self.col = col
        super().__init__(f"{filename}:{line}:{col}: {message}")


_KNOWN_KEYS = {"kind", "dim", "radius", "radii", "coeffs", "rho",
               "bounding_radius", "convex"}
_KINDS = {"disc", "ball", "polydisc", "ellipsoid", "generic"}


def load_domain(path: str) -> domains.Domain:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_domain(fh.read(), filename=path)


def parse_domain(text: str, filename: str = "<config>") -> domains.Domain:
    entries: dict[str, tuple[str, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", filename, lineno, 1)
        key, _, value = line.partition("=")
        col = len(key) - len(key.lstrip()) + 1
        key = key.strip().lower()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", filename, lineno, col)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", filename, lineno, col)
        entries[key] = (value.strip(), lineno, line.index("=") + 2)

    def take(key):
        return entries.pop(key, None)

    kind_entry = take("kind")
    if kind_entry is None:
        raise ConfigError("missing required key 'kind'", filename, 0, 0)
    kind, kline, kcol = kind_entry
    kind = kind.lower()
    if kind not in _KINDS:
        raise ConfigError(f"unknown kind {kind!r}", filename, kline, kcol)

    def fval(entry, key):
        value, line, col = entry
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}",
                              filename, line, col) from None

    def flist(entry, key):
        value, line, col = entry
        try:
            return [float(p) for p in value.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers",
                              filename, line, col) from None

    def reject_leftovers():
        for key, (_, line, col) in entries.items():
            raise ConfigError(f"key {key!r} not valid for kind {kind!r}",
                              filename, line, col)

    if kind == "disc":
        radius = fval(take("radius"), "radius") if "radius" in entries else 1.0
        dim_e = take("dim")
        if dim_e is not None and int(fval(dim_e, "dim")) != 1:
            raise ConfigError("disc has dim 1", filename, dim_e[1], dim_e[2])
        reject_leftovers()
        return domains.disc(radius)
    if kind == "ball":
        dim_e = take("dim")
        if dim_e is None:
            raise ConfigError("ball requires 'dim'", filename, kline, kcol)
        dim = int(fval(dim_e, "dim"))
        radius = fval(take("radius"), "radius") if "radius" in entries else 1.0
        reject_leftovers()
        return domains.ball(dim, radius)
    if kind == "polydisc":
        radii_e = take("radii")
        if radii_e is None:
            raise ConfigError("polydisc requires 'radii'", filename, kline, kcol)
        radii = flist(radii_e, "radii")
        dim_e = take("dim")
        if dim_e is not None and int(fval(dim_e, "dim")) != len(radii):
            raise ConfigError("dim does not match number of radii",
                              filename, dim_e[1], dim_e[2])
        reject_leftovers()
        return domains.polydisc(radii)
    if kind == "ellipsoid":
        coeffs_e = take("coeffs")
        if coeffs_e is None:
            raise ConfigError("ellipsoid requires 'coeffs'", filename, kline, kcol)
        coeffs = flist(coeffs_e, "coeffs")
        dim_e = take("dim")
        if dim_e is not None and int(fval(dim_e, "dim")) != len(coeffs):
            raise ConfigError("dim does not match number of coeffs",
                              filename, dim_e[1], dim_e[2])
        reject_leftovers()
        return domains.ellipsoid(coeffs)

    # generic
    rho_e = take("rho")
    if rho_e is None:
        raise ConfigError("generic kind requires 'rho'", filename, kline, kcol)
    dim_e = take("dim")
    if dim_e is None:
        raise ConfigError("generic kind requires 'dim'", filename, kline, kcol)
    dim = int(fval(dim_e, "dim"))
    br_e = take("bounding_radius")
    if br_e is None:
        raise ConfigError("generic kind requires 'bounding_radius'",
                          filename, kline, kcol)
    bounding = fval(br_e, "bounding_radius")
    convex_e = take("convex")
    convex = False
    if convex_e is not None:
        value, line, col = convex_e
        if value.lower() not in ("true", "false"):
            raise ConfigError("convex must be true or false", filename, line, col)
        convex = value.lower() == "true"
    reject_leftovers()
    rho_fn, grad_fn = compile_rho(rho_e[0], dim, filename, rho_e[1], rho_e[2])
    return domains.generic_domain(rho_fn, dim, bounding, convex=convex,
                                  grad=grad_fn, label=f"generic[{rho_e[0]}]")


# ---------------------------------------------------------------------------
# rho expression compiler
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"
                       r"|(?P<mod>\|z(?P<idx>\d+)\|)"
                       r"|(?P<op>[\^*+-]))")


def _tokenize(expr: str, filename: str, line: int, col0: int):
    pos = 0
    tokens = []
    while pos < len(expr):
        m = _TOKEN_RE.match(expr, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f"rho: cannot parse near {expr[pos:pos+8]!r}",
                              filename, line, col0 + pos)
        if m.lastgroup != "idx":
            tokens.append((m.lastgroup, m.group(m.lastgroup),
                           col0 + m.start(m.lastgroup)))
            if m.lastgroup == "mod":
                tokens[-1] = ("mod", int(m.group("idx")), tokens[-1][2])
        pos = m.end()
    tokens.append(("end", "", col0 + len(expr)))
    return tokens


def compile_rho(expr: str, dim: int, filename: str = "<config>",
                line: int = 0, col0: int = 1):
    """Compile a rho expression into vectorized (value, gradient) callables."""
    tokens = _tokenize(expr, filename, line, col0)
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_factor():
        kind, value, col = advance()
        if kind == "num":
            return float(value), {}
        if kind == "mod":
            idx = value
            if not 1 <= idx <= dim:
                raise ConfigError(f"rho: variable z{idx} out of range for dim {dim}",
                                  filename, line, col)
            power = 1
            if peek()[0] == "op" and peek()[1] == "^":
                advance()
                pk, pv, pcol = advance()
                if pk != "num" or "." in pv or "e" in pv.lower():
                    raise ConfigError("rho: exponent must be a positive integer",
                                      filename, line, pcol)
                power = int(pv)
                if power < 1:
                    raise ConfigError("rho: exponent must be >= 1",
                                      filename, line, pcol)
            return 1.0, {idx - 1: power}
        raise ConfigError("rho: expected a number or |zK| factor",
                          filename, line, col)

    def parse_term():
        coef, powers = parse_factor()
        while peek()[0] == "op" and peek()[1] == "*":
            advance()
            c2, p2 = parse_factor()
            coef *= c2
            for k, p in p2.items():
                powers[k] = powers.get(k, 0) + p
        return coef, powers

    terms = []
    sign = 1.0
    if peek()[0] == "op" and peek()[1] in "+-":
        sign = -1.0 if advance()[1] == "-" else 1.0
    coef, powers = parse_term()
    terms.append((sign * coef, powers))
    while peek()[0] != "end":
        kind, value, col = advance()
        if kind != "op" or value not in "+-":
            raise ConfigError("rho: expected '+' or '-' between terms",
                              filename, line, col)
        sign = -1.0 if value == "-" else 1.0
        coef, powers = parse_term()
        terms.append((sign * coef, powers))

    def rho(z):
        a = np.abs(np.asarray(z, dtype=np.complex128))
        total = np.zeros(a.shape[:-1])
        for coef, powers in terms:
            t = np.full(a.shape[:-1], coef)
            for k, p in powers.items():
                t = t * a[..., k] ** p
            total += t
        return total

    def grad(z):
        zz = np.asarray(z, dtype=np.complex128)
        a = np.abs(zz)
        out = np.zeros(zz.shape, dtype=np.complex128)
        for coef, powers in terms:
            for k, p in powers.items():
                # d/d(x,y) of |z_k|^p is p |z_k|^{p-2} z_k (as a complex gradient)
                t = np.full(a.shape[:-1], coef * p, dtype=np.complex128)
                for j, pj in powers.items():
                    pe = pj - 2 if j == k else pj
                    if pe != 0:
                        t = t * a[..., j] ** pe
                out[..., k] += t * zz[..., k]
        return out

    return rho, grad
