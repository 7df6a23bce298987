"""A tiny arithmetic grammar for component formulas in config files.

Allowed: numeric constants, ``pi``, variable names, ``+ - * /``, unary minus,
parentheses, ``sin`` and ``cos``. Anything else is rejected at parse time.
Formulas are evaluated with numpy, so variables may be arrays.
"""

from __future__ import annotations

import ast
from typing import Callable, Mapping

import numpy as np

__all__ = ["ExpressionError", "compile_expr"]

_FUNCS = {"sin": np.sin, "cos": np.cos}
_CONSTS = {"pi": np.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, names: frozenset[str]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, names)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, names)
        _check(node.right, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, names)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ExpressionError("only sin and cos may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], names)
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in _CONSTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"constant {node.value!r} not allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _eval(node: ast.AST, env: Mapping[str, object]):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTS[node.id]
    return float(node.value)


def compile_expr(text: str, variables) -> Callable[..., np.ndarray]:
    """Compile ``text`` into ``f(**values)`` over the given variable names.

    >>> f = compile_expr("cos(pi*u) - 2*v", ["u", "v"])
    >>> float(f(u=0.0, v=1.0))
    -1.0
    """
    names = frozenset(variables)
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree, names)
    body = tree.body

    def f(**values):
        missing = names - values.keys()
        if missing:
            raise ExpressionError(f"missing values for {sorted(missing)}")
        shape = np.broadcast(*[np.asarray(v) for v in values.values()]).shape if values else ()
        out = _eval(body, values)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    f.source = text
    return f
