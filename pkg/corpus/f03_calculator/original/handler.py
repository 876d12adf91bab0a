OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def handler(event):
    op = event.get("op")
    a, b = event.get("a"), event.get("b")
    if op not in OPS:
        return {"error": f"unsupported operation: {op}"}
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (a, b)):
        return {"error": "operands must be numbers"}
    if op == "div" and b == 0:
        return {"error": "division by zero"}
    return {"op": op, "result": OPS[op](a, b)}
