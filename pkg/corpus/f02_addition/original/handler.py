def handler(event):
    a = event.get("a")
    b = event.get("b")
    for v in (a, b):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return {"error": "a and b must be numbers"}
    return {"result": a + b}
