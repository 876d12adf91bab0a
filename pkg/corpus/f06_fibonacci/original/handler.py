def fib(n):
    if n < 2:
        return n
    return fib(n - 1) + fib(n - 2)


def handler(event):
    n = event.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 0 or n > 30:
        return {"error": "n must be an integer between 0 and 30"}
    return {"n": n, "fibonacci": fib(n)}
