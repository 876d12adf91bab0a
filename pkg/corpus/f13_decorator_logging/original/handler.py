import functools
import re


def logged(fn):
    @functools.wraps(fn)
    def wrapper(log, *args):
        log.append(f"call {fn.__name__}")
        result = fn(*args)
        size = len(result) if hasattr(result, "__len__") else 1
        log.append(f"{fn.__name__} returned {size} item(s)")
        return result

    return wrapper


@logged
def tokenize(text):
    return re.findall(r"[a-z0-9']+", text.lower())


@logged
def count(words):
    counts = {}
    for w in words:
        counts[w] = counts.get(w, 0) + 1
    return counts


@logged
def top(counts, n):
    return [[w, c] for w, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]]


def handler(event):
    log = []
    words = tokenize(log, str(event.get("text", "")))
    counts = count(log, words)
    best = top(log, counts, int(event.get("n", 3)))
    return {"words": len(words), "top": best, "log": log}
