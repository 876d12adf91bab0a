from functools import reduce

STAGES = {
    "dedupe": lambda xs: list(dict.fromkeys(xs)),
    "positive": lambda xs: [x for x in xs if x > 0],
    "square": lambda xs: [x * x for x in xs],
    "sort_desc": lambda xs: sorted(xs, reverse=True),
    "running_sum": lambda xs: reduce(lambda acc, x: acc + [acc[-1] + x if acc else x], xs, []),
}


def stage_fn(name):
    if name.startswith("take:"):
        k = int(name.split(":", 1)[1])
        return lambda xs: xs[:k]
    if name not in STAGES:
        raise KeyError(name)
    return STAGES[name]


def handler(event):
    data = [x for x in event.get("numbers", []) if isinstance(x, (int, float)) and not isinstance(x, bool)]
    names = event.get("stages", ["dedupe", "positive", "square", "sort_desc", "take:3"])
    trace = []
    for name in names:
        try:
            data = stage_fn(name)(data)
        except (KeyError, ValueError):
            return {"error": f"unknown stage: {name}"}
        trace.append({"stage": name, "count": len(data)})
    return {"result": data, "sum": sum(data), "trace": trace}
