def handler(event):
    value = event.get("value")
    total = event.get("total")
    if not isinstance(value, (int, float)) or not isinstance(total, (int, float)):
        return {"error": "value and total must be numbers"}
    if total == 0:
        return {"error": "total must not be zero"}
    return {"percentage": round(value / total * 100, 2)}
