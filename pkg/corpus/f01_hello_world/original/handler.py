def handler(event):
    name = event.get("name") or "World"
    return {"message": f"Hello, {name}!"}
