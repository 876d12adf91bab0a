import re

EMAIL = re.compile(r"^[^@\s]+@[^@\s]+\.[a-z]{2,}$", re.IGNORECASE)


def handler(event):
    user = event.get("user")
    if not isinstance(user, dict):
        return {"valid": False, "errors": ["user must be an object"], "user": None}
    errors = []
    name = str(user.get("name", "")).strip()
    if not name:
        errors.append("name is required")
    email = str(user.get("email", "")).strip().lower()
    if not EMAIL.match(email):
        errors.append("email is invalid")
    age = user.get("age")
    if isinstance(age, bool) or not isinstance(age, int) or not 0 < age < 150:
        errors.append("age must be an integer between 1 and 149")
    address = user.get("address") or {}
    for field in ("street", "city", "zip"):
        if not str(address.get(field, "")).strip():
            errors.append(f"address.{field} is required")
    tags = sorted({str(t).strip().lower() for t in user.get("tags", []) if str(t).strip()})
    normalized = {
        "name": " ".join(part.capitalize() for part in name.split()),
        "email": email,
        "age": age,
        "address": {f: str(address.get(f, "")).strip() for f in ("street", "city", "zip")},
        "tags": tags,
    }
    return {"valid": not errors, "errors": errors, "user": normalized}
