def handler(event):
    try:
        principal = float(event["principal"])
        rate = float(event["rate"])
        years = int(event["years"])
        n = int(event.get("compounds_per_year", 1))
    except (KeyError, TypeError, ValueError) as exc:
        return {"error": f"invalid input: {exc}"}
    if principal < 0 or rate < 0 or years < 0 or n < 1:
        return {"error": "principal, rate and years must be non-negative and compounds_per_year positive"}
    balance = principal
    schedule = []
    for year in range(1, years + 1):
        for _ in range(n):
            balance *= 1 + rate / 100 / n
        schedule.append({"year": year, "balance": round(balance, 2)})
    amount = round(balance, 2)
    return {"amount": amount, "interest": round(amount - principal, 2), "schedule": schedule}
