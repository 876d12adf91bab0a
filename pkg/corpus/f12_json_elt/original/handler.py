from collections import defaultdict


def extract(event):
    good, rejected = [], 0
    for rec in event.get("records", []):
        units, price = rec.get("units"), rec.get("price")
        if isinstance(units, bool) or not isinstance(units, int) or units < 0 or not isinstance(price, (int, float)):
            rejected += 1
            continue
        good.append(rec)
    return good, rejected


def transform(records, min_units):
    regions = defaultdict(lambda: {"units": 0, "revenue": 0.0, "products": defaultdict(float)})
    for rec in records:
        if rec["units"] < min_units:
            continue
        revenue = rec["units"] * rec["price"]
        group = regions[rec["region"]]
        group["units"] += rec["units"]
        group["revenue"] += revenue
        group["products"][rec["product"]] += revenue
    rows = []
    for name, group in regions.items():
        top = min(group["products"].items(), key=lambda kv: (-round(kv[1], 2), kv[0]))[0]
        rows.append({"region": name, "units": group["units"], "revenue": round(group["revenue"], 2), "top_product": top})
    rows.sort(key=lambda r: (-r["revenue"], r["region"]))
    return rows


def handler(event):
    records, rejected = extract(event)
    rows = transform(records, int(event.get("min_units", 1)))
    total = round(sum(r["revenue"] for r in rows), 2)
    return {"regions": rows, "total_revenue": total, "rejected": rejected}
