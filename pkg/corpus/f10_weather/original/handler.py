import json
import os
import urllib.parse
import urllib.request


def handler(event):
    key = event.get("api_key") or os.environ.get("OPENWEATHER_API_KEY")
    if not key:
        return {"error": "missing API key"}
    query = urllib.parse.urlencode({"q": event.get("city", "Berlin"), "appid": key, "units": "metric"})
    with urllib.request.urlopen(f"https://api.openweathermap.org/data/2.5/weather?{query}", timeout=10) as resp:
        data = json.load(resp)
    return {
        "city": data.get("name"),
        "temperature": data["main"]["temp"],
        "humidity": data["main"]["humidity"],
        "conditions": [w["main"] for w in data.get("weather", [])],
    }
