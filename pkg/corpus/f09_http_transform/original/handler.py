import json
import urllib.request


def handler(event):
    url = event.get("url", "https://jsonplaceholder.typicode.com/todos")
    limit = int(event.get("limit", 5))
    with urllib.request.urlopen(url, timeout=10) as resp:
        items = json.load(resp)
    done = [item for item in items if item.get("completed")]
    return {
        "total": len(items),
        "completed": len(done),
        "titles": [item.get("title", "") for item in done[:limit]],
    }
