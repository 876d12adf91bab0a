def handler(event):
    alert = event.get("alert") or {}
    severity = str(alert.get("severity", "info")).lower()
    icons = {"critical": "🔴", "warning": "🟠", "info": "🔵"}
    labels = alert.get("labels") or {}
    widgets = [{"decoratedText": {"topLabel": key, "text": str(labels[key])}} for key in sorted(labels)]
    card = {
        "cardId": f"alert-{alert.get('id', 'unknown')}",
        "card": {
            "header": {
                "title": f"{icons.get(severity, '⚪')} {alert.get('title', 'Alert')}",
                "subtitle": severity.upper(),
            },
            "sections": [{"widgets": widgets}] if widgets else [],
        },
    }
    return {"thread": {"threadKey": event.get("thread", "default")}, "cardsV2": [card]}
