package main

import (
	"fmt"
	"sort"
	"strings"
)

func Handler(event map[string]interface{}) interface{} {
	alert, _ := event["alert"].(map[string]interface{})
	if alert == nil {
		alert = map[string]interface{}{}
	}
	severity := "info"
	if s, ok := alert["severity"]; ok {
		severity = strings.ToLower(fmt.Sprint(s))
	}
	icons := map[string]string{"critical": "🔴", "warning": "🟠", "info": "🔵"}
	icon, ok := icons[severity]
	if !ok {
		icon = "⚪"
	}
	labels, _ := alert["labels"].(map[string]interface{})
	keys := make([]string, 0, len(labels))
	for k := range labels {
		keys = append(keys, k)
	}
	sort.Strings(keys)
	widgets := make([]interface{}, 0, len(keys))
	for _, k := range keys {
		widgets = append(widgets, map[string]interface{}{
			"decoratedText": map[string]interface{}{"topLabel": k, "text": fmt.Sprint(labels[k])},
		})
	}
	sections := make([]interface{}, 0, 1)
	if len(widgets) > 0 {
		sections = append(sections, map[string]interface{}{"widgets": widgets})
	}
	id := "unknown"
	if v, ok := alert["id"]; ok {
		id = fmt.Sprint(v)
	}
	title := "Alert"
	if v, ok := alert["title"]; ok {
		title = fmt.Sprint(v)
	}
	thread, ok := event["thread"]
	if !ok {
		thread = "default"
	}
	card := map[string]interface{}{
		"cardId": "alert-" + id,
		"card": map[string]interface{}{
			"header":   map[string]interface{}{"title": icon + " " + title, "subtitle": strings.ToUpper(severity)},
			"sections": sections,
		},
	}
	return map[string]interface{}{"thread": map[string]interface{}{"threadKey": thread}, "cardsV2": []interface{}{card}}
}
