package main

import (
	"encoding/json"
	"fmt"
	"net/http"
	"time"
)

func Handler(event map[string]interface{}) interface{} {
	url, ok := event["url"].(string)
	if !ok {
		url = "https://jsonplaceholder.typicode.com/todos"
	}
	limit := 5
	if l, ok := event["limit"].(float64); ok {
		limit = int(l)
	}
	client := http.Client{Timeout: 10 * time.Second}
	resp, err := client.Get(url)
	if err != nil {
		return map[string]interface{}{"error": err.Error()}
	}
	defer resp.Body.Close()
	var items []map[string]interface{}
	if err := json.NewDecoder(resp.Body).Decode(&items); err != nil {
		return map[string]interface{}{"error": fmt.Sprint(err)}
	}
	titles := make([]interface{}, 0, limit)
	completed := 0
	for _, item := range items {
		if c, _ := item["completed"].(bool); c {
			completed++
			if len(titles) < limit {
				t, _ := item["title"].(string)
				titles = append(titles, t)
			}
		}
	}
	return map[string]interface{}{"total": len(items), "completed": completed, "titles": titles}
}
