package main

import "math"

func Handler(event map[string]interface{}) interface{} {
	value, okV := event["value"].(float64)
	total, okT := event["total"].(float64)
	if !okV || !okT {
		return map[string]interface{}{"error": "value and total must be numbers"}
	}
	if total == 0 {
		return map[string]interface{}{"error": "total must not be zero"}
	}
	return map[string]interface{}{"percentage": math.Round(value/total*100*100) / 100}
}
