package main

func Handler(event map[string]interface{}) interface{} {
	a, okA := event["a"].(float64)
	b, okB := event["b"].(float64)
	if !okA || !okB {
		return map[string]interface{}{"error": "a and b must be numbers"}
	}
	return map[string]interface{}{"result": a + b}
}
