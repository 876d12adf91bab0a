package main

import "fmt"

func Handler(event map[string]interface{}) interface{} {
	op, _ := event["op"].(string)
	switch op {
	case "add", "sub", "mul", "div":
	default:
		var shown interface{} = event["op"]
		if shown == nil {
			shown = "None"
		}
		return map[string]interface{}{"error": fmt.Sprintf("unsupported operation: %v", shown)}
	}
	a, okA := event["a"].(float64)
	b, okB := event["b"].(float64)
	if !okA || !okB {
		return map[string]interface{}{"error": "operands must be numbers"}
	}
	var result float64
	switch op {
	case "add":
		result = a + b
	case "sub":
		result = a - b
	case "mul":
		result = a * b
	case "div":
		if b == 0 {
			return map[string]interface{}{"error": "division by zero"}
		}
		result = a / b
	}
	return map[string]interface{}{"op": op, "result": result}
}
