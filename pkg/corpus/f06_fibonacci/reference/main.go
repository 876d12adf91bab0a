package main

func fib(n int) int {
	if n < 2 {
		return n
	}
	return fib(n-1) + fib(n-2)
}

func Handler(event map[string]interface{}) interface{} {
	raw, ok := event["n"].(float64)
	if !ok || raw != float64(int(raw)) || raw < 0 || raw > 30 {
		return map[string]interface{}{"error": "n must be an integer between 0 and 30"}
	}
	n := int(raw)
	return map[string]interface{}{"n": n, "fibonacci": fib(n)}
}
