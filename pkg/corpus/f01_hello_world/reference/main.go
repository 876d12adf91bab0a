package main

func Handler(event map[string]interface{}) interface{} {
	name, _ := event["name"].(string)
	if name == "" {
		name = "World"
	}
	return map[string]interface{}{"message": "Hello, " + name + "!"}
}
