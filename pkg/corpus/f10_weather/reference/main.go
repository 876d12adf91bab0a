package main

import (
	"encoding/json"
	"net/http"
	"net/url"
	"os"
	"time"
)

func Handler(event map[string]interface{}) interface{} {
	key, _ := event["api_key"].(string)
	if key == "" {
		key = os.Getenv("OPENWEATHER_API_KEY")
	}
	if key == "" {
		return map[string]interface{}{"error": "missing API key"}
	}
	city, ok := event["city"].(string)
	if !ok {
		city = "Berlin"
	}
	q := url.Values{"q": {city}, "appid": {key}, "units": {"metric"}}
	client := http.Client{Timeout: 10 * time.Second}
	resp, err := client.Get("https://api.openweathermap.org/data/2.5/weather?" + q.Encode())
	if err != nil {
		return map[string]interface{}{"error": err.Error()}
	}
	defer resp.Body.Close()
	var data struct {
		Name string `json:"name"`
		Main struct {
			Temp     float64 `json:"temp"`
			Humidity float64 `json:"humidity"`
		} `json:"main"`
		Weather []struct {
			Main string `json:"main"`
		} `json:"weather"`
	}
	if err := json.NewDecoder(resp.Body).Decode(&data); err != nil {
		return map[string]interface{}{"error": err.Error()}
	}
	conditions := make([]string, 0, len(data.Weather))
	for _, w := range data.Weather {
		conditions = append(conditions, w.Main)
	}
	return map[string]interface{}{
		"city": data.Name, "temperature": data.Main.Temp, "humidity": data.Main.Humidity, "conditions": conditions,
	}
}
