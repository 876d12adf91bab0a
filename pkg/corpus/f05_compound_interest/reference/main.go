package main

import "math"

func round2(x float64) float64 {
	return math.Round(x*100) / 100
}

func number(v interface{}) (float64, bool) {
	switch n := v.(type) {
	case float64:
		return n, true
	case string:
		return 0, false
	}
	return 0, false
}

func Handler(event map[string]interface{}) interface{} {
	principal, ok1 := number(event["principal"])
	rate, ok2 := number(event["rate"])
	yearsF, ok3 := number(event["years"])
	nF := 1.0
	ok4 := true
	if raw, present := event["compounds_per_year"]; present {
		nF, ok4 = number(raw)
	}
	if !ok1 || !ok2 || !ok3 || !ok4 {
		return map[string]interface{}{"error": "invalid input"}
	}
	years, n := int(yearsF), int(nF)
	if principal < 0 || rate < 0 || years < 0 || n < 1 {
		return map[string]interface{}{"error": "principal, rate and years must be non-negative and compounds_per_year positive"}
	}
	balance := principal
	schedule := make([]interface{}, 0, years)
	for year := 1; year <= years; year++ {
		for i := 0; i < n; i++ {
			balance *= 1 + rate/100/float64(n)
		}
		schedule = append(schedule, map[string]interface{}{"year": year, "balance": round2(balance)})
	}
	amount := round2(balance)
	return map[string]interface{}{"amount": amount, "interest": round2(amount - principal), "schedule": schedule}
}
