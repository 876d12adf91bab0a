package main

import (
	"sort"
	"strconv"
	"strings"
)

type stage func([]float64) []float64

var stages = map[string]stage{
	"dedupe": func(xs []float64) []float64 {
		seen := map[float64]bool{}
		out := []float64{}
		for _, x := range xs {
			if !seen[x] {
				seen[x] = true
				out = append(out, x)
			}
		}
		return out
	},
	"positive": func(xs []float64) []float64 {
		out := []float64{}
		for _, x := range xs {
			if x > 0 {
				out = append(out, x)
			}
		}
		return out
	},
	"square": func(xs []float64) []float64 {
		out := make([]float64, len(xs))
		for i, x := range xs {
			out[i] = x * x
		}
		return out
	},
	"sort_desc": func(xs []float64) []float64 {
		out := append([]float64{}, xs...)
		sort.Sort(sort.Reverse(sort.Float64Slice(out)))
		return out
	},
	"running_sum": func(xs []float64) []float64 {
		out := make([]float64, len(xs))
		acc := 0.0
		for i, x := range xs {
			acc += x
			out[i] = acc
		}
		return out
	},
}

func stageFn(name string) (stage, bool) {
	if strings.HasPrefix(name, "take:") {
		k, err := strconv.Atoi(name[5:])
		if err != nil {
			return nil, false
		}
		return func(xs []float64) []float64 {
			if k < 0 {
				k = len(xs) + k
				if k < 0 {
					k = 0
				}
			}
			if k > len(xs) {
				k = len(xs)
			}
			return xs[:k]
		}, true
	}
	fn, ok := stages[name]
	return fn, ok
}

func Handler(event map[string]interface{}) interface{} {
	data := []float64{}
	raw, _ := event["numbers"].([]interface{})
	for _, v := range raw {
		if x, ok := v.(float64); ok {
			data = append(data, x)
		}
	}
	names := []string{"dedupe", "positive", "square", "sort_desc", "take:3"}
	if s, ok := event["stages"].([]interface{}); ok {
		names = names[:0:0]
		for _, n := range s {
			name, _ := n.(string)
			names = append(names, name)
		}
	}
	trace := []interface{}{}
	for _, name := range names {
		fn, ok := stageFn(name)
		if !ok {
			return map[string]interface{}{"error": "unknown stage: " + name}
		}
		data = fn(data)
		trace = append(trace, map[string]interface{}{"stage": name, "count": len(data)})
	}
	sum := 0.0
	for _, x := range data {
		sum += x
	}
	return map[string]interface{}{"result": data, "sum": sum, "trace": trace}
}
