package main

import (
	"fmt"
	"regexp"
	"sort"
	"strings"
)

var wordRe = regexp.MustCompile(`[a-z0-9']+`)

type sized interface{ size() int }

type words []string
type counts map[string]int
type ranking [][]interface{}

func (w words) size() int   { return len(w) }
func (c counts) size() int  { return len(c) }
func (r ranking) size() int { return len(r) }

// logged wraps fn so that every call appends two entries to log.
func logged[A any, R sized](name string, log *[]string, fn func(A) R) func(A) R {
	return func(arg A) R {
		*log = append(*log, "call "+name)
		result := fn(arg)
		*log = append(*log, fmt.Sprintf("%s returned %d item(s)", name, result.size()))
		return result
	}
}

func Handler(event map[string]interface{}) interface{} {
	log := []string{}
	text := ""
	if t, ok := event["text"]; ok && t != nil {
		text = fmt.Sprint(t)
	}
	n := 3
	if v, ok := event["n"].(float64); ok {
		n = int(v)
	}
	tokenize := logged("tokenize", &log, func(s string) words {
		return words(wordRe.FindAllString(strings.ToLower(s), -1))
	})
	count := logged("count", &log, func(ws words) counts {
		c := counts{}
		for _, w := range ws {
			c[w]++
		}
		return c
	})
	top := logged("top", &log, func(c counts) ranking {
		keys := make([]string, 0, len(c))
		for k := range c {
			keys = append(keys, k)
		}
		sort.Slice(keys, func(i, j int) bool {
			if c[keys[i]] != c[keys[j]] {
				return c[keys[i]] > c[keys[j]]
			}
			return keys[i] < keys[j]
		})
		if n < len(keys) {
			keys = keys[:n]
		}
		out := ranking{}
		for _, k := range keys {
			out = append(out, []interface{}{k, c[k]})
		}
		return out
	})
	ws := tokenize(text)
	best := top(count(ws))
	return map[string]interface{}{"words": len(ws), "top": best, "log": log}
}
