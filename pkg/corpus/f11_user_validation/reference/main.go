package main

import (
	"fmt"
	"regexp"
	"sort"
	"strings"
	"unicode"
	"unicode/utf8"
)

var email = regexp.MustCompile(`(?i)^[^@\s]+@[^@\s]+\.[a-z]{2,}$`)

func str(v interface{}) string {
	if v == nil {
		return ""
	}
	if s, ok := v.(string); ok {
		return s
	}
	return fmt.Sprint(v)
}

func capitalize(word string) string {
	r, size := utf8.DecodeRuneInString(word)
	return string(unicode.ToUpper(r)) + strings.ToLower(word[size:])
}

func Handler(event map[string]interface{}) interface{} {
	user, ok := event["user"].(map[string]interface{})
	if !ok {
		return map[string]interface{}{"valid": false, "errors": []string{"user must be an object"}, "user": nil}
	}
	errors := make([]string, 0)
	name := strings.TrimSpace(str(user["name"]))
	if name == "" {
		errors = append(errors, "name is required")
	}
	mail := strings.ToLower(strings.TrimSpace(str(user["email"])))
	if !email.MatchString(mail) {
		errors = append(errors, "email is invalid")
	}
	age, isNum := user["age"].(float64)
	if !isNum || age != float64(int(age)) || age <= 0 || age >= 150 {
		errors = append(errors, "age must be an integer between 1 and 149")
	}
	address, _ := user["address"].(map[string]interface{})
	fields := []string{"street", "city", "zip"}
	normAddr := map[string]interface{}{}
	for _, f := range fields {
		v := strings.TrimSpace(str(address[f]))
		if v == "" {
			errors = append(errors, "address."+f+" is required")
		}
		normAddr[f] = v
	}
	seen := map[string]bool{}
	tags := make([]string, 0)
	rawTags, _ := user["tags"].([]interface{})
	for _, t := range rawTags {
		s := strings.ToLower(strings.TrimSpace(str(t)))
		if s != "" && !seen[s] {
			seen[s] = true
			tags = append(tags, s)
		}
	}
	sort.Strings(tags)
	parts := strings.Fields(name)
	for i, p := range parts {
		parts[i] = capitalize(p)
	}
	return map[string]interface{}{
		"valid":  len(errors) == 0,
		"errors": errors,
		"user": map[string]interface{}{
			"name": strings.Join(parts, " "), "email": mail, "age": user["age"], "address": normAddr, "tags": tags,
		},
	}
}
