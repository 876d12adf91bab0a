package main

import (
	"math"
	"sort"
)

type group struct {
	units    float64
	revenue  float64
	products map[string]float64
}

func round2(x float64) float64 {
	return math.Round(x*100) / 100
}

func Handler(event map[string]interface{}) interface{} {
	minUnits := 1.0
	if m, ok := event["min_units"].(float64); ok {
		minUnits = math.Trunc(m)
	}
	raw, _ := event["records"].([]interface{})
	rejected := 0
	groups := map[string]*group{}
	for _, r := range raw {
		rec, _ := r.(map[string]interface{})
		units, okU := rec["units"].(float64)
		price, okP := rec["price"].(float64)
		if !okU || units != math.Trunc(units) || units < 0 || !okP {
			rejected++
			continue
		}
		if units < minUnits {
			continue
		}
		region, _ := rec["region"].(string)
		product, _ := rec["product"].(string)
		g, ok := groups[region]
		if !ok {
			g = &group{products: map[string]float64{}}
			groups[region] = g
		}
		revenue := units * price
		g.units += units
		g.revenue += revenue
		g.products[product] += revenue
	}
	type row struct {
		region  string
		units   float64
		revenue float64
		top     string
	}
	rows := make([]row, 0, len(groups))
	for name, g := range groups {
		top, best := "", math.Inf(-1)
		for p, rev := range g.products {
			r := round2(rev)
			if r > best || (r == best && p < top) {
				top, best = p, r
			}
		}
		rows = append(rows, row{name, g.units, round2(g.revenue), top})
	}
	sort.Slice(rows, func(i, j int) bool {
		if rows[i].revenue != rows[j].revenue {
			return rows[i].revenue > rows[j].revenue
		}
		return rows[i].region < rows[j].region
	})
	out := make([]interface{}, 0, len(rows))
	total := 0.0
	for _, r := range rows {
		total += r.revenue
		out = append(out, map[string]interface{}{
			"region": r.region, "units": r.units, "revenue": r.revenue, "top_product": r.top,
		})
	}
	return map[string]interface{}{"regions": out, "total_revenue": round2(total), "rejected": rejected}
}
