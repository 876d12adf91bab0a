package main

import "container/heap"

type item struct {
	dist float64
	node string
}

type queue []item

func (q queue) Len() int { return len(q) }
func (q queue) Less(i, j int) bool {
	if q[i].dist != q[j].dist {
		return q[i].dist < q[j].dist
	}
	return q[i].node < q[j].node
}
func (q queue) Swap(i, j int)       { q[i], q[j] = q[j], q[i] }
func (q *queue) Push(x interface{}) { *q = append(*q, x.(item)) }
func (q *queue) Pop() interface{} {
	old := *q
	it := old[len(old)-1]
	*q = old[:len(old)-1]
	return it
}

type edge struct {
	to string
	w  float64
}

func Handler(event map[string]interface{}) interface{} {
	graph := map[string][]edge{}
	directed, _ := event["directed"].(bool)
	edges, _ := event["edges"].([]interface{})
	for _, raw := range edges {
		e, _ := raw.([]interface{})
		if len(e) != 3 {
			continue
		}
		u, _ := e[0].(string)
		v, _ := e[1].(string)
		w, _ := e[2].(float64)
		graph[u] = append(graph[u], edge{v, w})
		if _, ok := graph[v]; !ok {
			graph[v] = []edge{}
		}
		if !directed {
			graph[v] = append(graph[v], edge{u, w})
		}
	}
	source, _ := event["source"].(string)
	target, _ := event["target"].(string)
	_, okS := graph[source]
	_, okT := graph[target]
	if !okS || !okT {
		return map[string]interface{}{"error": "source and target must be nodes of the graph"}
	}
	dist := map[string]float64{source: 0}
	prev := map[string]string{}
	done := map[string]bool{}
	q := &queue{{0, source}}
	for q.Len() > 0 {
		cur := heap.Pop(q).(item)
		if done[cur.node] {
			continue
		}
		done[cur.node] = true
		if cur.node == target {
			break
		}
		for _, e := range graph[cur.node] {
			nd := cur.dist + e.w
			if old, seen := dist[e.to]; !seen || nd < old {
				dist[e.to] = nd
				prev[e.to] = cur.node
				heap.Push(q, item{nd, e.to})
			}
		}
	}
	if !done[target] {
		return map[string]interface{}{"distance": nil, "path": []interface{}{}}
	}
	path := []string{target}
	for path[len(path)-1] != source {
		path = append(path, prev[path[len(path)-1]])
	}
	for i, j := 0, len(path)-1; i < j; i, j = i+1, j-1 {
		path[i], path[j] = path[j], path[i]
	}
	return map[string]interface{}{"distance": dist[target], "path": path, "visited": len(done)}
}
