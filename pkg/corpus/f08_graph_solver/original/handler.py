import heapq


def handler(event):
    graph = {}
    for u, v, w in event.get("edges", []):
        graph.setdefault(u, []).append((v, w))
        graph.setdefault(v, [])
        if not event.get("directed", False):
            graph[v].append((u, w))
    source, target = event.get("source"), event.get("target")
    if source not in graph or target not in graph:
        return {"error": "source and target must be nodes of the graph"}
    dist = {source: 0}
    prev = {}
    heap = [(0, source)]
    done = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            break
        for nxt, w in graph[node]:
            nd = d + w
            if nxt not in dist or nd < dist[nxt]:
                dist[nxt] = nd
                prev[nxt] = node
                heapq.heappush(heap, (nd, nxt))
    if target not in done:
        return {"distance": None, "path": []}
    path = [target]
    while path[-1] != source:
        path.append(prev[path[-1]])
    path.reverse()
    return {"distance": dist[target], "path": path, "visited": len(done)}
