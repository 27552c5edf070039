//! Index-space graph traversals shared by the analyses.

use std::collections::VecDeque;

/// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
/// `alive` masks removed nodes.
pub(crate) fn bfs_distances(adj: &[Vec<usize>], source: usize, alive: Option<&[bool]>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if alive.is_some_and(|a| !a[w]) {
                continue;
            }
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Strongly connected components (iterative Tarjan). Returns a component id
/// per node; removed nodes get `usize::MAX`.
pub(crate) fn strongly_connected(adj: &[Vec<usize>], alive: Option<&[bool]>) -> Vec<usize> {
    let n = adj.len();
    let is_alive = |v: usize| alive.is_none_or(|a| a[v]);
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (node, position in its neighbour list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !is_alive(root) || index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if !is_alive(w) {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Connected components of a symmetric adjacency, ids assigned in order of
/// the smallest member index.
pub(crate) fn connected_components(adj: &[Vec<usize>], alive: Option<&[bool]>) -> Vec<usize> {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for root in 0..n {
        if alive.is_some_and(|a| !a[root]) || comp[root] != usize::MAX {
            continue;
        }
        comp[root] = next;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if alive.is_some_and(|a| !a[w]) {
                    continue;
                }
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Members of the largest component; ties go to the component holding the
/// smallest node index.
pub(crate) fn largest_component(comp: &[usize]) -> Vec<usize> {
    let count = comp.iter().filter(|&&c| c != usize::MAX).map(|&c| c + 1).max().unwrap_or(0);
    if count == 0 {
        return Vec::new();
    }
    let mut sizes = vec![0usize; count];
    let mut first = vec![usize::MAX; count];
    for (v, &c) in comp.iter().enumerate() {
        if c != usize::MAX {
            sizes[c] += 1;
            first[c] = first[c].min(v);
        }
    }
    let best = (0..count)
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(first[b].cmp(&first[a])))
        .unwrap();
    comp.iter()
        .enumerate()
        .filter(|&(_, &c)| c == best)
        .map(|(v, _)| v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tarjan_finds_cycle_and_tail() {
        // 0 -> 1 -> 2 -> 0, 2 -> 3
        let adj = vec![vec![1], vec![2], vec![0, 3], vec![]];
        let c = strongly_connected(&adj, None);
        assert_eq!(c[0], c[1]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[2], c[3]);
        assert_eq!(largest_component(&c), vec![0, 1, 2]);
    }

    #[test]
    fn masked_nodes_are_skipped() {
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        let alive = [true, false, true];
        let c = connected_components(&adj, Some(&alive));
        assert_ne!(c[0], c[2]);
        assert_eq!(c[1], usize::MAX);
        let d = bfs_distances(&adj, 0, Some(&alive));
        assert_eq!(d[2], usize::MAX);
    }

    #[test]
    fn largest_component_tie_prefers_lowest_index() {
        let comp = vec![1, 1, 0, 0];
        assert_eq!(largest_component(&comp), vec![0, 1]);
    }
}
