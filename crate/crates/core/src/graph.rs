//! Small directed-graph utilities shared by the polynomial-system and
//! grammar code: strongly connected components in a deterministic
//! bottom-up order, and reachability.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Strongly connected components of the graph on `0..n` whose edge `i -> j`
/// means "`i` depends on `j`".
///
/// Components are returned bottom-up: every component appears after all
/// components it depends on. Among components that are ready at the same
/// time, the one containing the lowest vertex index comes first. Vertices
/// inside a component are sorted.
pub fn sccs_bottom_up(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let comp = tarjan(adj);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for v in 0..n {
        members[comp[v]].push(v);
    }
    // pending[c] = number of distinct components c depends on
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            let (a, b) = (comp[v], comp[w]);
            if a != b {
                deps[a].push(b);
            }
        }
    }
    for (a, d) in deps.iter_mut().enumerate() {
        d.sort_unstable();
        d.dedup();
        for &b in d.iter() {
            dependents[b].push(a);
        }
    }
    let mut pending: Vec<usize> = deps.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| pending[c] == 0)
        .map(|c| Reverse((members[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(ncomp);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(std::mem::take(&mut members[c]));
        for &d in &dependents[c] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse((lowest(&members[d]), d)));
            }
        }
    }
    order
}

fn lowest(v: &[usize]) -> usize {
    v[0]
}

/// Iterative Tarjan; returns a component id per vertex.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(top) = call.last_mut() {
            let v = top.0;
            if let Some(&w) = adj[v].get(top.1) {
                top.1 += 1;
                if index[w] == UNSEEN {
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
                    while let Some(w) = stack.pop() {
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

/// Vertices from which some vertex in `targets` is reachable (targets
/// included).
pub fn can_reach(adj: &[Vec<usize>], targets: &[usize]) -> Vec<bool> {
    let n = adj.len();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            rev[w].push(v);
        }
    }
    let mut seen = vec![false; n];
    let mut todo: Vec<usize> = Vec::new();
    for &t in targets {
        if !seen[t] {
            seen[t] = true;
            todo.push(t);
        }
    }
    while let Some(v) = todo.pop() {
        for &u in &rev[v] {
            if !seen[u] {
                seen[u] = true;
                todo.push(u);
            }
        }
    }
    seen
}

/// Vertices reachable from `sources` (sources included).
pub fn reachable_from(adj: &[Vec<usize>], sources: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut todo: Vec<usize> = Vec::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            todo.push(s);
        }
    }
    while let Some(v) = todo.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                todo.push(w);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_bottom_up() {
        // 0 depends on 1
        let adj = vec![vec![1], vec![]];
        assert_eq!(sccs_bottom_up(&adj), vec![vec![1], vec![0]]);
    }

    #[test]
    fn cycle_and_self_loop() {
        assert_eq!(sccs_bottom_up(&[vec![0]]), vec![vec![0]]);
        assert_eq!(sccs_bottom_up(&[vec![1], vec![0]]), vec![vec![0, 1]]);
    }

    #[test]
    fn incomparable_ordered_by_lowest_index() {
        // 3 -> {2, 0}; 1 isolated; 2 <-> 4
        let adj = vec![vec![], vec![], vec![4], vec![2, 0], vec![2]];
        assert_eq!(sccs_bottom_up(&adj), vec![vec![0], vec![1], vec![2, 4], vec![3]]);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 100_000;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| if i + 1 < n { vec![i + 1] } else { vec![] })
            .collect();
        let s = sccs_bottom_up(&adj);
        assert_eq!(s.len(), n);
        assert_eq!(s[0], vec![n - 1]);
    }

    #[test]
    fn reachability() {
        let adj = vec![vec![1], vec![2], vec![], vec![0]];
        assert_eq!(can_reach(&adj, &[2]), vec![true, true, true, true]);
        assert_eq!(can_reach(&adj, &[0]), vec![true, false, false, true]);
        assert_eq!(reachable_from(&adj, &[1]), vec![false, true, true, false]);
    }
}
