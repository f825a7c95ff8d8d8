//! Segment-level beam search over a tree of scored segments.

use serde::{Deserialize, Serialize};

use crate::scalar::{cmp_desc, Real};

/// A scored segment and its possible continuations.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamNode<T> {
    pub score: T,
    pub children: Vec<BeamNode<T>>,
}

impl<T: Real> BeamNode<T> {
    pub fn leaf(score: T) -> Self {
        Self {
            score,
            children: Vec::new(),
        }
    }

    /// A linear chain of segments with the given scores. Panics on an empty
    /// slice.
    pub fn chain(scores: &[T]) -> Self {
        let (first, rest) = scores.split_first().expect("a chain needs at least one segment");
        Self {
            score: *first,
            children: if rest.is_empty() { Vec::new() } else { vec![Self::chain(rest)] },
        }
    }
}

/// A completed root-to-leaf path: child indices from the root list down,
/// and the sum of node scores along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPath<T> {
    pub path: Vec<usize>,
    pub total: T,
}

/// Largest number of nodes at any single depth of the forest. A beam at
/// least this wide never prunes.
pub fn max_width<T>(roots: &[BeamNode<T>]) -> usize {
    let mut level: Vec<&BeamNode<T>> = roots.iter().collect();
    let mut widest = 0;
    while !level.is_empty() {
        widest = widest.max(level.len());
        level = level.iter().flat_map(|n| n.children.iter()).collect();
    }
    widest
}

fn rank<T: Real>(a: &(Vec<usize>, T), b: &(Vec<usize>, T)) -> std::cmp::Ordering {
    cmp_desc(a.1, b.1).then_with(|| a.0.cmp(&b.0))
}

/// Keeps the `beam_size` best partial paths by cumulative score at every
/// depth and returns the best completed path. Paths that reach a leaf leave
/// the beam and compete only at the end. Ties prefer the lexicographically
/// smaller path. `None` for an empty forest.
pub fn beam_select<T: Real>(roots: &[BeamNode<T>], beam_size: usize) -> Option<BeamPath<T>> {
    let beam_size = beam_size.max(1);
    let mut frontier: Vec<(Vec<usize>, T, &BeamNode<T>)> = roots
        .iter()
        .enumerate()
        .map(|(i, n)| (vec![i], n.score, n))
        .collect();
    let mut finished: Vec<(Vec<usize>, T)> = Vec::new();

    while !frontier.is_empty() {
        frontier.sort_by(|a, b| rank(&(a.0.clone(), a.1), &(b.0.clone(), b.1)));
        frontier.truncate(beam_size);
        let mut next = Vec::new();
        for (path, total, node) in frontier {
            if node.children.is_empty() {
                finished.push((path, total));
                continue;
            }
            for (j, child) in node.children.iter().enumerate() {
                let mut p = path.clone();
                p.push(j);
                next.push((p, total + child.score, child));
            }
        }
        frontier = next;
    }

    finished
        .into_iter()
        .min_by(rank)
        .map(|(path, total)| BeamPath { path, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(score: f64, children: Vec<BeamNode<f64>>) -> BeamNode<f64> {
        BeamNode { score, children }
    }

    #[test]
    fn single_segments_pick_the_argmax() {
        let roots = vec![BeamNode::leaf(2.35), BeamNode::leaf(2.7587), BeamNode::leaf(1.9)];
        let best = beam_select(&roots, 1).unwrap();
        assert_eq!(best.path, vec![1]);
        assert_eq!(best.total, 2.7587);
    }

    #[test]
    fn greedy_keeps_the_first_step_leader() {
        // Root 0 leads after one step (1.0 vs 0.9) but root 1 finishes higher.
        let roots = vec![node(1.0, vec![BeamNode::leaf(0.1)]), node(0.9, vec![BeamNode::leaf(1.0)])];
        assert_eq!(beam_select(&roots, 1).unwrap().path, vec![0, 0]);
        assert_eq!(beam_select(&roots, 2).unwrap().path, vec![1, 0]);
    }

    #[test]
    fn ties_prefer_smaller_paths() {
        let roots = vec![BeamNode::leaf(1.0), BeamNode::leaf(1.0)];
        assert_eq!(beam_select(&roots, 2).unwrap().path, vec![0]);
    }

    #[test]
    fn chains_and_width() {
        let c = BeamNode::chain(&[1.0, 2.0, 3.0]);
        assert_eq!(max_width(std::slice::from_ref(&c)), 1);
        let best = beam_select(&[c], 1).unwrap();
        assert_eq!(best.path, vec![0, 0, 0]);
        assert_eq!(best.total, 6.0);
        assert!(beam_select::<f64>(&[], 3).is_none());
    }
}
