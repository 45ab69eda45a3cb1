//! Natural-loop detection over the parsed CFG.
//!
//! Dominators come from the classic iterative RPO algorithm; a back edge is
//! an edge whose target dominates its source, and the natural loop of a back
//! edge is the header plus everything that reaches the source without
//! passing through the header. Loops sharing a header are merged.
//! Irreducible retreating edges produce no loop and are only counted.

use super::{FunctionModel, InstDetail};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// One natural loop. `blocks` is the full (inclusive) block set, so a
/// parent loop's set contains every nested loop's set. `parent` indexes
/// into the vector returned by [`detect_loops`].
#[derive(Debug, Clone)]
pub struct LoopModel {
    pub header: String,
    pub blocks: BTreeSet<String>,
    pub depth: usize,
    pub parent: Option<usize>,
    pub trip_count: Option<u64>,
    pub(crate) iv: Option<IvInfo>,
    pub(crate) induction_phis: usize,
}

/// Recognized canonical induction pattern: integer phi with constant start,
/// constant step, and a constant compare bound.
#[derive(Debug, Clone)]
pub(crate) struct IvInfo {
    pub init: i64,
    pub step: i64,
    pub bound: i64,
}

#[derive(Debug, Clone)]
pub struct LoopAnalysis {
    pub loops: Vec<LoopModel>,
    /// Retreating edges whose target does not dominate their source.
    pub irreducible_edges: usize,
}

/// Loops of `f`, ordered by header label. See [`analyze_loops`] for the
/// irreducible-edge diagnostic.
pub fn detect_loops(f: &FunctionModel) -> Vec<LoopModel> {
    analyze_loops(f).loops
}

pub fn analyze_loops(f: &FunctionModel) -> LoopAnalysis {
    if f.blocks.is_empty() {
        return LoopAnalysis {
            loops: Vec::new(),
            irreducible_edges: 0,
        };
    }

    let n = f.blocks.len();
    let index: HashMap<&str, usize> = f
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.label.as_str(), i))
        .collect();
    let mut succs = vec![Vec::new(); n];
    let mut preds = vec![Vec::new(); n];
    for (from, to) in &f.edges {
        let (Some(&u), Some(&v)) = (index.get(from.as_str()), index.get(to.as_str())) else {
            continue;
        };
        succs[u].push(v);
        preds[v].push(u);
    }

    // reverse postorder from the entry block
    let entry = 0usize;
    let mut postorder = Vec::with_capacity(n);
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
    let mut stack = vec![(entry, 0usize)];
    state[entry] = 1;
    let mut retreating = Vec::new();
    while let Some(&mut (node, ref mut edge)) = stack.last_mut() {
        if *edge < succs[node].len() {
            let next = succs[node][*edge];
            *edge += 1;
            match state[next] {
                0 => {
                    state[next] = 1;
                    stack.push((next, 0));
                }
                1 => retreating.push((node, next)),
                _ => {}
            }
        } else {
            state[node] = 2;
            postorder.push(node);
            stack.pop();
        }
    }
    let reachable: Vec<bool> = state.iter().map(|&s| s == 2).collect();
    let mut rpo_number = vec![usize::MAX; n];
    for (i, &b) in postorder.iter().rev().enumerate() {
        rpo_number[b] = i;
    }

    // iterative immediate-dominator computation over the RPO
    let mut idom = vec![usize::MAX; n];
    idom[entry] = entry;
    let rpo: Vec<usize> = postorder.iter().rev().copied().collect();
    let intersect = |idom: &[usize], rpo_number: &[usize], mut a: usize, mut b: usize| {
        while a != b {
            while rpo_number[a] > rpo_number[b] {
                a = idom[a];
            }
            while rpo_number[b] > rpo_number[a] {
                b = idom[b];
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new_idom = usize::MAX;
            for &p in &preds[b] {
                if idom[p] == usize::MAX {
                    continue;
                }
                new_idom = if new_idom == usize::MAX {
                    p
                } else {
                    intersect(&idom, &rpo_number, p, new_idom)
                };
            }
            if new_idom != usize::MAX && idom[b] != new_idom {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }
    let dominates = |a: usize, mut b: usize| -> bool {
        loop {
            if a == b {
                return true;
            }
            if b == entry || idom[b] == usize::MAX {
                return false;
            }
            b = idom[b];
        }
    };

    // classify retreating edges; back edges grow natural loops
    let mut loop_blocks: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut irreducible_edges = 0;
    for (u, v) in retreating {
        if !reachable[u] || !reachable[v] {
            continue;
        }
        if !dominates(v, u) {
            irreducible_edges += 1;
            continue;
        }
        let body = loop_blocks.entry(v).or_insert_with(|| {
            let mut s = BTreeSet::new();
            s.insert(v);
            s
        });
        let mut work = vec![u];
        while let Some(node) = work.pop() {
            if body.insert(node) {
                work.extend(preds[node].iter().copied());
            }
        }
    }

    // order by header label, then wire parents by smallest strict superset
    let mut keyed: Vec<(String, usize, BTreeSet<usize>)> = loop_blocks
        .into_iter()
        .map(|(h, blocks)| (f.blocks[h].label.clone(), h, blocks))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));

    let mut parents = vec![None; keyed.len()];
    for (i, (_, header, blocks)) in keyed.iter().enumerate() {
        let mut best: Option<(usize, usize)> = None; // (size, index)
        for (j, (_, _, other)) in keyed.iter().enumerate() {
            if i == j || !other.contains(header) || !other.is_superset(blocks) {
                continue;
            }
            if other.len() == blocks.len() {
                continue;
            }
            if best.is_none_or(|(size, _)| other.len() < size) {
                best = Some((other.len(), j));
            }
        }
        parents[i] = best.map(|(_, j)| j);
    }
    let depth_of = |mut i: usize, parents: &[Option<usize>]| {
        let mut d = 1;
        while let Some(p) = parents[i] {
            d += 1;
            i = p;
        }
        d
    };

    let loops = keyed
        .iter()
        .enumerate()
        .map(|(i, (label, header, blocks))| {
            let block_labels: BTreeSet<String> = blocks
                .iter()
                .map(|&b| f.blocks[b].label.clone())
                .collect();
            let (iv, trip_count, induction_phis) = recognize_induction(f, *header, blocks, &index);
            LoopModel {
                header: label.clone(),
                blocks: block_labels,
                depth: depth_of(i, &parents),
                parent: parents[i],
                trip_count,
                iv,
                induction_phis,
            }
        })
        .collect();

    LoopAnalysis {
        loops,
        irreducible_edges,
    }
}

fn parse_int(text: &str) -> Option<i64> {
    text.trim().parse::<i64>().ok()
}

/// Looks for the canonical induction pattern in the header: a phi with one
/// incoming value from outside the loop and one defined by a constant-step
/// add/sub inside it, compared against a constant bound.
fn recognize_induction(
    f: &FunctionModel,
    header: usize,
    blocks: &BTreeSet<usize>,
    index: &HashMap<&str, usize>,
) -> (Option<IvInfo>, Option<u64>, usize) {
    struct Candidate {
        dest: String,
        next: String,
        init: Option<i64>,
        step: i64,
    }

    // constant-step updates anywhere in the loop, keyed by destination
    let mut updates: HashMap<&str, (&str, i64)> = HashMap::new(); // dest -> (source var, step)
    let mut compares: Vec<(&str, &str, i64)> = Vec::new(); // (pred, operand, bound)
    for &b in blocks {
        for inst in &f.blocks[b].instructions {
            match &inst.detail {
                Some(InstDetail::IntBinOp {
                    dest,
                    negated,
                    lhs,
                    rhs,
                }) => {
                    let signed = |v: i64| if *negated { -v } else { v };
                    if let Some(c) = parse_int(rhs) {
                        updates.insert(dest.as_str(), (lhs.as_str(), signed(c)));
                    } else if let (Some(c), false) = (parse_int(lhs), *negated) {
                        updates.insert(dest.as_str(), (rhs.as_str(), c));
                    }
                }
                Some(InstDetail::Icmp { pred, lhs, rhs }) => {
                    if let Some(c) = parse_int(rhs) {
                        compares.push((pred.as_str(), lhs.as_str(), c));
                    } else if let Some(c) = parse_int(lhs) {
                        if let Some(mirrored) = mirror_predicate(pred) {
                            compares.push((mirrored, rhs.as_str(), c));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    let mut candidates = Vec::new();
    for inst in &f.blocks[header].instructions {
        let Some(InstDetail::Phi { dest, incoming }) = &inst.detail else {
            continue;
        };
        if incoming.len() != 2 {
            continue;
        }
        let in_loop = |label: &str| index.get(label).is_some_and(|i| blocks.contains(i));
        let (outside, inside): (Vec<_>, Vec<_>) =
            incoming.iter().partition(|(_, label)| !in_loop(label));
        if outside.len() != 1 || inside.len() != 1 {
            continue;
        }
        let next = inside[0].0.as_str();
        let Some(&(source, step)) = updates.get(next) else {
            continue;
        };
        if source != dest.as_str() || step == 0 {
            continue;
        }
        candidates.push(Candidate {
            dest: dest.clone(),
            next: next.to_string(),
            init: parse_int(&outside[0].0),
            step,
        });
    }

    let induction_phis = candidates.len();
    for cand in &candidates {
        let Some(init) = cand.init else { continue };
        let compare = compares
            .iter()
            .find(|(_, operand, _)| *operand == cand.dest || *operand == cand.next);
        let Some(&(pred, _, bound)) = compare else {
            continue;
        };
        if let Some(trips) = trip_count_for(pred, init, cand.step, bound) {
            return (
                Some(IvInfo {
                    init,
                    step: cand.step,
                    bound,
                }),
                Some(trips),
                induction_phis,
            );
        }
    }
    (None, None, induction_phis)
}

fn mirror_predicate(pred: &str) -> Option<&'static str> {
    Some(match pred {
        "slt" => "sgt",
        "sgt" => "slt",
        "sle" => "sge",
        "sge" => "sle",
        "ult" => "ugt",
        "ugt" => "ult",
        "ule" => "uge",
        "uge" => "ule",
        "ne" => "ne",
        "eq" => "eq",
        _ => return None,
    })
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + if a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn trip_count_for(pred: &str, init: i64, step: i64, bound: i64) -> Option<u64> {
    let trips = match pred {
        "slt" | "ult" if step > 0 => ceil_div(bound - init, step),
        "sle" | "ule" if step > 0 => ceil_div(bound - init + 1, step),
        "sgt" | "ugt" if step < 0 => ceil_div(init - bound, -step),
        "sge" | "uge" if step < 0 => ceil_div(init - bound + 1, -step),
        "ne" => {
            let span = bound - init;
            if span % step != 0 {
                return None;
            }
            let q = span / step;
            if q < 0 {
                return None;
            }
            q
        }
        _ => return None,
    };
    Some(trips.max(0) as u64)
}
