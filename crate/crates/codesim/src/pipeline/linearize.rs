use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::lowering::{FuncId, LowProgram, LowToken, Op};

/// Inlines every call whose callee sits in a different strongly connected
/// component of the call graph, transitively: an INVOKE is replaced by one
/// STORE per parameter (highest slot first, matching pop order) followed by
/// the callee's already-linearized body minus its return tokens, re-rooted
/// under the call site's scope path. The callee's locals move into fresh
/// caller slots, one block per call site, so the binding STOREs and the
/// inlined body agree on where the arguments live. Calls within a
/// component, including self-recursion, stay opaque.
pub fn linearize_all(
    program: &LowProgram,
    bodies: &BTreeMap<FuncId, Vec<LowToken>>,
) -> BTreeMap<FuncId, Vec<LowToken>> {
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = program.functions.iter().map(|_| graph.add_node(())).collect();
    for (fid, body) in bodies {
        for t in body {
            if let Op::Invoke { func, .. } = t.op {
                graph.add_edge(nodes[*fid as usize], nodes[func as usize], ());
            }
        }
    }

    // Reverse topological order: callees come before their callers.
    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; program.functions.len()];
    for (ci, comp) in components.iter().enumerate() {
        for node in comp {
            component_of[node.index()] = ci;
        }
    }

    let mut done: BTreeMap<FuncId, Vec<LowToken>> = BTreeMap::new();
    for comp in &components {
        for node in comp {
            let fid = node.index() as FuncId;
            let mut cursor = slot_span(&bodies[&fid], program.function(fid).param_count);
            let mut out = Vec::new();
            for t in &bodies[&fid] {
                let inline = match t.op {
                    Op::Invoke { func, .. } => {
                        (component_of[func as usize] != component_of[fid as usize])
                            .then_some(func)
                    }
                    _ => None,
                };
                let Some(callee) = inline else {
                    out.push(t.clone());
                    continue;
                };
                let base = cursor;
                cursor += slot_span(&done[&callee], program.function(callee).param_count);
                for slot in (0..program.function(callee).param_count).rev() {
                    out.push(LowToken {
                        op: Op::Store(base + slot),
                        path: t.path.clone(),
                        line: t.line,
                    });
                }
                for ct in &done[&callee] {
                    let op = match ct.op {
                        Op::Return | Op::RetVal => continue,
                        Op::Load(s) => Op::Load(base + s),
                        Op::Store(s) => Op::Store(base + s),
                        ref other => other.clone(),
                    };
                    let mut path = t.path.clone();
                    path.extend_from_slice(ct.path.get(1..).unwrap_or(&[]));
                    out.push(LowToken { op, path, line: ct.line });
                }
            }
            done.insert(fid, out);
        }
    }
    done
}

/// Number of local slots a body occupies: its own parameters plus every
/// slot its tokens touch (inlined callees included).
fn slot_span(body: &[LowToken], param_count: u32) -> u32 {
    let used = body
        .iter()
        .filter_map(|t| match t.op {
            Op::Load(s) | Op::Store(s) => Some(s + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    used.max(param_count)
}
