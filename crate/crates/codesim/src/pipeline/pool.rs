use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::lowering::{FuncId, LowProgram, INIT_NAME};

/// Unit pool for the scoped approach: functions whose strongly connected
/// component no other component calls (after linearization everything they
/// call is folded into them), plus the entry point and the global
/// initializer, which always stand on their own.
pub fn ext_unit_ids(program: &LowProgram) -> BTreeSet<FuncId> {
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = program.functions.iter().map(|_| graph.add_node(())).collect();
    for f in &program.functions {
        for callee in f.invoked() {
            graph.add_edge(nodes[f.id as usize], nodes[callee as usize], ());
        }
    }

    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; program.functions.len()];
    for (ci, comp) in components.iter().enumerate() {
        for node in comp {
            component_of[node.index()] = ci;
        }
    }
    let mut called_from_outside = vec![false; components.len()];
    for f in &program.functions {
        for callee in f.invoked() {
            let (cu, cv) = (component_of[f.id as usize], component_of[callee as usize]);
            if cu != cv {
                called_from_outside[cv] = true;
            }
        }
    }

    let mut keep = BTreeSet::new();
    for f in &program.functions {
        if !called_from_outside[component_of[f.id as usize]]
            || f.id == program.entry
            || f.name == INIT_NAME
        {
            keep.insert(f.id);
        }
    }
    keep
}
