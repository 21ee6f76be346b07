//! Dependency multigraph of a flat specification and well-formedness.

use std::collections::BTreeSet;
use std::fmt::Write;

use indexmap::IndexMap;

use crate::ir::CoreSpec;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    /// The equation whose right-hand side mentions `to`.
    pub from: usize,
    pub to: usize,
    /// Set iff the occurrence is the first argument of `last` or `delay`.
    pub delayed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: IndexMap<String, ()>,
    edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellFormednessReport {
    pub ok: bool,
    /// A cycle `n0 -> n1 -> ... -> n0` of non-delayed edges.
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("equation `{0}` is not flat")]
    NotFlat(String),
    #[error("specification is not well-formed: cycle {}", .0.join(" -> "))]
    NotWellFormed(Vec<String>),
}

impl DependencyGraph {
    pub fn build(spec: &CoreSpec) -> Result<Self, GraphError> {
        if let Some((name, _)) = spec.equations.iter().find(|(_, e)| !e.is_flat()) {
            return Err(GraphError::NotFlat(name.clone()));
        }
        Ok(Self::build_unchecked(spec))
    }

    /// Like [`DependencyGraph::build`] but accepts nested expressions.
    pub fn build_unchecked(spec: &CoreSpec) -> Self {
        let nodes: IndexMap<String, ()> = spec.equations.keys().map(|k| (k.clone(), ())).collect();
        let mut edges = Vec::new();
        for (from, expr) in spec.equations.values().enumerate() {
            for (name, delayed) in expr.var_occurrences() {
                if let Some(to) = nodes.get_index_of(name) {
                    edges.push(Edge { from, to, delayed });
                }
            }
        }
        DependencyGraph { nodes, edges }
    }

    /// Builds a graph directly from labelled edges; used by tests.
    pub fn from_edges(names: &[&str], edges: &[(usize, usize, bool)]) -> Self {
        DependencyGraph {
            nodes: names.iter().map(|n| (n.to_string(), ())).collect(),
            edges: edges.iter().map(|&(from, to, delayed)| Edge { from, to, delayed }).collect(),
        }
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn name(&self, i: usize) -> &str {
        self.nodes.get_index(i).unwrap().0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.get_index_of(name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn strict_successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for e in self.edges.iter().filter(|e| !e.delayed) {
            succ[e.from].push(e.to);
        }
        succ
    }

    pub fn check_well_formed(&self) -> WellFormednessReport {
        match self.find_strict_cycle() {
            None => WellFormednessReport { ok: true, witness: None },
            Some(cycle) => WellFormednessReport {
                ok: false,
                witness: Some(cycle.into_iter().map(|i| self.name(i).to_string()).collect()),
            },
        }
    }

    fn find_strict_cycle(&self) -> Option<Vec<usize>> {
        let succ = self.strict_successors();
        let n = self.nodes.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; n];
        for root in 0..n {
            if color[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            color[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < succ[v].len() {
                    let w = succ[v][*next];
                    *next += 1;
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                            return Some(stack[start..].iter().map(|&(u, _)| u).collect());
                        }
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Whether `cycle` is a closed walk made of non-delayed edges.
    pub fn is_strict_cycle(&self, cycle: &[String]) -> bool {
        if cycle.is_empty() {
            return false;
        }
        let idx: Option<Vec<usize>> = cycle.iter().map(|n| self.index_of(n)).collect();
        let Some(idx) = idx else { return false };
        (0..idx.len()).all(|k| {
            let (a, b) = (idx[k], idx[(k + 1) % idx.len()]);
            self.edges.iter().any(|e| !e.delayed && e.from == a && e.to == b)
        })
    }

    /// Dependencies before dependants; ties broken by declaration order.
    pub fn topo_order_nondelayed(&self) -> Result<Vec<String>, GraphError> {
        Ok(self.topo_indices()?.into_iter().map(|i| self.name(i).to_string()).collect())
    }

    pub fn topo_indices(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.nodes.len();
        let mut pending = vec![0usize; n];
        let mut dependants = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| !e.delayed) {
            pending[e.from] += 1;
            dependants[e.to].push(e.from);
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &d in &dependants[i] {
                pending[d] -= 1;
                if pending[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if order.len() < n {
            let witness = self.check_well_formed().witness.unwrap_or_default();
            return Err(GraphError::NotWellFormed(witness));
        }
        Ok(order)
    }

    /// Graphviz rendering; delayed edges are dashed.
    pub fn to_dot(&self, spec: &CoreSpec) -> String {
        let mut out = String::from("digraph dependencies {\n");
        for name in spec.inputs.keys() {
            let _ = writeln!(out, "  \"{name}\" [shape=box];");
        }
        for name in self.nodes.keys() {
            let _ = writeln!(out, "  \"{name}\";");
        }
        for (from, expr) in spec.equations.iter() {
            for (to, delayed) in expr.var_occurrences() {
                let style = if delayed { " [style=dashed]" } else { "" };
                let _ = writeln!(out, "  \"{from}\" -> \"{to}\"{style};");
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{CoreExpr, StreamType};
    use crate::term::FunctionTerm;

    fn id(x: &str) -> CoreExpr {
        CoreExpr::lift(FunctionTerm::identity(), vec![CoreExpr::var(x)])
    }

    #[test]
    fn symmetric_cycle() {
        let mut s = CoreSpec::new();
        s.add_equation("a", id("b")).unwrap();
        s.add_equation("b", id("a")).unwrap();
        let g = DependencyGraph::build(&s).unwrap();
        assert_eq!(g.edges().len(), 2);
        let r = g.check_well_formed();
        assert!(!r.ok);
        let w = r.witness.unwrap();
        assert_eq!(w, vec!["a", "b"]);
        assert!(g.is_strict_cycle(&w));
        assert!(g.topo_order_nondelayed().is_err());
    }

    #[test]
    fn empty_graph() {
        let g = DependencyGraph::build(&CoreSpec::new()).unwrap();
        assert_eq!(g.node_count(), 0);
        assert!(g.check_well_formed().ok);
    }

    #[test]
    fn delayed_self_loop_is_fine() {
        let mut s = CoreSpec::new();
        s.add_input("x", StreamType::Unit).unwrap();
        s.add_equation("l", CoreExpr::last(CoreExpr::var("c"), CoreExpr::var("x"))).unwrap();
        s.add_equation("c", id("l")).unwrap();
        let g = DependencyGraph::build(&s).unwrap();
        assert!(g.check_well_formed().ok);
        assert_eq!(g.topo_order_nondelayed().unwrap(), vec!["l", "c"]);
        assert!(g.to_dot(&s).contains("\"l\" -> \"c\" [style=dashed]"));
    }

    #[test]
    fn nested_rejected() {
        let mut s = CoreSpec::new();
        s.add_equation("a", CoreExpr::time(CoreExpr::time(CoreExpr::Unit))).unwrap();
        assert_eq!(DependencyGraph::build(&s), Err(GraphError::NotFlat("a".into())));
    }
}
