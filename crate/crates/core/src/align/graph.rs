use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use super::relation::{RelationKind, SemanticRelation};
use crate::arbitrage::{BaselineEvent, BaselineOutcome};
use crate::ingest::Corpus;
use crate::model::{EventId, MarketId, OutcomeSpace, Region, YesRegion, MAX_ATOMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphIssue {
    /// Equivalent and subset on one pair; the subset is dropped.
    Conflict,
    /// Subset both ways on one pair; both are dropped.
    MutualSubset,
    /// Subset inside one equivalence class.
    SubsetWithinClass,
    /// Subset edges forming a cycle between classes.
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphDiagnostic {
    pub issue: GraphIssue,
    pub a: MarketId,
    pub b: MarketId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub components: usize,
    /// Components with at least two members.
    pub equivalence_classes: usize,
    /// Mean of `s(s−1)/2` over equivalence classes.
    pub mean_relations_per_class: f64,
    pub subset_edges: usize,
    pub diagnostics: usize,
}

/// Equivalence classes of markets plus the subset order between them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationGraph {
    components: Vec<Vec<MarketId>>,
    component_of: BTreeMap<MarketId, usize>,
    /// `(sub, super)` component pairs; acyclic.
    subset_edges: BTreeSet<(usize, usize)>,
    pub diagnostics: Vec<GraphDiagnostic>,
}

pub fn build_relation_graph(relations: &[SemanticRelation]) -> RelationGraph {
    let mut kinds: BTreeMap<(MarketId, MarketId), BTreeSet<Option<bool>>> = BTreeMap::new();
    // None = equivalent, Some(true) = a ⊂ b, Some(false) = b ⊂ a.
    for r in relations {
        let tag = match r.kind {
            RelationKind::Equivalent => None,
            RelationKind::Subset(_) => Some(r.subset_pair().expect("subset").0 == &r.a),
            RelationKind::Independent => continue,
        };
        if r.a == r.b {
            continue;
        }
        kinds.entry((r.a.clone(), r.b.clone())).or_default().insert(tag);
    }

    let mut diagnostics = Vec::new();
    let mut equivalent = Vec::new();
    let mut subsets = Vec::new();
    for ((a, b), set) in &kinds {
        let diag = |issue| GraphDiagnostic {
            issue,
            a: a.clone(),
            b: b.clone(),
        };
        if set.contains(&None) {
            if set.len() > 1 {
                diagnostics.push(diag(GraphIssue::Conflict));
            }
            equivalent.push((a, b));
        } else if set.len() == 2 {
            diagnostics.push(diag(GraphIssue::MutualSubset));
        } else if set.contains(&Some(true)) {
            subsets.push((a, b));
        } else {
            subsets.push((b, a));
        }
    }

    let nodes: BTreeSet<&MarketId> = kinds.keys().flat_map(|(a, b)| [a, b]).collect();
    let nodes: Vec<&MarketId> = nodes.into_iter().collect();
    let index: BTreeMap<&MarketId, usize> = nodes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut uf = UnionFind::<usize>::new(nodes.len());
    for (a, b) in &equivalent {
        uf.union(index[a], index[b]);
    }
    let mut groups: BTreeMap<usize, Vec<MarketId>> = BTreeMap::new();
    for (i, m) in nodes.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push((*m).clone());
    }
    let mut components: Vec<Vec<MarketId>> = groups.into_values().collect();
    components.sort();
    let component_of: BTreeMap<MarketId, usize> = components
        .iter()
        .enumerate()
        .flat_map(|(c, ms)| ms.iter().map(move |m| (m.clone(), c)))
        .collect();

    let mut lifted: BTreeMap<(usize, usize), Vec<(MarketId, MarketId)>> = BTreeMap::new();
    for (sub, sup) in subsets {
        let (cs, cp) = (component_of[sub], component_of[sup]);
        if cs == cp {
            diagnostics.push(GraphDiagnostic {
                issue: GraphIssue::SubsetWithinClass,
                a: sub.clone(),
                b: sup.clone(),
            });
        } else {
            lifted.entry((cs, cp)).or_default().push((sub.clone(), sup.clone()));
        }
    }

    let mut dag: DiGraph<usize, ()> = DiGraph::new();
    let handles: Vec<NodeIndex> = (0..components.len()).map(|c| dag.add_node(c)).collect();
    for &(s, p) in lifted.keys() {
        dag.add_edge(handles[s], handles[p], ());
    }
    let mut scc_of = vec![0usize; components.len()];
    for (i, scc) in tarjan_scc(&dag).into_iter().enumerate() {
        for n in scc {
            scc_of[dag[n]] = i;
        }
    }
    let mut subset_edges = BTreeSet::new();
    for ((s, p), pairs) in lifted {
        if scc_of[s] == scc_of[p] {
            for (a, b) in pairs {
                diagnostics.push(GraphDiagnostic {
                    issue: GraphIssue::Cycle,
                    a,
                    b,
                });
            }
        } else {
            subset_edges.insert((s, p));
        }
    }
    diagnostics.sort_by(|x, y| (x.issue, &x.a, &x.b).cmp(&(y.issue, &y.a, &y.b)));

    RelationGraph {
        components,
        component_of,
        subset_edges,
        diagnostics,
    }
}

impl RelationGraph {
    pub fn components(&self) -> &[Vec<MarketId>] {
        &self.components
    }

    pub fn component_of(&self, id: &MarketId) -> Option<usize> {
        self.component_of.get(id).copied()
    }

    pub fn subset_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.subset_edges
    }

    /// Every pair within an equivalence class, `a < b`.
    pub fn equivalent_pairs(&self) -> Vec<(MarketId, MarketId)> {
        let mut out = Vec::new();
        for comp in &self.components {
            for (i, a) in comp.iter().enumerate() {
                for b in &comp[i + 1..] {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// Components strictly above `c` in the subset order.
    pub fn ancestors(&self, c: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![c];
        while let Some(x) = stack.pop() {
            for &(_, p) in self.subset_edges.range((x, 0)..=(x, usize::MAX)) {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// `(sub, super)` market pairs under the transitive closure of the subset order.
    pub fn subset_pairs(&self) -> Vec<(MarketId, MarketId)> {
        let mut out = Vec::new();
        for (c, members) in self.components.iter().enumerate() {
            for up in self.ancestors(c) {
                for sub in members {
                    for sup in &self.components[up] {
                        out.push((sub.clone(), sup.clone()));
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn stats(&self) -> GraphStats {
        let classes: Vec<usize> = self.components.iter().map(Vec::len).filter(|&s| s >= 2).collect();
        let mean = if classes.is_empty() {
            0.0
        } else {
            classes.iter().map(|&s| (s * (s - 1) / 2) as f64).sum::<f64>() / classes.len() as f64
        };
        GraphStats {
            nodes: self.component_of.len(),
            components: self.components.len(),
            equivalence_classes: classes.len(),
            mean_relations_per_class: mean,
            subset_edges: self.subset_edges.len(),
            diagnostics: self.diagnostics.len(),
        }
    }

    /// Approximate outcome spaces, one per connected group of classes: an atom
    /// per minimal class, a remainder atom per class with subsets below it,
    /// and one atom for "none of these". Groups needing more than 64 atoms
    /// get no space.
    pub fn outcome_spaces(&self) -> Vec<GroupSpace> {
        let n = self.components.len();
        let mut uf = UnionFind::<usize>::new(n);
        for &(s, p) in &self.subset_edges {
            uf.union(s, p);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for c in 0..n {
            groups.entry(uf.find(c)).or_default().push(c);
        }
        let has_children: BTreeSet<usize> = self.subset_edges.iter().map(|&(_, p)| p).collect();
        let label = |c: usize| self.components[c][0].to_string();
        let mut out = Vec::new();
        for (g, members) in groups.into_values().enumerate() {
            let mut atoms: Vec<String> = members
                .iter()
                .map(|&c| {
                    if has_children.contains(&c) {
                        format!("{} (rest)", label(c))
                    } else {
                        label(c)
                    }
                })
                .collect();
            atoms.push("none".into());
            let event = EventId(format!("group-{g}"));
            if atoms.len() > MAX_ATOMS {
                out.push(GroupSpace {
                    space: None,
                    regions: Vec::new(),
                    atoms_needed: atoms.len(),
                    event,
                });
                continue;
            }
            let k = atoms.len();
            let position: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            let mut regions = Vec::new();
            for &c in &members {
                // A class covers its own atom and every atom below it.
                let mut bits = 1u64 << position[&c];
                for (&d, &i) in &position {
                    if self.ancestors(d).contains(&c) {
                        bits |= 1 << i;
                    }
                }
                let region = Region::from_bits(bits, k).expect("within space");
                for m in &self.components[c] {
                    regions.push(YesRegion {
                        market: m.clone(),
                        region,
                    });
                }
            }
            out.push(GroupSpace {
                space: Some(OutcomeSpace::new(event.clone(), atoms).expect("unique labels")),
                regions,
                atoms_needed: k,
                event,
            });
        }
        out
    }

    /// Same-platform negative-risk events whose outcomes have equivalents on
    /// other platforms, ready for partition enumeration.
    pub fn baseline_events(&self, corpus: &Corpus) -> Vec<BaselineEvent> {
        let mut out = Vec::new();
        for ((platform, event), markets) in corpus.events() {
            if markets.len() < 2 || !markets.iter().all(|m| m.is_neg_risk()) {
                continue;
            }
            let outcomes = markets
                .iter()
                .map(|m| {
                    let equivalents = self
                        .component_of(&m.id)
                        .map(|c| {
                            self.components[c]
                                .iter()
                                .filter(|o| o.platform() != &platform)
                                .filter_map(|o| corpus.get(o).map(|om| (o.clone(), om.volume_usd)))
                                .collect()
                        })
                        .unwrap_or_default();
                    BaselineOutcome {
                        market: m.id.clone(),
                        volume: m.volume_usd,
                        equivalents,
                    }
                })
                .collect();
            out.push(BaselineEvent {
                event: EventId(format!("{platform}:{event}")),
                outcomes,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpace {
    pub event: EventId,
    pub space: Option<OutcomeSpace>,
    pub regions: Vec<YesRegion>,
    pub atoms_needed: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> MarketId {
        s.parse().unwrap()
    }

    fn eq(a: &str, b: &str) -> SemanticRelation {
        SemanticRelation::equivalent(id(a), id(b), "t")
    }

    fn sub(a: &str, b: &str) -> SemanticRelation {
        SemanticRelation::subset(id(a), id(b), "t")
    }

    #[test]
    fn transitive_equivalence() {
        let g = build_relation_graph(&[eq("k:a", "p:b"), eq("p:b", "o:c")]);
        assert_eq!(g.components().len(), 1);
        assert_eq!(g.equivalent_pairs().len(), 3);
        assert_eq!(g.stats().mean_relations_per_class, 3.0);
    }

    #[test]
    fn hub_with_three_subsets() {
        let g = build_relation_graph(&[sub("k:x", "p:s"), sub("k:y", "p:s"), sub("o:z", "p:s")]);
        let hub = g.component_of(&id("p:s")).unwrap();
        assert_eq!(g.subset_edges().iter().filter(|(_, p)| *p == hub).count(), 3);
        let spaces = g.outcome_spaces();
        assert_eq!(spaces.len(), 1);
        let space = spaces[0].space.as_ref().unwrap();
        assert_eq!(space.len(), 5);
        let hub_region = spaces[0].regions.iter().find(|r| r.market == id("p:s")).unwrap().region;
        assert_eq!(hub_region.count(), 4);
        for r in &spaces[0].regions {
            if r.market != id("p:s") {
                assert!(r.region.is_strict_subset_of(hub_region));
            }
        }
    }

    #[test]
    fn mutual_subset_is_dropped() {
        let g = build_relation_graph(&[sub("k:a", "p:b"), sub("p:b", "k:a")]);
        assert!(g.subset_edges().is_empty());
        assert_eq!(g.diagnostics[0].issue, GraphIssue::MutualSubset);
    }

    #[test]
    fn equivalence_dominates_subset() {
        let g = build_relation_graph(&[eq("k:a", "p:b"), sub("k:a", "p:b")]);
        assert_eq!(g.components().len(), 1);
        assert!(g.subset_edges().is_empty());
        assert_eq!(g.diagnostics[0].issue, GraphIssue::Conflict);
    }

    #[test]
    fn cycles_across_classes_are_rejected() {
        let g = build_relation_graph(&[sub("k:a", "p:b"), sub("p:b", "o:c"), sub("o:c", "k:a"), sub("k:d", "k:a")]);
        assert_eq!(g.subset_edges().len(), 1);
        assert_eq!(g.diagnostics.iter().filter(|d| d.issue == GraphIssue::Cycle).count(), 3);
    }

    #[test]
    fn closure_expands_to_members() {
        let g = build_relation_graph(&[sub("k:a", "p:b"), sub("p:b", "o:c"), eq("o:c", "m:c")]);
        let pairs = g.subset_pairs();
        assert!(pairs.contains(&(id("k:a"), id("m:c"))));
        assert!(pairs.contains(&(id("k:a"), id("o:c"))));
        assert_eq!(pairs.len(), 5);
    }

    fn closure_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for i in 0..n {
            m[i][i] = true;
        }
        for &(a, b) in edges {
            m[a][b] = true;
            m[b][a] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
        m
    }

    proptest! {
        #[test]
        fn components_match_closure(edges in prop::collection::vec((0usize..12, 0usize..12), 0..30)) {
            let name = |i: usize| format!("p{}:m{i}", i % 3);
            let rels: Vec<SemanticRelation> = edges
                .iter()
                .filter(|(a, b)| a != b)
                .map(|&(a, b)| eq(&name(a), &name(b)))
                .collect();
            let g = build_relation_graph(&rels);
            let oracle = closure_oracle(12, &edges);
            for i in 0..12 {
                for j in 0..12 {
                    let (ci, cj) = (g.component_of(&id(&name(i))), g.component_of(&id(&name(j))));
                    if i != j && ci.is_some() && cj.is_some() {
                        prop_assert_eq!(ci == cj, oracle[i][j]);
                    }
                }
            }
        }

        #[test]
        fn subset_order_is_acyclic(edges in prop::collection::vec((0usize..8, 0usize..8), 0..20)) {
            let rels: Vec<SemanticRelation> = edges
                .iter()
                .filter(|(a, b)| a != b)
                .map(|&(a, b)| sub(&format!("k:m{a}"), &format!("p:m{b}")))
                .collect();
            let g = build_relation_graph(&rels);
            for c in 0..g.components().len() {
                prop_assert!(!g.ancestors(c).contains(&c));
            }
        }
    }
}
