//! Conditional constraint trees: validation, query classification,
//! orientation, certain-implication reachability, reduction of arbitrary
//! queries to complete ones, and splitting of complete queries.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{BasicEvent, ConditionalConstraint, ConjunctiveEvent, KnowledgeBase};
use crate::rational::{format_rational, Probability, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lower: Rational,
    pub upper: Rational,
}

impl Interval {
    pub fn new(lower: Rational, upper: Rational) -> Self {
        Interval { lower, upper }
    }

    pub fn point(value: Rational) -> Self {
        Interval::new(value.clone(), value)
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    /// `[1, 1]`
    pub fn is_certain(&self) -> bool {
        self.lower.is_one()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lower),
            format_rational(&self.upper)
        )
    }
}

/// One undirected edge `a – b` with its constraint pair `(b|a)` and `(a|b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub b_given_a: Interval,
    pub a_given_b: Interval,
}

/// A knowledge base whose constraint graph is an undirected tree with exactly
/// one constraint pair per edge and positive lower bounds throughout.
///
/// Nodes are indexed in lexicographic name order.
#[derive(Clone, Debug)]
pub struct ConstraintTree {
    kb: KnowledgeBase,
    names: Vec<BasicEvent>,
    index: HashMap<BasicEvent, usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
    edges: Vec<TreeEdge>,
}

fn single_atom(c: &ConditionalConstraint) -> Result<(BasicEvent, BasicEvent)> {
    match (c.conclusion.as_basic(), c.premise.as_basic()) {
        (Some(h), Some(g)) if h != g => Ok((h.clone(), g.clone())),
        _ => Err(Error::NotBasic(c.to_string())),
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Checks that `kb` is a conditional constraint tree. Never repairs.
pub fn validate_tree(kb: &KnowledgeBase) -> Result<ConstraintTree> {
    let names: Vec<BasicEvent> = kb.events().iter().cloned().collect();
    if names.is_empty() {
        return Err(Error::NotConnected);
    }
    let index: HashMap<BasicEvent, usize> = names.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();

    // unordered pair (lo, hi) -> [(hi|lo), (lo|hi)]
    let mut pairs: HashMap<(usize, usize), [Option<&ConditionalConstraint>; 2]> = HashMap::new();
    let mut pair_order = Vec::new();
    for c in kb.constraints() {
        let (h, g) = single_atom(c)?;
        let (h, g) = (index[&h], index[&g]);
        let key = (g.min(h), g.max(h));
        let slot = usize::from(g > h);
        let entry = pairs.entry(key).or_insert_with(|| {
            pair_order.push(key);
            [None, None]
        });
        if entry[slot].is_some() {
            return Err(Error::DuplicateConstraint(format!("({}|{})", names[h], names[g])));
        }
        entry[slot] = Some(c);
    }

    let mut uf: Vec<usize> = (0..names.len()).collect();
    for &(a, b) in &pair_order {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra == rb {
            return Err(Error::Cycle(names[a].to_string(), names[b].to_string()));
        }
        uf[ra] = rb;
    }
    let root = find(&mut uf, 0);
    if (0..names.len()).any(|i| find(&mut uf, i) != root) {
        return Err(Error::NotConnected);
    }

    let mut adjacency = vec![Vec::new(); names.len()];
    let mut edges = Vec::with_capacity(pair_order.len());
    for &(a, b) in &pair_order {
        let [b_given_a, a_given_b] = pairs[&(a, b)];
        let b_given_a = b_given_a.ok_or_else(|| Error::MissingReverse(names[b].to_string(), names[a].to_string()))?;
        let a_given_b = a_given_b.ok_or_else(|| Error::MissingReverse(names[a].to_string(), names[b].to_string()))?;
        for c in [b_given_a, a_given_b] {
            if c.lower == Probability::zero() {
                return Err(Error::ZeroLowerBound(c.to_string()));
            }
        }
        let interval = |c: &ConditionalConstraint| Interval::new(c.lower.value().clone(), c.upper.value().clone());
        let id = edges.len();
        adjacency[a].push((b, id));
        adjacency[b].push((a, id));
        edges.push(TreeEdge {
            a,
            b,
            b_given_a: interval(b_given_a),
            a_given_b: interval(a_given_b),
        });
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(ConstraintTree {
        kb: kb.clone(),
        names,
        index,
        adjacency,
        edges,
    })
}

impl ConstraintTree {
    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, node: usize) -> &BasicEvent {
        &self.names[node]
    }

    pub fn names(&self) -> &[BasicEvent] {
        &self.names
    }

    pub fn node(&self, event: &BasicEvent) -> Result<usize> {
        self.index
            .get(event)
            .copied()
            .ok_or_else(|| Error::UnknownEvent(event.to_string()))
    }

    pub fn node_named(&self, name: &str) -> Result<usize> {
        self.node(&BasicEvent::new(name)?)
    }

    /// Node indices of a conjunction's atoms; `⊤` is rejected.
    pub fn nodes_of(&self, e: &ConjunctiveEvent) -> Result<Vec<usize>> {
        if e.is_top() {
            return Err(Error::Precondition("⊤ is not allowed in tree queries".into()));
        }
        e.atoms().map(|a| self.node(a)).collect()
    }

    pub fn event_of(&self, nodes: &[usize]) -> ConjunctiveEvent {
        ConjunctiveEvent::Atoms(nodes.iter().map(|&n| self.names[n].clone()).collect())
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[node].iter().map(|&(n, _)| n)
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.degree(node) == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| self.is_leaf(n)).collect()
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// Interval of `(conclusion|premise)` for adjacent nodes.
    pub fn conditional(&self, conclusion: usize, premise: usize) -> &Interval {
        let &(_, id) = self.adjacency[premise]
            .iter()
            .find(|&&(n, _)| n == conclusion)
            .unwrap_or_else(|| {
                panic!(
                    "{} and {} are not adjacent",
                    self.names[premise], self.names[conclusion]
                )
            });
        let e = &self.edges[id];
        if e.a == premise {
            &e.b_given_a
        } else {
            &e.a_given_b
        }
    }

    /// Every interval is a point.
    pub fn is_exact(&self) -> bool {
        self.edges
            .iter()
            .all(|e| e.b_given_a.is_point() && e.a_given_b.is_point())
    }

    /// BFS parent pointers with respect to `root`, plus the BFS order.
    fn bfs(&self, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut parent = vec![None; self.node_count()];
        let mut seen = vec![false; self.node_count()];
        let mut order = Vec::with_capacity(self.node_count());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }

    /// Nodes on the path `from → to`, both ends included, in walking order.
    pub fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let (parent, _) = self.bfs(to);
        let mut path = vec![from];
        let mut v = from;
        while let Some(p) = parent[v] {
            path.push(p);
            v = p;
        }
        path
    }

    /// Subtree induced by `nodes` (which must be connected), keeping the
    /// constraints among them.
    pub fn restrict(&self, nodes: &BTreeSet<usize>) -> Result<ConstraintTree> {
        let keep: Vec<ConditionalConstraint> = self
            .kb
            .constraints()
            .iter()
            .filter(|c| {
                c.conclusion
                    .atoms()
                    .chain(c.premise.atoms())
                    .all(|a| nodes.contains(&self.index[a]))
            })
            .cloned()
            .collect();
        let events = nodes.iter().map(|&n| self.names[n].clone());
        validate_tree(&KnowledgeBase::new(events, keep)?)
    }

    /// This tree plus a new leaf `new` attached to `at` by `(new|at)` and `(at|new)`.
    pub fn extend(
        &self,
        at: &BasicEvent,
        new: &BasicEvent,
        new_given_at: Interval,
        at_given_new: Interval,
    ) -> Result<ConstraintTree> {
        let mut constraints = self.kb.constraints().to_vec();
        let mk = |h: &BasicEvent, g: &BasicEvent, iv: Interval| {
            ConditionalConstraint::new(
                ConjunctiveEvent::basic(h.clone()),
                ConjunctiveEvent::basic(g.clone()),
                Probability::new(iv.lower)?,
                Probability::new(iv.upper)?,
            )
        };
        constraints.push(mk(new, at, new_given_at)?);
        constraints.push(mk(at, new, at_given_new)?);
        let events = self.names.iter().cloned().chain(std::iter::once(new.clone()));
        validate_tree(&KnowledgeBase::new(events, constraints)?)
    }

    /// A fresh event name `<base>__syn`, suffixed further on collision.
    pub fn fresh_name(&self, base: &str) -> BasicEvent {
        let mut candidate = format!("{base}__syn");
        let mut k = 2;
        while self
            .index
            .contains_key(&BasicEvent::new(candidate.clone()).expect("valid name"))
        {
            candidate = format!("{base}__syn{k}");
            k += 1;
        }
        BasicEvent::new(candidate).expect("valid name")
    }
}

/// `∃(F|E)[x1, x2]`: conclusion `F`, premise `E`, disjoint in their atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub conclusion: ConjunctiveEvent,
    pub premise: ConjunctiveEvent,
}

impl Query {
    pub fn new(conclusion: ConjunctiveEvent, premise: ConjunctiveEvent) -> Result<Self> {
        if let Some(shared) = conclusion.atoms().find(|a| premise.contains(a)) {
            return Err(Error::Overlap(shared.to_string()));
        }
        if conclusion.is_top() {
            return Err(Error::Precondition("query conclusion must not be ⊤".into()));
        }
        Ok(Query { conclusion, premise })
    }

    /// `Query::named(&["Q", "R"], &["M"])` is `∃(QR|M)`.
    pub fn named<S: AsRef<str>>(conclusion: &[S], premise: &[S]) -> Result<Self> {
        Query::new(
            ConjunctiveEvent::from_names(conclusion)?,
            ConjunctiveEvent::from_names(premise)?,
        )
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}|{})", self.conclusion, self.premise)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    PremiseRestricted,
    StronglyConclusionRestricted,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryClass {
    pub kind: QueryKind,
    /// Premise and conclusion together are exactly the leaves of the tree.
    pub complete: bool,
}

/// Nodes lying on every path from an atom of `premise` to an atom of `conclusion`.
pub fn common_nodes(t: &ConstraintTree, premise: &[usize], conclusion: &[usize]) -> BTreeSet<usize> {
    let mut count = vec![0usize; t.node_count()];
    for &e in premise {
        let (parent, _) = t.bfs(e);
        for &f in conclusion {
            let mut v = f;
            count[v] += 1;
            while let Some(p) = parent[v] {
                count[p] += 1;
                v = p;
            }
        }
    }
    let total = premise.len() * conclusion.len();
    (0..t.node_count()).filter(|&n| count[n] == total).collect()
}

/// Classifies `q`, rejecting overlapping events and premise/conclusion pairs
/// whose connecting paths share no node.
///
/// A query whose premise and conclusion are both basic counts as premise-restricted.
pub fn validate_query(t: &ConstraintTree, q: &Query) -> Result<QueryClass> {
    let premise = t.nodes_of(&q.premise)?;
    let conclusion = t.nodes_of(&q.conclusion)?;
    if let Some(&shared) = premise.iter().find(|n| conclusion.contains(n)) {
        return Err(Error::Overlap(t.name(shared).to_string()));
    }
    let common = common_nodes(t, &premise, &conclusion);
    if common.is_empty() {
        return Err(Error::NoCommonNode);
    }
    let kind = if premise.len() == 1 {
        QueryKind::PremiseRestricted
    } else if conclusion.len() == 1 && common.len() == 1 {
        QueryKind::StronglyConclusionRestricted
    } else {
        QueryKind::General
    };
    let ef: BTreeSet<usize> = premise.iter().chain(&conclusion).copied().collect();
    let leaves: BTreeSet<usize> = t.leaves().into_iter().collect();
    Ok(QueryClass {
        kind,
        complete: ef == leaves,
    })
}

/// The leaves of the tree oriented at `root` are exactly `others`. Weaker
/// than completeness: the root itself may be an inner node.
pub fn rooted_complete(t: &ConstraintTree, root: usize, others: &[usize]) -> bool {
    let leaves: BTreeSet<usize> = (0..t.node_count()).filter(|&v| v != root && t.is_leaf(v)).collect();
    leaves == others.iter().copied().collect()
}

/// A tree with its edges directed away from a root.
#[derive(Clone, Debug)]
pub struct OrientedTree<'t> {
    tree: &'t ConstraintTree,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    stratum: Vec<usize>,
    order: Vec<usize>,
    subtree_size: Vec<usize>,
}

/// Directs every edge away from `root` and computes strata: the root sits in
/// the highest stratum (the tree's height) and the deepest nodes in stratum 0.
pub fn orient<'t>(t: &'t ConstraintTree, root: &BasicEvent) -> Result<OrientedTree<'t>> {
    Ok(orient_at(t, t.node(root)?))
}

pub fn orient_at(t: &ConstraintTree, root: usize) -> OrientedTree<'_> {
    let n = t.node_count();
    let (parent, bfs) = t.bfs(root);
    let mut depth = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &v in &bfs {
        if let Some(p) = parent[v] {
            depth[v] = depth[p] + 1;
            children[p].push(v);
        }
    }
    for c in &mut children {
        c.sort_unstable();
    }
    let height = depth.iter().copied().max().unwrap_or(0);
    let stratum: Vec<usize> = depth.iter().map(|d| height - d).collect();
    let mut order = bfs;
    order.sort_by_key(|&v| (stratum[v], v));
    let mut subtree_size = vec![1usize; n];
    for &v in &order {
        if let Some(p) = parent[v] {
            subtree_size[p] += subtree_size[v];
        }
    }
    OrientedTree {
        tree: t,
        root,
        parent,
        children,
        stratum,
        order,
        subtree_size,
    }
}

impl<'t> OrientedTree<'t> {
    pub fn tree(&self) -> &'t ConstraintTree {
        self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    pub fn stratum(&self, node: usize) -> usize {
        self.stratum[node]
    }

    /// Bottom-up processing order: increasing stratum, ties by name.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn strata(&self) -> Vec<Vec<usize>> {
        let top = self.stratum[self.root];
        let mut out = vec![Vec::new(); top + 1];
        for &v in &self.order {
            out[self.stratum[v]].push(v);
        }
        out
    }

    /// Leaves of the orientation at or below `node`, in name order.
    pub fn leaf_closure(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if self.children[v].is_empty() {
                out.push(v);
            }
            stack.extend(&self.children[v]);
        }
        out.sort_unstable();
        out
    }

    /// `node` and all its descendants.
    pub fn scope(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(&self.children[v]);
        }
        out.sort_unstable();
        out
    }

    pub fn scope_size(&self, node: usize) -> usize {
        self.subtree_size[node]
    }

    /// Interval of `(child|parent)` for the edge into `child`.
    pub fn forward(&self, child: usize) -> &'t Interval {
        let p = self.parent[child].expect("root has no incoming edge");
        self.tree.conditional(child, p)
    }

    /// Interval of `(parent|child)` for the edge into `child`.
    pub fn backward(&self, child: usize) -> &'t Interval {
        let p = self.parent[child].expect("root has no incoming edge");
        self.tree.conditional(p, child)
    }
}

/// `C ⇒ B`: some path from an atom of `c` to `b` consists of `[1, 1]`
/// constraints taken in walking direction.
pub fn implies_exists(t: &ConstraintTree, c: &ConjunctiveEvent, b: &BasicEvent) -> Result<bool> {
    let target = t.node(b)?;
    let sources = t.nodes_of(c)?;
    let (parent, _) = t.bfs(target);
    Ok(sources.into_iter().any(|mut v| {
        while let Some(p) = parent[v] {
            if !t.conditional(p, v).is_certain() {
                return false;
            }
            v = p;
        }
        true
    }))
}

/// `B ⇒ C`: every path from `b` to an atom of `c` consists of `[1, 1]`
/// constraints taken in walking direction.
pub fn implies_all(t: &ConstraintTree, b: &BasicEvent, c: &ConjunctiveEvent) -> Result<bool> {
    let source = t.node(b)?;
    let targets = t.nodes_of(c)?;
    let (parent, _) = t.bfs(source);
    Ok(targets.into_iter().all(|mut v| {
        while let Some(p) = parent[v] {
            if !t.conditional(v, p).is_certain() {
                return false;
            }
            v = p;
        }
        true
    }))
}

/// Result of reducing a query to a complete one.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub tree: ConstraintTree,
    pub query: Query,
    pub removed: Vec<BasicEvent>,
    /// `(original, synonym)` pairs introduced for inner query events.
    pub synonyms: Vec<(BasicEvent, BasicEvent)>,
}

impl Reduction {
    pub fn is_identity(&self) -> bool {
        self.removed.is_empty() && self.synonyms.is_empty()
    }

    pub fn trace(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.removed.is_empty() {
            let names: Vec<String> = self.removed.iter().map(|e| e.to_string()).collect();
            out.push(format!("reduce: pruned leaves {}", names.join(" ")));
        }
        for (orig, syn) in &self.synonyms {
            out.push(format!(
                "reduce: synonym {syn} for inner event {orig} via ({syn}|{orig})[1, 1], ({orig}|{syn})[1, 1]"
            ));
        }
        out
    }
}

/// Prunes leaves outside the query (in name order) and replaces inner query
/// events by fresh leaf synonyms tied with `[1, 1]` constraints.
pub fn reduce_to_complete(t: &ConstraintTree, q: &Query) -> Result<Reduction> {
    validate_query(t, q)?;
    let n = t.node_count();
    let premise = t.nodes_of(&q.premise)?;
    let conclusion = t.nodes_of(&q.conclusion)?;
    let mut in_query = vec![false; n];
    for &v in premise.iter().chain(&conclusion) {
        in_query[v] = true;
    }

    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|v| t.degree(v)).collect();
    let mut queue: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1 && !in_query[v]).collect();
    let mut removed = Vec::new();
    while let Some(v) = queue.pop_first() {
        alive[v] = false;
        removed.push(t.name(v).clone());
        for w in t.neighbors(v) {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] == 1 && !in_query[w] {
                    queue.insert(w);
                }
            }
        }
    }

    let mut tree = if removed.is_empty() {
        t.clone()
    } else {
        t.restrict(&(0..n).filter(|&v| alive[v]).collect())?
    };

    let mut synonyms = Vec::new();
    let mut rename = HashMap::new();
    let inner: Vec<BasicEvent> = premise
        .iter()
        .chain(&conclusion)
        .map(|&v| t.name(v).clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|e| tree.node(e).map(|v| !tree.is_leaf(v)).unwrap_or(false))
        .collect();
    for orig in inner {
        let syn = tree.fresh_name(orig.name());
        let one = Interval::point(Rational::one());
        tree = tree.extend(&orig, &syn, one.clone(), one)?;
        rename.insert(orig.clone(), syn.clone());
        synonyms.push((orig, syn));
    }
    let swap =
        |e: &ConjunctiveEvent| ConjunctiveEvent::Atoms(e.atoms().map(|a| rename.get(a).unwrap_or(a).clone()).collect());
    let query = if synonyms.is_empty() {
        q.clone()
    } else {
        Query::new(swap(&q.conclusion), swap(&q.premise))?
    };
    Ok(Reduction {
        tree,
        query,
        removed,
        synonyms,
    })
}

/// A complete query cut at an articulation node `G`: the premise lives in
/// `premise_side`, the conclusion in `conclusion_side`, and the two share only `G`.
#[derive(Clone, Debug)]
pub struct Split {
    pub articulation: BasicEvent,
    pub premise_side: ConstraintTree,
    pub conclusion_side: ConstraintTree,
}

/// Finds the articulation node of a complete general query. Among several
/// qualifying nodes the one closest to the conclusion is chosen.
pub fn split_at_articulation(t: &ConstraintTree, q: &Query) -> Result<Split> {
    let class = validate_query(t, q)?;
    if class.kind != QueryKind::General {
        return Err(Error::Precondition(format!(
            "query {q} is {:?} and needs no split",
            class.kind
        )));
    }
    if !class.complete {
        return Err(Error::Precondition(format!("query {q} is not complete")));
    }
    let n = t.node_count();
    let premise = t.nodes_of(&q.premise)?;
    let conclusion = t.nodes_of(&q.conclusion)?;
    let mut side = vec![0u8; n]; // 1 = premise, 2 = conclusion
    for &v in &premise {
        side[v] = 1;
    }
    for &v in &conclusion {
        side[v] = 2;
    }

    let ot = orient_at(t, premise[0]);
    let (total_e, total_f) = (premise.len(), conclusion.len());
    let mut count_e = vec![0usize; n];
    let mut count_f = vec![0usize; n];
    for &v in ot.order() {
        count_e[v] += usize::from(side[v] == 1);
        count_f[v] += usize::from(side[v] == 2);
        if let Some(p) = ot.parent(v) {
            count_e[p] += count_e[v];
            count_f[p] += count_f[v];
        }
    }

    // Distance to the nearest conclusion event.
    let mut dist = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = conclusion.iter().copied().collect();
    for &f in &conclusion {
        dist[f] = 0;
    }
    while let Some(v) = queue.pop_front() {
        for w in t.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }

    let mut best: Option<usize> = None;
    for g in 0..n {
        if side[g] != 0 {
            continue;
        }
        let mut comps: Vec<(usize, usize)> = ot.children(g).iter().map(|&c| (count_e[c], count_f[c])).collect();
        if ot.parent(g).is_some() {
            comps.push((total_e - count_e[g], total_f - count_f[g]));
        }
        let pure = comps.iter().all(|&(e, f)| (e == 0) != (f == 0));
        let premise_parts = comps.iter().filter(|&&(e, _)| e > 0).count();
        if pure && premise_parts >= 2 && best.is_none_or(|b| (dist[g], g) < (dist[b], b)) {
            best = Some(g);
        }
    }
    let g = best.ok_or_else(|| Error::Precondition(format!("no articulation node separates {q}")))?;

    // Partition the components hanging off g.
    let mut premise_nodes = BTreeSet::from([g]);
    let mut conclusion_nodes = BTreeSet::from([g]);
    for start in t.neighbors(g) {
        let mut comp = vec![start];
        let mut stack = vec![(start, g)];
        let mut has_premise = false;
        while let Some((v, from)) = stack.pop() {
            has_premise |= side[v] == 1;
            for w in t.neighbors(v) {
                if w != from {
                    comp.push(w);
                    stack.push((w, v));
                }
            }
        }
        if has_premise {
            premise_nodes.extend(comp);
        } else {
            conclusion_nodes.extend(comp);
        }
    }
    Ok(Split {
        articulation: t.name(g).clone(),
        premise_side: t.restrict(&premise_nodes)?,
        conclusion_side: t.restrict(&conclusion_nodes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    fn pair(a: &str, b: &str, ab: Rational, ba: Rational) -> Vec<ConditionalConstraint> {
        vec![
            ConditionalConstraint::point(b, a, ab).unwrap(),
            ConditionalConstraint::point(a, b, ba).unwrap(),
        ]
    }

    fn chain_mno() -> ConstraintTree {
        let mut cs = pair("M", "N", ratio(1, 2), ratio(1, 2));
        cs.extend(pair("N", "O", ratio(1, 2), ratio(1, 2)));
        validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap()
    }

    fn names(t: &ConstraintTree, nodes: &[usize]) -> Vec<String> {
        nodes.iter().map(|&n| t.name(n).to_string()).collect()
    }

    #[test]
    fn minimal_chain_is_valid() {
        let t = chain_mno();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.edges().len(), 2);
        assert!(t.is_exact());
    }

    #[test]
    fn missing_reverse_is_reported() {
        let mut cs = pair("M", "N", ratio(1, 2), ratio(1, 2));
        cs.push(ConditionalConstraint::point("O", "N", ratio(1, 2)).unwrap());
        let err = validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap_err();
        assert_eq!(err, Error::MissingReverse("N".into(), "O".into()));
    }

    #[test]
    fn zero_lower_bound_rejected() {
        let cs = pair("M", "N", int(0), ratio(1, 2));
        assert!(matches!(
            validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()),
            Err(Error::ZeroLowerBound(_))
        ));
    }

    #[test]
    fn cycles_and_disconnection_rejected() {
        let mut cs = pair("A", "B", ratio(1, 2), ratio(1, 2));
        cs.extend(pair("B", "C", ratio(1, 2), ratio(1, 2)));
        cs.extend(pair("C", "A", ratio(1, 2), ratio(1, 2)));
        assert!(matches!(
            validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()),
            Err(Error::Cycle(_, _))
        ));

        let mut cs = pair("A", "B", ratio(1, 2), ratio(1, 2));
        cs.extend(pair("C", "D", ratio(1, 2), ratio(1, 2)));
        assert_eq!(
            validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap_err(),
            Error::NotConnected
        );
    }

    #[test]
    fn conjunctive_constraints_rejected() {
        let c = ConditionalConstraint::new(
            ConjunctiveEvent::from_names(&["A", "B"]).unwrap(),
            ConjunctiveEvent::from_names(&["C"]).unwrap(),
            Probability::one(),
            Probability::one(),
        )
        .unwrap();
        assert!(matches!(
            validate_tree(&KnowledgeBase::from_constraints(vec![c]).unwrap()),
            Err(Error::NotBasic(_))
        ));
    }

    #[test]
    fn single_node_tree() {
        let kb = KnowledgeBase::new([BasicEvent::new("B").unwrap()], vec![]).unwrap();
        let t = validate_tree(&kb).unwrap();
        let ot = orient_at(&t, 0);
        assert_eq!(ot.strata(), vec![vec![0]]);
        assert!(ot.is_leaf(0));
    }

    #[test]
    fn fig2_classification() {
        let t = fixtures::kb_l();
        let q = Query::named(&["S", "T", "U"], &["M"]).unwrap();
        assert_eq!(validate_query(&t, &q).unwrap().kind, QueryKind::PremiseRestricted);
        let q = Query::named(&["O"], &["Q", "R", "S", "T", "U"]).unwrap();
        assert_eq!(
            validate_query(&t, &q).unwrap().kind,
            QueryKind::StronglyConclusionRestricted
        );
        let q = Query::named(&["M", "S"], &["Q", "U"]).unwrap();
        assert_eq!(validate_query(&t, &q).unwrap_err(), Error::NoCommonNode);
        let q = Query::named(&["S", "T", "U"], &["M", "N", "Q", "R"]).unwrap();
        assert_eq!(validate_query(&t, &q).unwrap().kind, QueryKind::General);
        let q = Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap();
        assert_eq!(
            validate_query(&t, &q).unwrap(),
            QueryClass {
                kind: QueryKind::PremiseRestricted,
                complete: true
            }
        );
        // basic premise and basic conclusion prefer premise-restricted
        let q = Query::named(&["O"], &["M"]).unwrap();
        assert_eq!(validate_query(&t, &q).unwrap().kind, QueryKind::PremiseRestricted);
    }

    #[test]
    fn query_overlap_and_unknown_events() {
        assert_eq!(Query::named(&["B"], &["B"]).unwrap_err(), Error::Overlap("B".into()));
        let t = chain_mno();
        let q = Query::named(&["Z"], &["M"]).unwrap();
        assert_eq!(validate_query(&t, &q).unwrap_err(), Error::UnknownEvent("Z".into()));
    }

    #[test]
    fn chain_orientation() {
        let t = chain_mno();
        let ot = orient(&t, &BasicEvent::new("M").unwrap()).unwrap();
        let (m, n, o) = (0, 1, 2);
        assert_eq!(ot.children(m), &[n]);
        assert_eq!(ot.children(n), &[o]);
        assert_eq!((ot.stratum(o), ot.stratum(n), ot.stratum(m)), (0, 1, 2));
        assert_eq!(ot.order(), &[o, n, m]);
    }

    #[test]
    fn fig2_strata() {
        let t = fixtures::kb_l();
        let ot = orient(&t, &BasicEvent::new("M").unwrap()).unwrap();
        let strata: Vec<Vec<String>> = ot.strata().iter().map(|s| names(&t, s)).collect();
        assert_eq!(
            strata,
            vec![
                vec!["S", "T", "U"],
                vec!["P", "Q", "R"],
                vec!["O"],
                vec!["N"],
                vec!["M"]
            ]
        );
        let p = t.node_named("P").unwrap();
        assert_eq!(names(&t, &ot.leaf_closure(p)), vec!["S", "T", "U"]);
        let o = t.node_named("O").unwrap();
        assert_eq!(names(&t, &ot.leaf_closure(o)), vec!["Q", "R", "S", "T", "U"]);
        assert_eq!(ot.scope_size(o), 7);
        assert_eq!(names(&t, &ot.scope(p)), vec!["P", "S", "T", "U"]);
    }

    #[test]
    fn orient_unknown_root() {
        let t = chain_mno();
        assert!(orient(&t, &BasicEvent::new("X").unwrap()).is_err());
    }

    #[test]
    fn certain_implication_exists() {
        let mut cs = pair("M", "N", int(1), ratio(1, 2));
        cs.extend(pair("N", "O", ratio(9, 10), int(1)));
        let t = validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap();
        let e = |n: &str| BasicEvent::new(n).unwrap();
        let c = |ns: &[&str]| ConjunctiveEvent::from_names(ns).unwrap();
        assert!(implies_exists(&t, &c(&["M"]), &e("M")).unwrap());
        assert!(implies_exists(&t, &c(&["M"]), &e("N")).unwrap());
        assert!(!implies_exists(&t, &c(&["N"]), &e("O")).unwrap());
        assert!(implies_exists(&t, &c(&["O"]), &e("N")).unwrap());
        assert!(!implies_exists(&t, &c(&["O"]), &e("M")).unwrap());
        assert!(implies_exists(&t, &c(&["O", "M"]), &e("N")).unwrap());
    }

    #[test]
    fn certain_implication_all() {
        let star = |y: Rational| {
            let mut cs = pair("B", "X", int(1), ratio(1, 2));
            cs.extend(vec![
                ConditionalConstraint::between("Y", "B", y, int(1)).unwrap(),
                ConditionalConstraint::point("B", "Y", ratio(1, 2)).unwrap(),
            ]);
            validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap()
        };
        let b = BasicEvent::new("B").unwrap();
        let xy = ConjunctiveEvent::from_names(&["X", "Y"]).unwrap();
        assert!(implies_all(&star(int(1)), &b, &ConjunctiveEvent::basic(b.clone())).unwrap());
        assert!(!implies_all(&star(ratio(9, 10)), &b, &xy).unwrap());
        assert!(implies_all(&star(int(1)), &b, &xy).unwrap());
    }

    #[test]
    fn reduction_of_strongly_conclusion_query() {
        let t = fixtures::kb_l();
        let q = Query::named(&["O"], &["Q", "R", "S", "T", "U"]).unwrap();
        let r = reduce_to_complete(&t, &q).unwrap();
        let removed: Vec<&str> = r.removed.iter().map(|e| e.name()).collect();
        assert_eq!(removed, vec!["M", "N"]);
        assert_eq!(r.synonyms.len(), 1);
        assert_eq!(r.synonyms[0].1.name(), "O__syn");
        assert_eq!(r.query, Query::named(&["O__syn"], &["Q", "R", "S", "T", "U"]).unwrap());
        let class = validate_query(&r.tree, &r.query).unwrap();
        assert!(class.complete);
        assert_eq!(r.tree.node_count(), 8);
    }

    #[test]
    fn reduction_identity_when_complete() {
        let t = chain_mno();
        let q = Query::named(&["O"], &["M"]).unwrap();
        let r = reduce_to_complete(&t, &q).unwrap();
        assert!(r.is_identity());
        assert_eq!(r.query, q);
        let t = fixtures::kb_l();
        let q = Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap();
        assert!(reduce_to_complete(&t, &q).unwrap().is_identity());
    }

    #[test]
    fn synonym_names_avoid_collisions() {
        let mut cs = pair("A", "A__syn", ratio(1, 2), ratio(1, 2));
        cs.extend(pair("A", "C", ratio(1, 2), ratio(1, 2)));
        let t = validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap();
        assert_eq!(t.fresh_name("A").name(), "A__syn2");
    }

    #[test]
    fn split_fig2() {
        let t = fixtures::kb_l();
        let q = Query::named(&["S", "T", "U"], &["M", "Q", "R"]).unwrap();
        let s = split_at_articulation(&t, &q).unwrap();
        assert_eq!(s.articulation.name(), "O");
        assert_eq!(
            names(&s.premise_side, &(0..5).collect::<Vec<_>>()),
            vec!["M", "N", "O", "Q", "R"]
        );
        assert_eq!(
            names(&s.conclusion_side, &(0..5).collect::<Vec<_>>()),
            vec!["O", "P", "S", "T", "U"]
        );
        let q1 = Query::named(&["O"], &["M", "Q", "R"]).unwrap();
        assert_eq!(
            validate_query(&s.premise_side, &q1).unwrap().kind,
            QueryKind::StronglyConclusionRestricted
        );
    }

    #[test]
    fn split_after_synonym_reduction() {
        // chain M–N–O–P with query (P|M N): N is inner and gets a synonym,
        // after which N itself separates {M, N__syn} from P.
        let mut cs = pair("M", "N", ratio(1, 2), ratio(1, 2));
        cs.extend(pair("N", "O", ratio(1, 2), ratio(1, 2)));
        cs.extend(pair("O", "P", ratio(1, 2), ratio(1, 2)));
        let t = validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap();
        let r = reduce_to_complete(&t, &Query::named(&["P"], &["M", "N"]).unwrap()).unwrap();
        assert_eq!(r.query, Query::named(&["P"], &["M", "N__syn"]).unwrap());
        let s = split_at_articulation(&r.tree, &r.query).unwrap();
        assert_eq!(s.articulation.name(), "N");
        let side1: BTreeSet<&str> = s.premise_side.names().iter().map(|e| e.name()).collect();
        let side2: BTreeSet<&str> = s.conclusion_side.names().iter().map(|e| e.name()).collect();
        assert_eq!(side1, BTreeSet::from(["M", "N", "N__syn"]));
        assert_eq!(side2, BTreeSet::from(["N", "O", "P"]));
        assert_eq!(side1.intersection(&side2).count(), 1);
    }

    #[test]
    fn split_requires_general_query() {
        let t = fixtures::kb_l();
        let q = Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap();
        assert!(matches!(split_at_articulation(&t, &q), Err(Error::Precondition(_))));
    }
}
