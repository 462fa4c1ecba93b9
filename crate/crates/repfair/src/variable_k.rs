//! Choosing the horizon: fractional allocations rounded into lotteries and
//! repeated sequences.
//!
//! When the number of rounds is free, a fair outcome can be built in three
//! steps: find a fractional allocation that is Pareto optimal and envy-free,
//! write it as a lottery over integral allocations that all stay close to
//! it (so each is proportional up to one removal and one addition), and
//! replay the lottery as a deterministic sequence whose round counts are
//! proportional to the probabilities.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::allocation::{Allocation, Sequence};
use crate::axioms::check_prop11;
use crate::error::Error;
use crate::exactlp::{check_ef_fractional, check_po_fractional};
use crate::instance::Instance;
use crate::rational::{ceil_u64, floor_u64, rat_u, Rational};

/// Hard cap on raw decomposition leaves; exceeding it is a logic error.
const DECOMPOSE_LEAF_CAP: usize = 4096;
/// Largest round count a lottery may translate into.
const TRANSLATION_CAP: u64 = 100_000;

/// A fractional allocation: each agent holds a share in `[0, 1]` of each
/// item, and shares of every item sum to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAllocation {
    shares: Vec<Vec<Rational>>,
}

impl FractionalAllocation {
    /// Validates shares row by row: rectangular, entries in `[0, 1]`,
    /// column sums exactly one.
    pub fn new(shares: Vec<Vec<Rational>>) -> Result<Self, Error> {
        if shares.is_empty() {
            return Err(Error::BadFractional("no agents".into()));
        }
        let m = shares[0].len();
        if shares.iter().any(|row| row.len() != m) {
            return Err(Error::BadFractional("ragged share rows".into()));
        }
        let (zero, one) = (Rational::zero(), Rational::one());
        for row in &shares {
            for s in row {
                if s < &zero || s > &one {
                    return Err(Error::BadFractional(format!("share {s} outside [0, 1]")));
                }
            }
        }
        for o in 0..m {
            let total: Rational = shares.iter().map(|row| row[o].clone()).sum();
            if total != one {
                return Err(Error::BadFractional(format!(
                    "item {o} has total share {total}, expected 1"
                )));
            }
        }
        Ok(FractionalAllocation { shares })
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn m(&self) -> usize {
        self.shares[0].len()
    }

    pub fn share(&self, agent: usize, item: usize) -> &Rational {
        &self.shares[agent][item]
    }

    pub fn share_row(&self, agent: usize) -> &[Rational] {
        &self.shares[agent]
    }

    /// Errors unless the shape matches the instance.
    pub fn check_shape(&self, inst: &Instance) -> Result<(), Error> {
        if self.n() != inst.n() {
            return Err(Error::DimensionMismatch {
                kind: "agents",
                expected: inst.n(),
                got: self.n(),
            });
        }
        if self.m() != inst.m() {
            return Err(Error::DimensionMismatch {
                kind: "items",
                expected: inst.m(),
                got: self.m(),
            });
        }
        Ok(())
    }

    /// Value of `holder`'s share bundle in `viewer`'s eyes.
    pub fn agent_value(&self, inst: &Instance, viewer: usize, holder: usize) -> Rational {
        (0..self.m())
            .map(|o| inst.utility(viewer, o) * &self.shares[holder][o])
            .sum()
    }
}

/// A lottery over integral allocations: outcomes with positive
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedAllocation {
    outcomes: Vec<(Allocation, Rational)>,
}

impl RandomizedAllocation {
    pub fn new(outcomes: Vec<(Allocation, Rational)>) -> Result<Self, Error> {
        if outcomes.is_empty() {
            return Err(Error::BadFractional("empty lottery".into()));
        }
        let (n, m) = (outcomes[0].0.n(), outcomes[0].0.m());
        if outcomes.iter().any(|(a, _)| a.n() != n || a.m() != m) {
            return Err(Error::BadFractional(
                "lottery outcomes disagree on shape".into(),
            ));
        }
        let zero = Rational::zero();
        if outcomes.iter().any(|(_, p)| p <= &zero) {
            return Err(Error::BadFractional(
                "lottery probabilities must be positive".into(),
            ));
        }
        let total: Rational = outcomes.iter().map(|(_, p)| p.clone()).sum();
        if total != Rational::one() {
            return Err(Error::BadFractional(format!(
                "lottery probabilities sum to {total}, expected 1"
            )));
        }
        Ok(RandomizedAllocation { outcomes })
    }

    pub fn outcomes(&self) -> &[(Allocation, Rational)] {
        &self.outcomes
    }

    /// The expected share of each agent in each item.
    pub fn expected(&self) -> FractionalAllocation {
        let (n, m) = (self.outcomes[0].0.n(), self.outcomes[0].0.m());
        let mut shares = vec![vec![Rational::zero(); m]; n];
        for (alloc, p) in &self.outcomes {
            for o in 0..m {
                shares[alloc.owner(o)][o] += p;
            }
        }
        FractionalAllocation::new(shares).expect("expected shares form a valid allocation")
    }
}

/// A prefix chain of one agent's items in preference order, with the
/// rounding window of every prefix.
///
/// `windows[p]` brackets the fractional mass of `items[..=p]`: any integral
/// allocation respecting the chain gives the agent between `windows[p].0`
/// and `windows[p].1` of those items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub agent: usize,
    pub items: Vec<usize>,
    pub windows: Vec<(u64, u64)>,
}

/// Per-agent prefix chains over goods (weakly positive utility, best
/// first) and chores (negative utility, worst first).  Together with the
/// per-item and per-coordinate windows these sets are laminar, which is
/// what lets a fractional point be rounded without leaving any window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaminarConstraintSet {
    pub chains: Vec<Chain>,
}

/// Builds the prefix chains of `x`: for each agent, goods sorted by
/// descending utility and chores sorted by ascending utility (ties by item
/// index), each prefix windowed by the floor and ceiling of its share mass.
pub fn build_laminar_constraints(
    inst: &Instance,
    x: &FractionalAllocation,
) -> Result<LaminarConstraintSet, Error> {
    x.check_shape(inst)?;
    let zero = Rational::zero();
    let mut chains = Vec::new();
    for i in 0..inst.n() {
        let mut goods: Vec<usize> = (0..inst.m())
            .filter(|&o| inst.utility(i, o) >= &zero)
            .collect();
        goods.sort_by(|&a, &b| inst.utility(i, b).cmp(inst.utility(i, a)).then(a.cmp(&b)));
        let mut chores: Vec<usize> = (0..inst.m())
            .filter(|&o| inst.utility(i, o) < &zero)
            .collect();
        chores.sort_by(|&a, &b| inst.utility(i, a).cmp(inst.utility(i, b)).then(a.cmp(&b)));
        for items in [goods, chores] {
            if items.is_empty() {
                continue;
            }
            let mut windows = Vec::with_capacity(items.len());
            let mut prefix = Rational::zero();
            for &o in &items {
                prefix += x.share(i, o);
                windows.push((floor_u64(&prefix)?, ceil_u64(&prefix)?));
            }
            chains.push(Chain {
                agent: i,
                items,
                windows,
            });
        }
    }
    Ok(LaminarConstraintSet { chains })
}

/// Builds a fractional allocation for two agents that is Pareto optimal
/// and envy-free, with at most one fractionally split item.
///
/// Items that are not goods for both or chores for both are placed with
/// the agent valuing them strictly more (both-zero items rest with the
/// first agent).  The remaining items are ordered by the ratio of the
/// agents' utilities and cut at the first point giving agent 1 at least
/// half its total utility, splitting the boundary item to land exactly on
/// the half.  The result is certified before being returned; if the
/// certificate fails, every integral cut is swept as a fallback.
pub fn fractional_po_ef_two(inst: &Instance) -> Result<FractionalAllocation, Error> {
    if inst.n() != 2 {
        return Err(Error::NotTwoAgents(inst.n()));
    }
    let m = inst.m();
    let zero = Rational::zero();
    let one = Rational::one();

    let mut forced = vec![None::<usize>; m];
    let mut two_sided: Vec<usize> = Vec::new();
    for (o, slot) in forced.iter_mut().enumerate() {
        let (a, b) = (inst.utility(0, o), inst.utility(1, o));
        if (a > &zero && b > &zero) || (a < &zero && b < &zero) {
            two_sided.push(o);
        } else {
            *slot = Some(if a >= b { 0 } else { 1 });
        }
    }
    // Two-sided items by descending ratio u_1 / u_2 (well defined and
    // positive on this set), ties by index.
    let ratio = |o: usize| inst.utility(0, o) / inst.utility(1, o);
    two_sided.sort_by(|&p, &q| ratio(q).cmp(&ratio(p)).then(p.cmp(&q)));

    let target = inst.total_utility(0) / rat_u(2);
    // Agent 1's value at cut c: forced items, the first c two-sided items
    // when they are goods, the rest when they are chores.  It increases
    // strictly with each crossing.
    let mut value: Rational = (0..m)
        .filter(|&o| forced[o] == Some(0))
        .map(|o| inst.utility(0, o).clone())
        .sum::<Rational>()
        + two_sided
            .iter()
            .filter(|&&o| inst.utility(0, o) < &zero)
            .map(|&o| inst.utility(0, o).clone())
            .sum::<Rational>();

    let mut cut = 0usize;
    let mut boundary: Option<(usize, Rational)> = None;
    if value < target {
        for c in 1..=two_sided.len() {
            let o = two_sided[c - 1];
            let u = inst.utility(0, o);
            let prev = value.clone();
            // Crossing the cut hands agent 1 a good or relieves it of a
            // chore; either way its value rises by |u|.
            value = if u > &zero { value + u } else { value - u };
            if value >= target {
                cut = c;
                if value > target {
                    let gain = target.clone() - &prev;
                    boundary = Some(if u > &zero {
                        (c - 1, gain / u)
                    } else {
                        (c - 1, one.clone() - gain / (-u.clone()))
                    });
                }
                break;
            }
        }
        if value < target {
            return Err(Error::Invariant(
                "agent 1 cannot reach half its total utility at any cut".into(),
            ));
        }
    }

    let build =
        |cut: usize, boundary: &Option<(usize, Rational)>| -> Result<FractionalAllocation, Error> {
            let mut shares = vec![vec![Rational::zero(); m]; 2];
            for o in 0..m {
                if let Some(agent) = forced[o] {
                    shares[agent][o] = one.clone();
                }
            }
            for (j, &o) in two_sided.iter().enumerate() {
                let good = inst.utility(0, o) > &zero;
                let to_first = if good { j < cut } else { j >= cut };
                if to_first {
                    shares[0][o] = one.clone();
                }
            }
            if let Some((j, first_share)) = boundary {
                shares[0][two_sided[*j]] = first_share.clone();
            }
            shares[1] = shares[0].iter().map(|s| one.clone() - s).collect();
            FractionalAllocation::new(shares)
        };

    let certified = |x: &FractionalAllocation| -> Result<bool, Error> {
        Ok(check_po_fractional(inst, x)?.holds && check_ef_fractional(inst, x)?.holds)
    };

    let x = build(cut, &boundary)?;
    if certified(&x)? {
        return Ok(x);
    }
    for c in 0..=two_sided.len() {
        let x = build(c, &None)?;
        if certified(&x)? {
            return Ok(x);
        }
    }
    Err(Error::Invariant(
        "no ratio cut certifies as Pareto optimal and envy-free".into(),
    ))
}

/// Writes `x` as a lottery over integral allocations, each of which keeps
/// every chain prefix and every single share inside its window from `x`.
///
/// At each step a direction supported on fractional coordinates is found
/// that preserves all item totals and all integral prefix masses; moving
/// as far as possible both ways splits the point into two with strictly
/// fewer fractional quantities, so the recursion terminates in integral
/// points.  `cons` must have been built from `x`.
pub fn decompose(
    x: &FractionalAllocation,
    cons: &LaminarConstraintSet,
    leaf_cap: usize,
) -> Result<RandomizedAllocation, Error> {
    let (n, m) = (x.n(), x.m());
    // The chains must cover every coordinate exactly once per agent and
    // carry windows derived from this very allocation.
    let mut owner_chain = vec![vec![usize::MAX; m]; n];
    for (ci, chain) in cons.chains.iter().enumerate() {
        if chain.agent >= n || chain.items.len() != chain.windows.len() {
            return Err(Error::BadFractional("malformed constraint chain".into()));
        }
        let mut prefix = Rational::zero();
        for (p, &o) in chain.items.iter().enumerate() {
            if o >= m {
                return Err(Error::BadFractional(
                    "chain references an unknown item".into(),
                ));
            }
            if owner_chain[chain.agent][o] != usize::MAX {
                return Err(Error::BadFractional("item repeated across chains".into()));
            }
            owner_chain[chain.agent][o] = ci;
            prefix += x.share(chain.agent, o);
            if chain.windows[p] != (floor_u64(&prefix)?, ceil_u64(&prefix)?) {
                return Err(Error::BadFractional(
                    "constraint windows do not match the allocation".into(),
                ));
            }
        }
    }
    for (i, row) in owner_chain.iter().enumerate() {
        if row.contains(&usize::MAX) {
            return Err(Error::BadFractional(format!(
                "agent {i} has uncovered items"
            )));
        }
    }

    let mut worker = Decomposer {
        cons,
        n,
        m,
        leaf_cap,
        leaves: 0,
        merged: BTreeMap::new(),
    };
    worker.split(x.shares.clone(), Rational::one())?;

    let outcomes = worker
        .merged
        .into_iter()
        .map(|(owners, p)| Ok((Allocation::new(n, owners)?, p)))
        .collect::<Result<Vec<_>, Error>>()?;
    RandomizedAllocation::new(outcomes)
}

struct Decomposer<'a> {
    cons: &'a LaminarConstraintSet,
    n: usize,
    m: usize,
    leaf_cap: usize,
    leaves: usize,
    merged: BTreeMap<Vec<usize>, Rational>,
}

// A vertex of the rounding graph: a chain segment or an item column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Vertex {
    // (chain index, segment index within the chain, free tail?)
    Segment(usize, usize, bool),
    Column(usize),
}

impl Decomposer<'_> {
    fn split(&mut self, z: Vec<Vec<Rational>>, weight: Rational) -> Result<(), Error> {
        let (zero, one) = (Rational::zero(), Rational::one());
        let fractional: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|i| (0..self.m).map(move |o| (i, o)))
            .filter(|&(i, o)| z[i][o] > zero && z[i][o] < one)
            .collect();

        if fractional.is_empty() {
            self.leaves += 1;
            if self.leaves > self.leaf_cap {
                return Err(Error::Invariant(format!(
                    "decomposition exceeded {} leaves",
                    self.leaf_cap
                )));
            }
            let mut owners = vec![usize::MAX; self.m];
            for o in 0..self.m {
                for (i, row) in z.iter().enumerate() {
                    if row[o] == one {
                        owners[o] = i;
                    }
                }
                if owners[o] == usize::MAX {
                    return Err(Error::Invariant(
                        "integral point with an unowned item".into(),
                    ));
                }
            }
            *self.merged.entry(owners).or_insert_with(Rational::zero) += weight;
            return Ok(());
        }

        let direction = self.find_direction(&z, &fractional)?;
        let (eps_plus, eps_minus) = self.move_limits(&z, &direction)?;

        let apply = |z: &Vec<Vec<Rational>>, eps: &Rational, sign: i64| {
            let mut out = z.clone();
            for &(i, o, s) in &direction {
                out[i][o] += eps * Rational::from_integer((s * sign).into());
            }
            out
        };
        let z_plus = apply(&z, &eps_plus, 1);
        let z_minus = apply(&z, &eps_minus, -1);
        let lambda = eps_minus.clone() / (eps_plus + eps_minus);
        self.split(z_plus, weight.clone() * &lambda)?;
        self.split(z_minus, weight * (one - lambda))
    }

    // Finds a nonzero direction on the fractional coordinates that keeps
    // every item total and every integral chain prefix unchanged: either a
    // cycle of the segment/column graph, or a path between two free tails.
    // Returns (agent, item, sign) moves.
    fn find_direction(
        &self,
        z: &[Vec<Rational>],
        fractional: &[(usize, usize)],
    ) -> Result<Vec<(usize, usize, i64)>, Error> {
        // Segment a chain at every position whose current prefix mass is an
        // integer: a direction must leave those prefixes untouched, so a
        // balanced move within each segment suffices.  Mass past the last
        // integral position (a fractional chain total) is a free tail.
        let mut coord_vertex: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut vertex_id: BTreeMap<Vertex, usize> = BTreeMap::new();
        let mut intern = |v: Vertex, vertices: &mut Vec<Vertex>| -> usize {
            *vertex_id.entry(v).or_insert_with(|| {
                vertices.push(v);
                vertices.len() - 1
            })
        };

        for (ci, chain) in self.cons.chains.iter().enumerate() {
            let mut prefix = Rational::zero();
            let mut segment = 0usize;
            let mut members: Vec<(usize, usize)> = Vec::new();
            for &o in &chain.items {
                let share = &z[chain.agent][o];
                prefix += share;
                if share > &Rational::zero() && share < &Rational::one() {
                    members.push((chain.agent, o));
                }
                if prefix.is_integer() {
                    if !members.is_empty() {
                        let id = intern(Vertex::Segment(ci, segment, false), &mut vertices);
                        for &c in &members {
                            coord_vertex.insert(c, id);
                        }
                        members.clear();
                    }
                    segment += 1;
                }
            }
            if !members.is_empty() {
                // The chain total itself is fractional: this tail may gain
                // or lose mass within its window.
                let id = intern(Vertex::Segment(ci, segment, true), &mut vertices);
                for &c in &members {
                    coord_vertex.insert(c, id);
                }
            }
        }
        for &(_, o) in fractional {
            intern(Vertex::Column(o), &mut vertices);
        }

        // Edges in canonical coordinate order; each fractional coordinate is
        // one edge between its segment and its column.
        let mut edges: Vec<(usize, usize, (usize, usize))> = Vec::new();
        for &(i, o) in fractional {
            let seg = *coord_vertex
                .get(&(i, o))
                .ok_or_else(|| Error::Invariant("fractional share outside every chain".into()))?;
            let col = vertex_id[&Vertex::Column(o)];
            edges.push((seg, col, (i, o)));
        }

        let v_count = vertices.len();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v_count];
        for (e, &(a, b, _)) in edges.iter().enumerate() {
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
        }
        for adj in &mut adjacency {
            adj.sort();
        }

        // Breadth-first spanning forest from the lowest vertex ids.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; v_count]; // (vertex, edge)
        let mut root: Vec<usize> = (0..v_count).collect();
        let mut seen = vec![false; v_count];
        let mut order: Vec<usize> = Vec::new();
        for start in 0..v_count {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                root[v] = start;
                for &(w, e) in &adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some((v, e));
                        queue.push_back(w);
                    }
                }
            }
        }

        let tree_edge = |v: usize| parent[v].map(|(_, e)| e);
        let path_to_root = |mut v: usize| -> Vec<usize> {
            let mut path = vec![v];
            while let Some((p, _)) = parent[v] {
                v = p;
                path.push(v);
            }
            path
        };

        // A fundamental cycle, if any edge closes one.
        for (e, &(a, b, _)) in edges.iter().enumerate() {
            if tree_edge(a) == Some(e) || tree_edge(b) == Some(e) {
                continue;
            }
            if a == b {
                return Err(Error::Invariant("self-loop in the rounding graph".into()));
            }
            // Join the tree paths of the endpoints at their meeting point.
            let pa = path_to_root(a);
            let pb = path_to_root(b);
            let in_pa: std::collections::BTreeSet<usize> = pa.iter().copied().collect();
            let meet = *pb.iter().find(|v| in_pa.contains(v)).expect("same tree");
            let mut walk = vec![e];
            let mut v = b;
            while v != meet {
                let (p, pe) = parent[v].expect("below the meeting point");
                walk.push(pe);
                v = p;
            }
            let mut up = Vec::new();
            let mut v = a;
            while v != meet {
                let (p, pe) = parent[v].expect("below the meeting point");
                up.push(pe);
                v = p;
            }
            up.reverse();
            walk.extend(up);
            return self.signed_moves(&edges, &walk);
        }

        // No cycle: the graph is a forest, whose leaves are free tails
        // (columns and anchored segments have two or more incident
        // fractional coordinates).  Connect two leaves of one tree.
        let mut leaves_by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..v_count {
            if adjacency[v].len() == 1 {
                match vertices[v] {
                    Vertex::Segment(_, _, true) => {
                        leaves_by_root.entry(root[v]).or_default().push(v)
                    }
                    _ => {
                        return Err(Error::Invariant(
                            "a non-tail vertex has a single fractional share".into(),
                        ))
                    }
                }
            }
        }
        let pair = leaves_by_root
            .values()
            .find(|ls| ls.len() >= 2)
            .ok_or_else(|| Error::Invariant("no cycle and no pair of free tails".into()))?;
        let (a, b) = (pair[0], pair[1]);
        let pa = path_to_root(a);
        let in_pa: std::collections::BTreeSet<usize> = pa.iter().copied().collect();
        let pb = path_to_root(b);
        let meet = *pb.iter().find(|v| in_pa.contains(v)).expect("same tree");
        let mut walk = Vec::new();
        let mut v = a;
        while v != meet {
            let (p, pe) = parent[v].expect("below the meeting point");
            walk.push(pe);
            v = p;
        }
        let mut down = Vec::new();
        let mut v = b;
        while v != meet {
            let (p, pe) = parent[v].expect("below the meeting point");
            down.push(pe);
            v = p;
        }
        down.reverse();
        walk.extend(down);
        self.signed_moves(&edges, &walk)
    }

    // Alternating signs along a walk of edges; consecutive edges share a
    // vertex, so interior vertices receive one +1 and one -1.
    fn signed_moves(
        &self,
        edges: &[(usize, usize, (usize, usize))],
        walk: &[usize],
    ) -> Result<Vec<(usize, usize, i64)>, Error> {
        if walk.is_empty() {
            return Err(Error::Invariant("empty direction walk".into()));
        }
        let mut moves = Vec::with_capacity(walk.len());
        let mut sign = 1i64;
        for &e in walk {
            let (_, _, (i, o)) = edges[e];
            moves.push((i, o, sign));
            sign = -sign;
        }
        Ok(moves)
    }

    // Largest steps in the +d and -d directions that keep every moved
    // share in [0, 1] and every chain prefix inside its original window.
    fn move_limits(
        &self,
        z: &[Vec<Rational>],
        direction: &[(usize, usize, i64)],
    ) -> Result<(Rational, Rational), Error> {
        let one = Rational::one();
        let mut plus: Option<Rational> = None;
        let mut minus: Option<Rational> = None;
        let shrink = |limit: &mut Option<Rational>, cap: Rational| {
            if limit.as_ref().is_none_or(|l| cap < *l) {
                *limit = Some(cap);
            }
        };
        let mut delta = vec![vec![0i64; self.m]; self.n];
        for &(i, o, s) in direction {
            delta[i][o] += s;
            let share = &z[i][o];
            if delta[i][o] > 0 {
                shrink(&mut plus, one.clone() - share);
                shrink(&mut minus, share.clone());
            } else if delta[i][o] < 0 {
                shrink(&mut plus, share.clone());
                shrink(&mut minus, one.clone() - share);
            }
        }
        for chain in &self.cons.chains {
            let mut mass = Rational::zero();
            let mut step = 0i64;
            for (p, &o) in chain.items.iter().enumerate() {
                mass += &z[chain.agent][o];
                step += delta[chain.agent][o];
                if step == 0 {
                    continue;
                }
                let (lo, hi) = chain.windows[p];
                let (lo, hi) = (rat_u(lo), rat_u(hi));
                let rate = Rational::from_integer(step.abs().into());
                if step > 0 {
                    shrink(&mut plus, (hi.clone() - &mass) / &rate);
                    shrink(&mut minus, (mass.clone() - &lo) / &rate);
                } else {
                    shrink(&mut plus, (mass.clone() - &lo) / &rate);
                    shrink(&mut minus, (hi.clone() - &mass) / &rate);
                }
            }
        }
        let plus = plus.ok_or_else(|| Error::Invariant("direction moves nothing".into()))?;
        let minus = minus.expect("both limits are set together");
        if plus <= Rational::zero() || minus <= Rational::zero() {
            return Err(Error::Invariant("degenerate rounding step".into()));
        }
        Ok((plus, minus))
    }
}

/// Verifies the structural promises of a rounded lottery: it implements
/// `x` exactly, `x` gives everyone a proportional share, every outcome
/// stays inside the chain windows, and every outcome is proportional up to
/// one removal and one addition.
pub fn verify_prop11_support(
    inst: &Instance,
    x: &FractionalAllocation,
    lottery: &RandomizedAllocation,
) -> Result<(), Error> {
    x.check_shape(inst)?;
    if lottery.expected() != *x {
        return Err(Error::BadFractional(
            "lottery does not implement the fractional allocation".into(),
        ));
    }
    for i in 0..inst.n() {
        if x.agent_value(inst, i, i) < inst.share(i, 1) {
            return Err(Error::Precondition(format!(
                "agent {i} falls short of its proportional share fractionally"
            )));
        }
    }
    let cons = build_laminar_constraints(inst, x)?;
    for (t, (alloc, _)) in lottery.outcomes().iter().enumerate() {
        for chain in &cons.chains {
            let mut held = 0u64;
            for (p, &o) in chain.items.iter().enumerate() {
                if alloc.owner(o) == chain.agent {
                    held += 1;
                }
                let (lo, hi) = chain.windows[p];
                if held < lo || held > hi {
                    return Err(Error::Invariant(format!(
                        "outcome {t} leaves a prefix window of agent {}",
                        chain.agent
                    )));
                }
            }
        }
        let verdict = check_prop11(inst, alloc)?;
        if !verdict.holds {
            return Err(Error::Invariant(format!(
                "outcome {t} is not proportional up to one removal and one addition"
            )));
        }
    }
    Ok(())
}

/// Replays a lottery as a deterministic sequence: the number of rounds is
/// the least common denominator of the probabilities, and each outcome
/// appears in its share of the rounds, in lottery order.
pub fn repeated_translation(lottery: &RandomizedAllocation) -> Result<Sequence, Error> {
    let mut k = num_bigint::BigInt::one();
    for (_, p) in lottery.outcomes() {
        k = k.lcm(p.denom());
    }
    let cap = num_bigint::BigInt::from(TRANSLATION_CAP);
    if k > cap {
        let clamped = u64::try_from(&k).unwrap_or(u64::MAX);
        return Err(Error::TranslationTooLarge {
            k: clamped,
            cap: TRANSLATION_CAP,
        });
    }
    let k_rat = Rational::from_integer(k);
    let mut rounds = Vec::new();
    for (alloc, p) in lottery.outcomes() {
        let copies_rat = p * &k_rat;
        debug_assert!(copies_rat.is_integer());
        let copies = u64::try_from(copies_rat.numer()).expect("copy counts fit the cap");
        for _ in 0..copies {
            rounds.push(alloc.clone());
        }
    }
    Sequence::new(rounds)
}

/// A solved variable-horizon problem: the fractional target, the lottery
/// implementing it, and the deterministic repeated sequence replaying the
/// lottery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableKSolution {
    pub fractional: FractionalAllocation,
    pub lottery: RandomizedAllocation,
    pub sequence: Sequence,
}

/// Solves the variable-horizon problem: choose both the number of rounds
/// and the rounds so that every round is proportional up to one removal
/// and one addition and the overall outcome matches a Pareto-optimal,
/// envy-free fractional allocation exactly.
///
/// For two agents the fractional allocation is built internally; for more,
/// a fractional allocation must be supplied and is certified (Pareto
/// optimality and envy-freeness) before use.
pub fn solve_variable_k(
    inst: &Instance,
    supplied: Option<&FractionalAllocation>,
) -> Result<VariableKSolution, Error> {
    let x = match supplied {
        Some(x) => {
            x.check_shape(inst)?;
            if !check_po_fractional(inst, x)?.holds {
                return Err(Error::Precondition(
                    "the supplied fractional allocation is not Pareto optimal".into(),
                ));
            }
            if !check_ef_fractional(inst, x)?.holds {
                return Err(Error::Precondition(
                    "the supplied fractional allocation is not envy-free".into(),
                ));
            }
            x.clone()
        }
        None if inst.n() == 2 => fractional_po_ef_two(inst)?,
        None => {
            return Err(Error::Precondition(
                "more than two agents require a supplied fractional allocation".into(),
            ))
        }
    };
    let cons = build_laminar_constraints(inst, &x)?;
    let lottery = decompose(&x, &cons, DECOMPOSE_LEAF_CAP)?;
    verify_prop11_support(inst, &x, &lottery)?;
    let sequence = repeated_translation(&lottery)?;
    Ok(VariableKSolution {
        fractional: x,
        lottery,
        sequence,
    })
}
