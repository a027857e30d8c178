//! Delete relaxation of the kitchen dynamics.
//!
//! Every real transition maps to a single rule whose preconditions held
//! before, followed by zero-cost rules. Actions with several effects (pouring
//! all liquids at once, toasting everything inside) first add a marker atom
//! and let free rules fan out from it. Deletes, capacity, "hand empty" and
//! "door closed" are dropped. So the optimal relaxed cost never exceeds the
//! real one, and both the max heuristic and LM-cut stay admissible.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::HashMap;

use crate::operator::{GroundOperator, OperatorKey, Origin};
use crate::sym::Sym;
use crate::world::{kinds, Literal, TempValue, WorldState};

pub const INF: u32 = u32::MAX;
/// `pcf` markers: no justification yet, or justified by a rule without preconditions.
const NONE: u32 = u32::MAX;
const FREE: u32 = u32::MAX - 1;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum RAtom {
    Lit(Literal),
    /// Transitively inside a container.
    Within(Sym, Sym),
    /// A toaster was pressed.
    Pressed(Sym),
    /// Something was poured from the first container into the second.
    Poured(Sym, Sym),
}

struct Rule {
    pre: Vec<u32>,
    add: Vec<u32>,
    cost: u32,
}

pub struct RelaxedModel {
    ids: BTreeMap<RAtom, u32>,
    lits: HashMap<Literal, u32>,
    rules: Vec<Rule>,
    by_pre: Vec<Vec<u32>>,
    by_add: Vec<Vec<u32>>,
    free: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Max,
    Sum,
}

impl RelaxedModel {
    /// Rules for primitives of `actors`, device dynamics and skill groundings
    /// over the registry of `state`. Banned primitives get no rule.
    pub fn build(state: &WorldState, actors: &[Sym], skills: &[GroundOperator], banned: &BTreeSet<OperatorKey>) -> Self {
        let mut m = RelaxedModel {
            ids: BTreeMap::new(),
            lits: HashMap::new(),
            rules: Vec::new(),
            by_pre: Vec::new(),
            by_add: Vec::new(),
            free: Vec::new(),
        };
        let reg = state.registry();
        let objects: Vec<Sym> = reg.object_ids().cloned().collect();
        let zones: Vec<Sym> = reg.zones.keys().cloned().collect();
        let containers: Vec<Sym> = objects.iter().filter(|o| reg.is_container(o)).cloned().collect();
        let liquids: Vec<Sym> = objects.iter().filter(|o| reg.is_liquid(o)).cloned().collect();
        let portable: Vec<Sym> = objects
            .iter()
            .filter(|o| reg.is_movable(o) && !reg.is_liquid(o))
            .cloned()
            .collect();
        let lit = |l: Literal| RAtom::Lit(l);
        let allowed = |kind: &str, args: &[&Sym]| {
            banned.is_empty()
                || !banned.contains(&OperatorKey {
                    origin: Origin::Primitive,
                    name: Sym::new(kind),
                    args: args.iter().map(|a| (*a).clone()).collect(),
                })
        };
        let door_pre = |c: &Sym| reg.has_door(c).then(|| lit(Literal::open(c)));
        let mut poured: BTreeSet<(Sym, Sym)> = BTreeSet::new();
        let mut pressed: BTreeSet<Sym> = BTreeSet::new();

        for a in actors {
            for o in &portable {
                let held = lit(Literal::holding(a, o));
                if allowed("pick", &[a, o]) {
                    for z in &zones {
                        m.rule(&[lit(Literal::at(o, z))], &[held.clone()], 1);
                    }
                    for c in containers.iter().filter(|c| *c != o) {
                        let mut pre = alloc::vec![lit(Literal::inside(o, c))];
                        pre.extend(door_pre(c));
                        m.rule(&pre, &[held.clone()], 1);
                    }
                }
                for z in zones.iter().filter(|z| allowed("place", &[a, o, z])) {
                    m.rule(&[held.clone()], &[lit(Literal::at(o, z))], 1);
                }
                for c in containers.iter().filter(|c| *c != o && allowed("place", &[a, o, c])) {
                    let mut pre = alloc::vec![held.clone()];
                    pre.extend(door_pre(c));
                    m.rule(&pre, &[lit(Literal::inside(o, c))], 1);
                }
            }
            for src in containers.iter().filter(|c| reg.is_movable(c)) {
                let held = lit(Literal::holding(a, src));
                for dst in containers.iter().filter(|d| *d != src && allowed("pour", &[a, src, d])) {
                    let mut pre = alloc::vec![held.clone()];
                    pre.extend(door_pre(dst));
                    m.rule(&pre, &[RAtom::Poured(src.clone(), dst.clone())], 1);
                    poured.insert((src.clone(), dst.clone()));
                }
            }
            for d in objects.iter().filter(|o| reg.is_device(o)) {
                if reg.has_door(d) && allowed("open", &[a, d]) {
                    m.rule(&[], &[lit(Literal::open(d))], 1);
                }
                if !allowed("press", &[a, d]) {
                    continue;
                }
                if reg.is_a(d, kinds::TOASTER) {
                    m.rule(&[], &[RAtom::Pressed(d.clone())], 1);
                    pressed.insert(d.clone());
                } else {
                    m.rule(&[], &[lit(Literal::powered(d))], 1);
                }
            }
        }

        // fan-out of multi-effect actions and device dynamics, all free
        for (src, dst) in &poured {
            for w in &liquids {
                m.rule(
                    &[RAtom::Poured(src.clone(), dst.clone()), lit(Literal::inside(w, src))],
                    &[lit(Literal::inside(w, dst))],
                    0,
                );
            }
        }
        for d in &pressed {
            for o in objects.iter().filter(|o| !reg.is_liquid(o) && *o != d) {
                m.rule(&[RAtom::Pressed(d.clone()), lit(Literal::inside(o, d))], &[lit(Literal::toasted(o))], 0);
            }
        }
        for x in &objects {
            for c in containers.iter().filter(|c| *c != x) {
                let within = RAtom::Within(x.clone(), c.clone());
                m.rule(&[lit(Literal::inside(x, c))], &[within], 0);
                for outer in containers.iter().filter(|o| *o != c && *o != x) {
                    m.rule(
                        &[lit(Literal::inside(x, c)), RAtom::Within(c.clone(), outer.clone())],
                        &[RAtom::Within(x.clone(), outer.clone())],
                        0,
                    );
                }
            }
            for d in &containers {
                if d == x {
                    continue;
                }
                let within = RAtom::Within(x.clone(), d.clone());
                if reg.is_a(d, kinds::MICROWAVE) || reg.is_a(d, kinds::KETTLE) {
                    m.rule(
                        &[lit(Literal::powered(d)), within],
                        &[lit(Literal::temp(x, TempValue::Hot))],
                        0,
                    );
                } else if reg.is_a(d, kinds::FRIDGE) {
                    m.rule(&[within], &[lit(Literal::temp(x, TempValue::Cold))], 0);
                }
            }
        }
        for c in &containers {
            for b in objects.iter().filter(|o| reg.is_a(o, kinds::TEABAG)) {
                for w in &liquids {
                    m.rule(
                        &[
                            lit(Literal::inside(b, c)),
                            lit(Literal::inside(w, c)),
                            lit(Literal::temp(w, TempValue::Hot)),
                        ],
                        &[lit(Literal::brewed(c))],
                        0,
                    );
                }
            }
        }

        for op in skills {
            let pre: Vec<RAtom> = op.preconds.iter().cloned().map(RAtom::Lit).collect();
            let add: Vec<RAtom> = op.adds.iter().cloned().map(RAtom::Lit).collect();
            m.rule(&pre, &add, op.cost);
        }
        m
    }

    fn intern(&mut self, a: RAtom) -> u32 {
        let n = self.ids.len() as u32;
        if let Some(&id) = self.ids.get(&a) {
            return id;
        }
        if let RAtom::Lit(l) = &a {
            self.lits.insert(l.clone(), n);
        }
        self.ids.insert(a, n);
        self.by_pre.push(Vec::new());
        self.by_add.push(Vec::new());
        n
    }

    fn rule(&mut self, pre: &[RAtom], add: &[RAtom], cost: u32) {
        let r = self.rules.len() as u32;
        let mut pre: Vec<u32> = pre.iter().map(|a| self.intern(a.clone())).collect();
        pre.sort_unstable();
        pre.dedup();
        let mut add: Vec<u32> = add.iter().map(|a| self.intern(a.clone())).collect();
        add.sort_unstable();
        add.dedup();
        for &p in &pre {
            self.by_pre[p as usize].push(r);
        }
        for &a in &add {
            self.by_add[a as usize].push(r);
        }
        if pre.is_empty() {
            self.free.push(r);
        }
        self.rules.push(Rule { pre, add, cost });
    }

    fn atom_id(&self, l: &Literal) -> Option<u32> {
        self.lits.get(l).copied()
    }

    /// Relaxed cost of the goal from `state`; `INF` if unreachable.
    pub fn estimate(&self, state: &WorldState, goal: &[Literal], mode: Combine) -> u32 {
        match self.prepare(state, goal) {
            Ok((init, targets)) => self.propagate(&init, &targets, mode),
            Err(h) => h,
        }
    }

    /// Max and additive estimates; the additive pass is skipped when the
    /// goal is unreachable.
    pub fn estimate_both(&self, state: &WorldState, goal: &[Literal]) -> (u32, u32) {
        match self.prepare(state, goal) {
            Ok((init, targets)) => {
                let hm = self.propagate(&init, &targets, Combine::Max);
                if hm == INF {
                    return (INF, INF);
                }
                (hm, self.propagate(&init, &targets, Combine::Sum))
            }
            Err(h) => (h, h),
        }
    }

    /// Atoms true in `state` and unmet goal atoms, or the final answer when
    /// no search is needed.
    fn prepare(&self, state: &WorldState, goal: &[Literal]) -> Result<(Vec<u32>, Vec<u32>), u32> {
        let mut targets: Vec<u32> = Vec::with_capacity(goal.len());
        for g in goal {
            if state.holds(g) {
                continue;
            }
            match self.atom_id(g) {
                Some(id) => targets.push(id),
                None => return Err(INF),
            }
        }
        if targets.is_empty() {
            return Err(0);
        }
        let init = state.facts().iter().filter_map(|l| self.atom_id(l)).collect();
        Ok((init, targets))
    }

    fn propagate(&self, init: &[u32], targets: &[u32], mode: Combine) -> u32 {
        let n = self.ids.len();
        let mut cost = alloc::vec![INF; n];
        let mut done = alloc::vec![false; n];
        let mut waiting: Vec<u32> = self.rules.iter().map(|r| r.pre.len() as u32).collect();
        let mut acc = alloc::vec![0u32; self.rules.len()];
        let mut heap = BinaryHeap::new();
        for &id in init {
            cost[id as usize] = 0;
            heap.push(Reverse((0u32, id)));
        }
        for &r in &self.free {
            let rule = &self.rules[r as usize];
            for &a in &rule.add {
                if rule.cost < cost[a as usize] {
                    cost[a as usize] = rule.cost;
                    heap.push(Reverse((rule.cost, a)));
                }
            }
        }
        let mut remaining = targets.len();
        let mut is_target = alloc::vec![false; n];
        for &t in targets {
            if !is_target[t as usize] {
                is_target[t as usize] = true;
            } else {
                remaining -= 1;
            }
        }
        while let Some(Reverse((c, a))) = heap.pop() {
            let ai = a as usize;
            if done[ai] || c > cost[ai] {
                continue;
            }
            done[ai] = true;
            if is_target[ai] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            for &r in &self.by_pre[ai] {
                let ri = r as usize;
                acc[ri] = match mode {
                    Combine::Max => acc[ri].max(c),
                    Combine::Sum => acc[ri].saturating_add(c),
                };
                waiting[ri] -= 1;
                if waiting[ri] == 0 {
                    let rule = &self.rules[ri];
                    let nc = acc[ri].saturating_add(rule.cost);
                    for &b in &rule.add {
                        if nc < cost[b as usize] {
                            cost[b as usize] = nc;
                            heap.push(Reverse((nc, b)));
                        }
                    }
                }
            }
        }
        let mut h = 0u32;
        for &t in targets {
            let c = cost[t as usize];
            if c == INF {
                return INF;
            }
            h = match mode {
                Combine::Max => h.max(c),
                Combine::Sum => h.saturating_add(c),
            };
        }
        h
    }

    /// LM-cut: repeatedly finds a cut of rules separating the state from the
    /// goal in the max-cost justification graph, charges its cheapest rule
    /// and discounts the whole cut by that amount. Admissible, usually far
    /// tighter than the max heuristic, but not consistent.
    pub fn lm_cut(&self, state: &WorldState, goal: &[Literal]) -> u32 {
        let (init, mut targets) = match self.prepare(state, goal) {
            Ok(x) => x,
            Err(h) => return h,
        };
        targets.sort_unstable();
        targets.dedup();
        let n = self.ids.len();
        let nr = self.rules.len();
        // one extra atom for the goal and one extra rule reaching it
        let top = n;
        let goal_rule = nr;
        let mut is_target = alloc::vec![false; n];
        for &t in &targets {
            is_target[t as usize] = true;
        }
        let mut cost: Vec<u32> = self.rules.iter().map(|r| r.cost).collect();
        cost.push(0);
        let mut h = alloc::vec![INF; n + 1];
        let mut pcf = alloc::vec![NONE; nr + 1];
        let mut waiting = alloc::vec![0u32; nr + 1];
        let mut in_goal = alloc::vec![false; n + 1];
        let mut before = alloc::vec![false; n + 1];
        let mut in_cut = alloc::vec![false; nr + 1];
        let mut heap = BinaryHeap::new();
        let mut stack: Vec<u32> = Vec::new();
        let mut cut: Vec<u32> = Vec::new();
        let mut total = 0u32;

        loop {
            // max-cost exploration, remembering each rule's costliest precondition
            h.fill(INF);
            pcf.fill(NONE);
            for (w, r) in waiting.iter_mut().zip(&self.rules) {
                *w = r.pre.len() as u32;
            }
            waiting[goal_rule] = targets.len() as u32;
            for &a in &init {
                h[a as usize] = 0;
                heap.push(Reverse((0u32, a)));
            }
            for &r in &self.free {
                pcf[r as usize] = FREE;
                let c = cost[r as usize];
                for &a in &self.rules[r as usize].add {
                    if c < h[a as usize] {
                        h[a as usize] = c;
                        heap.push(Reverse((c, a)));
                    }
                }
            }
            while let Some(Reverse((c, a))) = heap.pop() {
                let ai = a as usize;
                if c > h[ai] {
                    continue;
                }
                if is_target[ai] {
                    waiting[goal_rule] -= 1;
                    if waiting[goal_rule] == 0 {
                        pcf[goal_rule] = a;
                        h[top] = c;
                    }
                }
                for &r in &self.by_pre[ai] {
                    let ri = r as usize;
                    waiting[ri] -= 1;
                    if waiting[ri] != 0 {
                        continue;
                    }
                    pcf[ri] = a;
                    let nc = c.saturating_add(cost[ri]);
                    for &b in &self.rules[ri].add {
                        if nc < h[b as usize] {
                            h[b as usize] = nc;
                            heap.push(Reverse((nc, b)));
                        }
                    }
                }
            }
            match h[top] {
                INF => return INF,
                0 => return total,
                _ => {}
            }

            // goal zone: atoms that reach the goal through free justifications
            in_goal.fill(false);
            in_goal[top] = true;
            stack.push(top as u32);
            while let Some(e) = stack.pop() {
                let adders: &[u32] = if e as usize == top { &[goal_rule as u32] } else { &self.by_add[e as usize] };
                for &r in adders {
                    let p = pcf[r as usize];
                    if p < FREE && cost[r as usize] == 0 && !in_goal[p as usize] {
                        in_goal[p as usize] = true;
                        stack.push(p);
                    }
                }
            }

            // everything justified from the state without entering the goal zone
            before.fill(false);
            let enter = |a: u32, before: &mut Vec<bool>, stack: &mut Vec<u32>| {
                if !in_goal[a as usize] && !before[a as usize] {
                    before[a as usize] = true;
                    stack.push(a);
                }
            };
            for &a in &init {
                enter(a, &mut before, &mut stack);
            }
            for &r in &self.free {
                for &b in &self.rules[r as usize].add {
                    enter(b, &mut before, &mut stack);
                }
            }
            while let Some(a) = stack.pop() {
                for &r in &self.by_pre[a as usize] {
                    if pcf[r as usize] == a {
                        for &b in &self.rules[r as usize].add {
                            enter(b, &mut before, &mut stack);
                        }
                    }
                }
            }

            // the cut: rules leading from there into the goal zone
            let mut step = INF;
            for e in 0..n {
                if !in_goal[e] {
                    continue;
                }
                for &r in &self.by_add[e] {
                    let (ri, p) = (r as usize, pcf[r as usize]);
                    let from_before = p == FREE || (p < FREE && before[p as usize]);
                    if from_before && !in_cut[ri] {
                        in_cut[ri] = true;
                        cut.push(r);
                        step = step.min(cost[ri]);
                    }
                }
            }
            if cut.is_empty() || step == 0 || step == INF {
                // cannot happen for a finite positive goal cost; stop safely
                return total.max(h[top]);
            }
            total = total.saturating_add(step);
            for &r in &cut {
                cost[r as usize] -= step;
                in_cut[r as usize] = false;
            }
            cut.clear();
        }
    }
}
