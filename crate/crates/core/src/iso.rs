//! Equality of process models up to identifier renaming.
//!
//! Nodes are first partitioned by color refinement over kinds, normalized
//! labels, lane placement and flow neighbourhoods; a backtracking search then
//! looks for a color-preserving bijection that maps every flow, lane and
//! message flow onto its counterpart.

use std::collections::HashMap;

use crate::model::{normalize_opt, ProcessModel};

type Cond = Option<String>;

struct Indexed<'a> {
    model: &'a ProcessModel,
    index: HashMap<&'a str, usize>,
    /// (source, target) -> sorted conditions
    adjacency: HashMap<(usize, usize), Vec<Cond>>,
    out: Vec<Vec<(usize, Cond)>>,
    inc: Vec<Vec<(usize, Cond)>>,
    msg_out: Vec<Vec<(Endpoint, Cond)>>,
    msg_in: Vec<Vec<(Endpoint, Cond)>>,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Endpoint {
    Node(usize),
    Pool(String),
    Unknown,
}

impl<'a> Indexed<'a> {
    fn new(model: &'a ProcessModel) -> Self {
        let index: HashMap<&str, usize> = model.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let n = model.nodes.len();
        let mut adjacency: HashMap<(usize, usize), Vec<Cond>> = HashMap::new();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for f in &model.sequence_flows {
            let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) else {
                continue;
            };
            let c = normalize_opt(f.condition.as_deref());
            adjacency.entry((s, t)).or_default().push(c.clone());
            out[s].push((t, c.clone()));
            inc[t].push((s, c));
        }
        for v in adjacency.values_mut() {
            v.sort();
        }
        let pool_names: HashMap<&str, &str> = model.pools.iter().map(|p| (p.id.as_str(), p.name.as_str())).collect();
        let endpoint = |id: &str| -> Endpoint {
            if let Some(&i) = index.get(id) {
                Endpoint::Node(i)
            } else if let Some(name) = pool_names.get(id) {
                Endpoint::Pool(crate::model::normalize_label(name))
            } else {
                Endpoint::Unknown
            }
        };
        let mut msg_out = vec![Vec::new(); n];
        let mut msg_in = vec![Vec::new(); n];
        for f in &model.message_flows {
            let (s, t) = (endpoint(&f.source), endpoint(&f.target));
            let c = normalize_opt(f.label.as_deref());
            if let Endpoint::Node(i) = s {
                msg_out[i].push((t.clone(), c.clone()));
            }
            if let Endpoint::Node(j) = t {
                msg_in[j].push((s, c));
            }
        }
        Indexed { model, index, adjacency, out, inc, msg_out, msg_in }
    }

    fn base_signature(&self) -> Vec<String> {
        let mut container: HashMap<&str, String> = HashMap::new();
        for p in &self.model.pools {
            let pname = crate::model::normalize_label(&p.name);
            for l in &p.lanes {
                let lname = crate::model::normalize_label(&l.name);
                for m in &l.members {
                    container.insert(m.as_str(), format!("lane:{pname}/{lname}"));
                }
            }
            for m in &p.members {
                container.insert(m.as_str(), format!("pool:{pname}"));
            }
        }
        self.model
            .nodes
            .iter()
            .map(|n| {
                format!(
                    "{:?}|{:?}|{}",
                    n.kind,
                    n.norm_label(),
                    container.get(n.id.as_str()).map(String::as_str).unwrap_or("-")
                )
            })
            .collect()
    }
}

#[derive(Default)]
struct Interner(HashMap<String, usize>);

impl Interner {
    fn intern(&mut self, s: String) -> usize {
        let next = self.0.len();
        *self.0.entry(s).or_insert(next)
    }
}

fn refine(a: &Indexed, b: &Indexed) -> (Vec<usize>, Vec<usize>) {
    let mut interner = Interner::default();
    let mut ca: Vec<usize> = a.base_signature().into_iter().map(|s| interner.intern(s)).collect();
    let mut cb: Vec<usize> = b.base_signature().into_iter().map(|s| interner.intern(s)).collect();
    let distinct = |c: &[usize], d: &[usize]| {
        let mut v: Vec<usize> = c.iter().chain(d.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let mut classes = distinct(&ca, &cb);
    for _ in 0..=(ca.len() + 1) {
        let mut interner = Interner::default();
        let step = |g: &Indexed, colors: &[usize], interner: &mut Interner| -> Vec<usize> {
            (0..colors.len())
                .map(|i| {
                    let ep = |e: &Endpoint| match e {
                        Endpoint::Node(j) => format!("n{}", colors[*j]),
                        Endpoint::Pool(p) => format!("p{p}"),
                        Endpoint::Unknown => "?".to_string(),
                    };
                    let mut outs: Vec<(usize, &Cond)> = g.out[i].iter().map(|(t, c)| (colors[*t], c)).collect();
                    let mut ins: Vec<(usize, &Cond)> = g.inc[i].iter().map(|(s, c)| (colors[*s], c)).collect();
                    let mut mouts: Vec<(String, &Cond)> = g.msg_out[i].iter().map(|(t, c)| (ep(t), c)).collect();
                    let mut mins: Vec<(String, &Cond)> = g.msg_in[i].iter().map(|(s, c)| (ep(s), c)).collect();
                    let self_loops = g.adjacency.get(&(i, i)).map(|v| v.len()).unwrap_or(0);
                    outs.sort();
                    ins.sort();
                    mouts.sort();
                    mins.sort();
                    interner.intern(format!("{}|{outs:?}|{ins:?}|{mouts:?}|{mins:?}|{self_loops}", colors[i]))
                })
                .collect()
        };
        let na = step(a, &ca, &mut interner);
        let nb = step(b, &cb, &mut interner);
        let next = distinct(&na, &nb);
        ca = na;
        cb = nb;
        if next == classes {
            break;
        }
        classes = next;
    }
    (ca, cb)
}

fn histogram(colors: &[usize]) -> Vec<usize> {
    let mut v = colors.to_vec();
    v.sort_unstable();
    v
}

struct Search<'a, 'b> {
    a: &'a Indexed<'b>,
    b: &'a Indexed<'b>,
    ca: Vec<usize>,
    cb: Vec<usize>,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    budget: usize,
}

impl Search<'_, '_> {
    fn consistent(&self, x: usize, y: usize) -> bool {
        let empty = Vec::new();
        let adj = |g: &Indexed, s: usize, t: usize| -> Vec<Cond> {
            g.adjacency.get(&(s, t)).cloned().unwrap_or_else(|| empty.clone())
        };
        if adj(self.a, x, x) != adj(self.b, y, y) {
            return false;
        }
        for (w, mapped) in self.map.iter().enumerate() {
            let Some(z) = *mapped else { continue };
            if adj(self.a, x, w) != adj(self.b, y, z) || adj(self.a, w, x) != adj(self.b, z, y) {
                return false;
            }
        }
        true
    }

    fn run(&mut self, depth: usize) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        if depth == self.order.len() {
            return self.final_check();
        }
        let x = self.order[depth];
        for y in 0..self.cb.len() {
            if self.used[y] || self.cb[y] != self.ca[x] || !self.consistent(x, y) {
                continue;
            }
            self.map[x] = Some(y);
            self.used[y] = true;
            if self.run(depth + 1) {
                return true;
            }
            self.map[x] = None;
            self.used[y] = false;
        }
        false
    }

    fn final_check(&self) -> bool {
        let mapping: Vec<usize> = self.map.iter().map(|m| m.expect("complete mapping")).collect();
        let ident: Vec<usize> = (0..self.cb.len()).collect();
        message_flows(self.a, &mapping) == message_flows(self.b, &ident)
            && pools(self.a, &mapping) == pools(self.b, &ident)
    }
}

fn message_flows(g: &Indexed, mapping: &[usize]) -> Vec<(Endpoint, Endpoint, Cond)> {
    let pool_names: HashMap<&str, String> =
        g.model.pools.iter().map(|p| (p.id.as_str(), crate::model::normalize_label(&p.name))).collect();
    let ep = |id: &str| -> Endpoint {
        if let Some(&i) = g.index.get(id) {
            Endpoint::Node(mapping[i])
        } else if let Some(n) = pool_names.get(id) {
            Endpoint::Pool(n.clone())
        } else {
            Endpoint::Unknown
        }
    };
    let mut v: Vec<_> = g
        .model
        .message_flows
        .iter()
        .map(|f| (ep(&f.source), ep(&f.target), normalize_opt(f.label.as_deref())))
        .collect();
    v.sort();
    v
}

type PoolShape = (String, Vec<(String, Vec<usize>)>, Vec<usize>);

fn pools(g: &Indexed, mapping: &[usize]) -> Vec<PoolShape> {
    let members = |ids: &[String]| -> Vec<usize> {
        let mut v: Vec<usize> =
            ids.iter().map(|id| g.index.get(id.as_str()).map(|&i| mapping[i]).unwrap_or(usize::MAX)).collect();
        v.sort_unstable();
        v
    };
    let mut v: Vec<PoolShape> = g
        .model
        .pools
        .iter()
        .map(|p| {
            let mut lanes: Vec<(String, Vec<usize>)> =
                p.lanes.iter().map(|l| (crate::model::normalize_label(&l.name), members(&l.members))).collect();
            lanes.sort();
            (crate::model::normalize_label(&p.name), lanes, members(&p.members))
        })
        .collect();
    v.sort();
    v
}

pub(crate) fn canonical_equal(a: &ProcessModel, b: &ProcessModel) -> bool {
    if a.nodes.len() != b.nodes.len()
        || a.sequence_flows.len() != b.sequence_flows.len()
        || a.pools.len() != b.pools.len()
        || a.message_flows.len() != b.message_flows.len()
        || a.pools.iter().map(|p| p.lanes.len()).sum::<usize>() != b.pools.iter().map(|p| p.lanes.len()).sum::<usize>()
    {
        return false;
    }
    let ia = Indexed::new(a);
    let ib = Indexed::new(b);
    let (ca, cb) = refine(&ia, &ib);
    if histogram(&ca) != histogram(&cb) {
        return false;
    }
    // Smallest color classes first keeps the search shallow.
    let mut class_size: HashMap<usize, usize> = HashMap::new();
    for c in &ca {
        *class_size.entry(*c).or_insert(0) += 1;
    }
    let mut order: Vec<usize> = (0..ca.len()).collect();
    order.sort_by_key(|&i| (class_size[&ca[i]], ca[i], i));
    let n = ca.len();
    let mut search =
        Search { a: &ia, b: &ib, ca, cb, order, map: vec![None; n], used: vec![false; n], budget: 2_000_000 };
    search.run(0)
}

#[cfg(test)]
mod tests {
    use crate::model::*;

    fn diamond(prefix: &str, label_a: &str) -> ProcessModel {
        let id = |s: &str| format!("{prefix}{s}");
        let mut m = ProcessModel::new("m");
        m.nodes.push(Node::event(id("s"), EventPosition::Start, None));
        m.nodes.push(Node::gateway(id("g1"), GatewayType::Exclusive, Some("ok?".into())));
        m.nodes.push(Node::task(id("a"), label_a));
        m.nodes.push(Node::task(id("b"), "ship order"));
        m.nodes.push(Node::gateway(id("g2"), GatewayType::Exclusive, None));
        m.nodes.push(Node::event(id("e"), EventPosition::End, None));
        m.add_flow(&id("s"), &id("g1"), None);
        m.add_flow(&id("g1"), &id("a"), Some("yes".into()));
        m.add_flow(&id("g1"), &id("b"), Some("no".into()));
        m.add_flow(&id("a"), &id("g2"), None);
        m.add_flow(&id("b"), &id("g2"), None);
        m.add_flow(&id("g2"), &id("e"), None);
        m
    }

    #[test]
    fn reflexive() {
        let m = diamond("", "pack");
        assert!(m.canonical_equal(&m));
    }

    #[test]
    fn renamed_ids_are_equal() {
        let mut b = diamond("x_", "pack");
        b.nodes.reverse();
        b.sequence_flows.reverse();
        assert!(diamond("", "pack").canonical_equal(&b));
    }

    #[test]
    fn label_change_breaks_equality() {
        assert!(!diamond("", "ship order").canonical_equal(&diamond("", "cancel order")));
    }

    #[test]
    fn whitespace_in_labels_is_normalized() {
        assert!(diamond("", "pack  goods").canonical_equal(&diamond("", " pack goods ")));
    }

    #[test]
    fn swapped_conditions_are_not_equal() {
        let a = diamond("", "pack");
        let mut b = diamond("", "pack");
        b.sequence_flows[1].condition = Some("no".into());
        b.sequence_flows[2].condition = Some("yes".into());
        assert!(!a.canonical_equal(&b));
    }

    #[test]
    fn symmetric_structure_needs_edge_check() {
        // Two unlabeled chains vs one chain and one cycle: same degree sequence.
        let mut a = ProcessModel::new("a");
        let mut b = ProcessModel::new("b");
        for i in 0..4 {
            a.nodes.push(Node { id: format!("n{i}"), kind: NodeKind::Task, label: None });
            b.nodes.push(Node { id: format!("n{i}"), kind: NodeKind::Task, label: None });
        }
        a.add_flow("n0", "n1", None);
        a.add_flow("n2", "n3", None);
        b.add_flow("n0", "n1", None);
        b.add_flow("n1", "n0", None);
        assert!(!a.canonical_equal(&b));
    }

    #[test]
    fn lane_membership_matters() {
        let mut a = diamond("", "pack");
        a.pools.push(Pool {
            id: "P".into(),
            name: "Shop".into(),
            lanes: vec![
                Lane { id: "L1".into(), name: "Clerk".into(), members: vec!["a".into()] },
                Lane { id: "L2".into(), name: "Boss".into(), members: vec!["b".into()] },
            ],
            members: vec![],
        });
        let mut b = a.clone();
        b.pools[0].lanes[0].members = vec!["b".into()];
        b.pools[0].lanes[1].members = vec!["a".into()];
        assert!(a.canonical_equal(&a.clone()));
        assert!(!a.canonical_equal(&b));
    }
}
