//! Bags, bag labels and the two multiple-instance objectives.
//!
//! Negative bags are penalised through their worst (largest) instance
//! output, positive bags are rewarded through their best instance:
//!
//! | mode | negative bag term          | positive bag term            |
//! |------|----------------------------|------------------------------|
//! | Obj1 | `max_i (ChI(x_i) + 1)^2`   | `min_j (ChI(x_j) - 1)^2`     |
//! | Obj2 | `max_i ChI(x_i)^2`         | `min_j (1 - |ChI(x_j)|)^2`   |
//!
//! The total fitness is the sum of both terms over all bags.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choquet::{prepare_input, ChoquetError, InputPolicy, TermTable};
use crate::lattice::{check_source_count, pair_count, BiCapacity, LatticeError, Mode, SubsetPair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MilError {
    #[error("instance '{0}' appears more than once")]
    DuplicateInstance(String),
    #[error("instance '{0}' is not assigned to any bag")]
    UnassignedInstance(String),
    #[error("bag assignment references unknown instance '{0}'")]
    UnknownInstance(String),
    #[error("bag '{0}' has no label")]
    UnknownBagLabel(String),
    #[error("bag '{0}' is labeled more than once")]
    DuplicateBagLabel(String),
    #[error("bag '{0}' has no instances")]
    EmptyBag(String),
    #[error("training needs at least one {0} bag")]
    MissingClass(BagLabel),
    #[error("bad bag label '{0}' (expected 1 or -1)")]
    BadLabel(String),
    #[error("objective expects a {expected} bi-capacity, got {found}")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("table has {found} sources, bi-capacity expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("table has {values} values, not a multiple of {m} sources for {rows} ids")]
    Shape { rows: usize, m: usize, values: usize },
    #[error("instance '{instance}': {source}")]
    Input {
        instance: String,
        #[source]
        source: ChoquetError,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BagLabel {
    Positive,
    Negative,
}

impl BagLabel {
    pub fn as_i8(self) -> i8 {
        match self {
            BagLabel::Positive => 1,
            BagLabel::Negative => -1,
        }
    }
}

impl fmt::Display for BagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BagLabel::Positive => "positive",
            BagLabel::Negative => "negative",
        })
    }
}

impl FromStr for BagLabel {
    type Err = MilError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "+1" => Ok(BagLabel::Positive),
            "-1" => Ok(BagLabel::Negative),
            other => Err(MilError::BadLabel(other.to_string())),
        }
    }
}

/// Instance identifiers with an `N x m` row-major matrix of source outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTable {
    ids: Vec<String>,
    m: usize,
    data: Vec<f64>,
    positions: HashMap<String, usize>,
}

impl InstanceTable {
    /// Builds a table, rejecting values outside `[-1, 1]`.
    pub fn new(ids: Vec<String>, m: usize, data: Vec<f64>) -> Result<Self, MilError> {
        Self::with_policy(ids, m, data, InputPolicy::Strict)
    }

    pub fn with_policy(ids: Vec<String>, m: usize, data: Vec<f64>, policy: InputPolicy) -> Result<Self, MilError> {
        check_source_count(m)?;
        if data.len() != ids.len() * m {
            return Err(MilError::Shape { rows: ids.len(), m, values: data.len() });
        }
        let mut positions = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if positions.insert(id.clone(), i).is_some() {
                return Err(MilError::DuplicateInstance(id.clone()));
            }
        }
        let mut clean = Vec::with_capacity(data.len());
        for (row, id) in data.chunks_exact(m).zip(&ids) {
            let x = prepare_input(row, policy).map_err(|source| MilError::Input { instance: id.clone(), source })?;
            clean.extend_from_slice(&x);
        }
        Ok(InstanceTable { ids, m, data: clean, positions })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Values of source `s` (zero-based) for every instance.
    pub fn column(&self, s: usize) -> Vec<f64> {
        self.data.iter().skip(s).step_by(self.m).copied().collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bag {
    pub id: String,
    pub label: BagLabel,
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BagCounts {
    pub positive_bags: usize,
    pub negative_bags: usize,
    pub positive_instances: usize,
    pub negative_instances: usize,
}

/// Labeled bags with each instance assigned to exactly one bag.
#[derive(Debug, Clone, PartialEq)]
pub struct BagSet {
    bags: Vec<Bag>,
    assignment: HashMap<String, usize>,
}

/// Validates `instance_id -> bag_id` rows against `bag_id -> label` rows.
///
/// Bags keep the order of the label rows; instances keep assignment order.
pub fn load_bags(assignment: &[(String, String)], labels: &[(String, BagLabel)]) -> Result<BagSet, MilError> {
    let mut bags = Vec::with_capacity(labels.len());
    let mut by_id = HashMap::with_capacity(labels.len());
    for (bag_id, label) in labels {
        if by_id.insert(bag_id.clone(), bags.len()).is_some() {
            return Err(MilError::DuplicateBagLabel(bag_id.clone()));
        }
        bags.push(Bag { id: bag_id.clone(), label: *label, instances: Vec::new() });
    }
    let mut instance_to_bag = HashMap::with_capacity(assignment.len());
    for (instance, bag_id) in assignment {
        let &b = by_id.get(bag_id).ok_or_else(|| MilError::UnknownBagLabel(bag_id.clone()))?;
        if instance_to_bag.insert(instance.clone(), b).is_some() {
            return Err(MilError::DuplicateInstance(instance.clone()));
        }
        bags[b].instances.push(instance.clone());
    }
    if let Some(empty) = bags.iter().find(|b| b.instances.is_empty()) {
        return Err(MilError::EmptyBag(empty.id.clone()));
    }
    Ok(BagSet { bags, assignment: instance_to_bag })
}

impl BagSet {
    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn bag_of(&self, instance: &str) -> Option<&Bag> {
        self.assignment.get(instance).map(|&b| &self.bags[b])
    }

    pub fn counts(&self) -> BagCounts {
        let mut c = BagCounts::default();
        for bag in &self.bags {
            match bag.label {
                BagLabel::Positive => {
                    c.positive_bags += 1;
                    c.positive_instances += bag.instances.len();
                }
                BagLabel::Negative => {
                    c.negative_bags += 1;
                    c.negative_instances += bag.instances.len();
                }
            }
        }
        c
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<(), MilError> {
        let c = self.counts();
        if c.positive_bags == 0 {
            Err(MilError::MissingClass(BagLabel::Positive))
        } else if c.negative_bags == 0 {
            Err(MilError::MissingClass(BagLabel::Negative))
        } else {
            Ok(())
        }
    }
}

/// Objective value split into its bag-class terms, with element usage.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitness {
    pub j_total: f64,
    pub j_neg: f64,
    pub j_pos: f64,
    /// Usage counts indexed by ternary code.
    pub usage: Arc<[u64]>,
}

impl Fitness {
    pub fn usage_of(&self, pair: SubsetPair) -> u64 {
        self.usage[pair.index()]
    }
}

fn negative_penalty(mode: Mode, chi: f64) -> f64 {
    match mode {
        Mode::Obj1 => (chi + 1.0) * (chi + 1.0),
        Mode::Obj2 => chi * chi,
    }
}

fn positive_penalty(mode: Mode, chi: f64) -> f64 {
    match mode {
        Mode::Obj1 => (chi - 1.0) * (chi - 1.0),
        Mode::Obj2 => (1.0 - chi.abs()) * (1.0 - chi.abs()),
    }
}

/// Term contributed by one bag given the integral values of its instances.
pub fn bag_term(mode: Mode, label: BagLabel, chi: impl IntoIterator<Item = f64>) -> f64 {
    let chi = chi.into_iter();
    match label {
        BagLabel::Negative => chi.map(|v| negative_penalty(mode, v)).fold(f64::NEG_INFINITY, f64::max),
        BagLabel::Positive => chi.map(|v| positive_penalty(mode, v)).fold(f64::INFINITY, f64::min),
    }
}

/// `(j_neg, j_pos)` for bags given directly as integral values.
pub fn objective_from_values(mode: Mode, bags: &[(BagLabel, Vec<f64>)]) -> (f64, f64) {
    let mut j_neg = 0.0;
    let mut j_pos = 0.0;
    for (label, chi) in bags {
        let term = bag_term(mode, *label, chi.iter().copied());
        match label {
            BagLabel::Negative => j_neg += term,
            BagLabel::Positive => j_pos += term,
        }
    }
    (j_neg, j_pos)
}

/// Training data bound to a table: compiled integral terms per instance,
/// bag membership by row, and element usage counts.
#[derive(Debug, Clone)]
pub struct MilProblem {
    terms: TermTable,
    bags: Vec<(BagLabel, Vec<usize>)>,
    usage: Arc<[u64]>,
}

impl MilProblem {
    pub fn new(bags: &BagSet, table: &InstanceTable) -> Result<Self, MilError> {
        let mut covered = HashSet::with_capacity(table.len());
        let mut rows = Vec::with_capacity(bags.len());
        for bag in bags.bags() {
            let members = bag
                .instances
                .iter()
                .map(|id| {
                    let row = table.position(id).ok_or_else(|| MilError::UnknownInstance(id.clone()))?;
                    covered.insert(row);
                    Ok(row)
                })
                .collect::<Result<Vec<_>, MilError>>()?;
            rows.push((bag.label, members));
        }
        if covered.len() != table.len() {
            let missing = (0..table.len()).find(|r| !covered.contains(r)).unwrap_or(0);
            return Err(MilError::UnassignedInstance(table.ids()[missing].clone()));
        }
        let terms = TermTable::compile(table.m(), table.data());

        // Usage depends only on which terms carry weight, so it is the same
        // for every bi-capacity evaluated on this data.
        let mut usage = vec![0u64; pair_count(table.m())];
        for (_, members) in &rows {
            for &row in members {
                for &idx in terms.used_indices(row) {
                    usage[idx as usize] += 1;
                }
            }
        }
        Ok(MilProblem { terms, bags: rows, usage: usage.into() })
    }

    pub fn m(&self) -> usize {
        self.terms.m()
    }

    pub fn usage(&self) -> &Arc<[u64]> {
        &self.usage
    }

    pub fn bag_count(&self) -> usize {
        self.bags.len()
    }

    /// Evaluates the objective matching `g.mode()`.
    pub fn fitness(&self, g: &BiCapacity) -> Result<Fitness, MilError> {
        if g.m() != self.m() {
            return Err(MilError::DimensionMismatch { expected: g.m(), found: self.m() });
        }
        let mode = g.mode();
        let mut j_neg = 0.0;
        let mut j_pos = 0.0;
        for (label, members) in &self.bags {
            let term = bag_term(mode, *label, members.iter().map(|&r| self.terms.evaluate(g, r)));
            match label {
                BagLabel::Negative => j_neg += term,
                BagLabel::Positive => j_pos += term,
            }
        }
        Ok(Fitness { j_total: j_neg + j_pos, j_neg, j_pos, usage: Arc::clone(&self.usage) })
    }
}

fn objective(expected: Mode, g: &BiCapacity, bags: &BagSet, table: &InstanceTable) -> Result<Fitness, MilError> {
    if g.mode() != expected {
        return Err(MilError::ModeMismatch { expected, found: g.mode() });
    }
    MilProblem::new(bags, table)?.fitness(g)
}

/// Objective 1: negative bags toward `-1`, positive bags toward `+1`.
pub fn objective1(g: &BiCapacity, bags: &BagSet, table: &InstanceTable) -> Result<Fitness, MilError> {
    objective(Mode::Obj1, g, bags, table)
}

/// Objective 2: negative bags toward `0`, positive bags toward either pole.
pub fn objective2(g: &BiCapacity, bags: &BagSet, table: &InstanceTable) -> Result<Fitness, MilError> {
    objective(Mode::Obj2, g, bags, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: &str) -> String {
        v.to_string()
    }

    fn rows(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (s(a), s(b))).collect()
    }

    #[test]
    fn obj1_examples() {
        use BagLabel::*;
        let (neg, pos) = objective_from_values(Mode::Obj1, &[(Negative, vec![-1.0, -1.0]), (Positive, vec![0.2, 1.0])]);
        assert_eq!(neg + pos, 0.0);
        let (neg, _) = objective_from_values(Mode::Obj1, &[(Negative, vec![-1.0, 0.0])]);
        assert_eq!(neg, 1.0);
        let (neg, pos) = objective_from_values(
            Mode::Obj1,
            &[(Positive, vec![0.5]), (Positive, vec![-1.0, 1.0]), (Negative, vec![-0.5])],
        );
        assert_eq!(pos, 0.25);
        assert_eq!(neg, 0.25);
        assert_eq!(neg + pos, 0.5);
    }

    #[test]
    fn obj2_examples() {
        use BagLabel::*;
        assert_eq!(bag_term(Mode::Obj2, Positive, [0.3, -1.0]), 0.0);
        assert_eq!(bag_term(Mode::Obj2, Negative, [0.0, 0.0]), 0.0);
        let (neg, pos) = objective_from_values(Mode::Obj2, &[(Positive, vec![0.2, -0.7]), (Negative, vec![0.3])]);
        assert!((pos - 0.09).abs() < 1e-15);
        assert!((neg - 0.09).abs() < 1e-15);
        assert!((neg + pos - 0.18).abs() < 1e-15);
    }

    #[test]
    fn load_bags_counts() {
        let bags = load_bags(
            &rows(&[("i1", "b1"), ("i2", "b1"), ("i3", "b2"), ("i4", "b2")]),
            &[(s("b1"), BagLabel::Positive), (s("b2"), BagLabel::Negative)],
        )
        .unwrap();
        let c = bags.counts();
        assert_eq!((c.positive_bags, c.negative_bags), (1, 1));
        assert_eq!((c.positive_instances, c.negative_instances), (2, 2));
        assert_eq!(bags.bag_of("i3").unwrap().id, "b2");
        assert!(bags.require_both_classes().is_ok());
    }

    #[test]
    fn load_bags_errors() {
        let labels = [(s("b1"), BagLabel::Positive)];
        assert_eq!(load_bags(&rows(&[("i1", "b9")]), &labels), Err(MilError::UnknownBagLabel(s("b9"))));
        assert_eq!(load_bags(&rows(&[("i1", "b1"), ("i1", "b1")]), &labels), Err(MilError::DuplicateInstance(s("i1"))));
        assert_eq!(
            load_bags(&rows(&[("i1", "b1")]), &[(s("b1"), BagLabel::Positive), (s("b2"), BagLabel::Negative)]),
            Err(MilError::EmptyBag(s("b2")))
        );
        assert_eq!(
            load_bags(&rows(&[]), &[(s("b1"), BagLabel::Positive), (s("b1"), BagLabel::Negative)]),
            Err(MilError::DuplicateBagLabel(s("b1")))
        );
        let only_pos = load_bags(&rows(&[("i1", "b1")]), &labels).unwrap();
        assert_eq!(only_pos.require_both_classes(), Err(MilError::MissingClass(BagLabel::Negative)));
        assert!("0".parse::<BagLabel>().is_err());
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            InstanceTable::new(vec![s("a"), s("a")], 1, vec![0.0, 0.0]),
            Err(MilError::DuplicateInstance(_))
        ));
        assert!(matches!(InstanceTable::new(vec![s("a")], 2, vec![0.0, 1.2]), Err(MilError::Input { .. })));
        assert!(matches!(InstanceTable::new(vec![s("a")], 2, vec![0.0]), Err(MilError::Shape { .. })));
        let t = InstanceTable::with_policy(vec![s("a")], 2, vec![0.0, 1.2], InputPolicy::Clamp).unwrap();
        assert_eq!(t.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn problem_binding_errors_and_modes() {
        let table = InstanceTable::new(vec![s("a"), s("b"), s("c")], 1, vec![1.0, -1.0, 0.5]).unwrap();
        let labels = [(s("p"), BagLabel::Positive), (s("n"), BagLabel::Negative)];
        let partial = load_bags(&rows(&[("a", "p"), ("b", "n")]), &labels).unwrap();
        assert_eq!(MilProblem::new(&partial, &table).unwrap_err(), MilError::UnassignedInstance(s("c")));
        let unknown = load_bags(&rows(&[("a", "p"), ("b", "n"), ("c", "n"), ("zz", "n")]), &labels).unwrap();
        assert_eq!(MilProblem::new(&unknown, &table).unwrap_err(), MilError::UnknownInstance(s("zz")));

        let bags = load_bags(&rows(&[("a", "p"), ("b", "n"), ("c", "n")]), &labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g2 = sample_random(1, Mode::Obj2, &mut rng).unwrap();
        assert!(matches!(objective1(&g2, &bags, &table), Err(MilError::ModeMismatch { .. })));
        let f = objective2(&g2, &bags, &table).unwrap();
        // a=+1 -> 1, b=-1 -> -1, c=0.5 -> 0.5
        assert_eq!(f.j_pos, 0.0);
        assert_eq!(f.j_neg, 1.0);
        assert_eq!(f.usage_of(SubsetPair::top(1)), 2);
        assert_eq!(f.usage_of(SubsetPair::bottom(1)), 1);
        assert_eq!(f.usage_of(SubsetPair::ORIGIN), 0);
    }
}
