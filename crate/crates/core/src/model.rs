//! Events, conditional constraints, knowledge bases and probabilistic
//! interpretations over possible worlds.
//!
//! A world is a truth assignment to every event of a [`Domain`]. Worlds are
//! stored as bit patterns: bit `i` is the truth value of the `i`-th event in
//! lexicographic name order, so dumps are reproducible across runs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Probability, Rational};

/// Maximum number of events a [`Domain`] can hold (one bit per event).
pub const MAX_DOMAIN: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasicEvent(String);

impl BasicEvent {
    /// Names follow `[A-Za-z_][A-Za-z0-9_]*`.
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(BasicEvent(name))
        } else {
            Err(Error::EventName(name))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasicEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A nonempty conjunction of basic events, or the true event `⊤`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConjunctiveEvent {
    Top,
    Atoms(BTreeSet<BasicEvent>),
}

impl ConjunctiveEvent {
    pub fn new(atoms: impl IntoIterator<Item = BasicEvent>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for atom in atoms {
            if set.contains(&atom) {
                return Err(Error::DuplicateAtom(atom.0));
            }
            set.insert(atom);
        }
        if set.is_empty() {
            return Err(Error::EmptyConjunction);
        }
        Ok(ConjunctiveEvent::Atoms(set))
    }

    pub fn basic(event: BasicEvent) -> Self {
        ConjunctiveEvent::Atoms(BTreeSet::from([event]))
    }

    /// Convenience for tests and fixtures: `ConjunctiveEvent::parse_names(&["Q", "R"])`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let atoms = names
            .iter()
            .map(|n| BasicEvent::new(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        ConjunctiveEvent::new(atoms)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, ConjunctiveEvent::Top)
    }

    /// Atoms of the conjunction; empty for `⊤`.
    pub fn atoms(&self) -> impl Iterator<Item = &BasicEvent> {
        let set = match self {
            ConjunctiveEvent::Top => None,
            ConjunctiveEvent::Atoms(set) => Some(set),
        };
        set.into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        match self {
            ConjunctiveEvent::Top => 0,
            ConjunctiveEvent::Atoms(set) => set.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The single atom, if this is a basic event.
    pub fn as_basic(&self) -> Option<&BasicEvent> {
        match self {
            ConjunctiveEvent::Atoms(set) if set.len() == 1 => set.iter().next(),
            _ => None,
        }
    }

    pub fn contains(&self, event: &BasicEvent) -> bool {
        match self {
            ConjunctiveEvent::Top => false,
            ConjunctiveEvent::Atoms(set) => set.contains(event),
        }
    }

    /// Conjunction of two events; `⊤` is the neutral element.
    pub fn and(&self, other: &ConjunctiveEvent) -> ConjunctiveEvent {
        match (self, other) {
            (ConjunctiveEvent::Top, x) | (x, ConjunctiveEvent::Top) => x.clone(),
            (ConjunctiveEvent::Atoms(a), ConjunctiveEvent::Atoms(b)) => {
                ConjunctiveEvent::Atoms(a.union(b).cloned().collect())
            }
        }
    }
}

impl fmt::Display for ConjunctiveEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConjunctiveEvent::Top => f.write_str("*"),
            ConjunctiveEvent::Atoms(set) => {
                for (i, atom) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{atom}")?;
                }
                Ok(())
            }
        }
    }
}

/// `(H|G)[lower, upper]`: `lower·Pr(G) ≤ Pr(GH) ≤ upper·Pr(G)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConditionalConstraint {
    pub conclusion: ConjunctiveEvent,
    pub premise: ConjunctiveEvent,
    pub lower: Probability,
    pub upper: Probability,
}

impl ConditionalConstraint {
    pub fn new(
        conclusion: ConjunctiveEvent,
        premise: ConjunctiveEvent,
        lower: Probability,
        upper: Probability,
    ) -> Result<Self> {
        let c = ConditionalConstraint {
            conclusion,
            premise,
            lower,
            upper,
        };
        if c.lower > c.upper {
            return Err(Error::EmptyInterval(c.to_string()));
        }
        Ok(c)
    }

    /// Point constraint `(H|G)[value, value]` between two named basic events.
    pub fn point(conclusion: &str, premise: &str, value: Rational) -> Result<Self> {
        Self::between(conclusion, premise, value.clone(), value)
    }

    /// `(H|G)[lower, upper]` between two named basic events.
    pub fn between(conclusion: &str, premise: &str, lower: Rational, upper: Rational) -> Result<Self> {
        ConditionalConstraint::new(
            ConjunctiveEvent::basic(BasicEvent::new(conclusion)?),
            ConjunctiveEvent::basic(BasicEvent::new(premise)?),
            Probability::new(lower)?,
            Probability::new(upper)?,
        )
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    /// `(H|G)[1, 1]`
    pub fn is_certain(&self) -> bool {
        self.lower.value().is_one()
    }
}

impl fmt::Display for ConditionalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}|{})[{}, {}]",
            self.conclusion, self.premise, self.lower, self.upper
        )
    }
}

/// A set of basic events together with conditional constraints over them.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    events: BTreeSet<BasicEvent>,
    constraints: Vec<ConditionalConstraint>,
}

impl KnowledgeBase {
    pub fn new(events: impl IntoIterator<Item = BasicEvent>, constraints: Vec<ConditionalConstraint>) -> Result<Self> {
        let events: BTreeSet<BasicEvent> = events.into_iter().collect();
        let mut seen = HashSet::new();
        for c in &constraints {
            for atom in c.conclusion.atoms().chain(c.premise.atoms()) {
                if !events.contains(atom) {
                    return Err(Error::UnknownEvent(atom.to_string()));
                }
            }
            if c.conclusion.is_top() {
                return Err(Error::Precondition(format!("constraint {c} has a ⊤ conclusion")));
            }
            if !seen.insert((&c.conclusion, &c.premise)) {
                return Err(Error::DuplicateConstraint(format!("({}|{})", c.conclusion, c.premise)));
            }
        }
        Ok(KnowledgeBase { events, constraints })
    }

    /// Knowledge base whose events are exactly those mentioned by `constraints`.
    pub fn from_constraints(constraints: Vec<ConditionalConstraint>) -> Result<Self> {
        let events: BTreeSet<BasicEvent> = constraints
            .iter()
            .flat_map(|c| c.conclusion.atoms().chain(c.premise.atoms()).cloned())
            .collect();
        KnowledgeBase::new(events, constraints)
    }

    pub fn events(&self) -> &BTreeSet<BasicEvent> {
        &self.events
    }

    pub fn constraints(&self) -> &[ConditionalConstraint] {
        &self.constraints
    }

    pub fn event(&self, name: &str) -> Result<BasicEvent> {
        let e = BasicEvent::new(name)?;
        if self.events.contains(&e) {
            Ok(e)
        } else {
            Err(Error::UnknownEvent(name.to_string()))
        }
    }

    pub fn find(&self, conclusion: &ConjunctiveEvent, premise: &ConjunctiveEvent) -> Option<&ConditionalConstraint> {
        self.constraints
            .iter()
            .find(|c| &c.conclusion == conclusion && &c.premise == premise)
    }
}

/// Ordered event set that fixes the bit layout of worlds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    events: Vec<BasicEvent>,
    index: HashMap<BasicEvent, usize>,
}

impl Domain {
    pub fn new(events: impl IntoIterator<Item = BasicEvent>) -> Result<Self> {
        let set: BTreeSet<BasicEvent> = events.into_iter().collect();
        if set.len() > MAX_DOMAIN {
            return Err(Error::WorldCap {
                events: set.len(),
                cap: MAX_DOMAIN,
            });
        }
        let events: Vec<BasicEvent> = set.into_iter().collect();
        let index = events.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Ok(Domain { events, index })
    }

    pub fn of(kb: &KnowledgeBase) -> Result<Self> {
        Domain::new(kb.events().iter().cloned())
    }

    pub fn events(&self) -> &[BasicEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn position(&self, event: &BasicEvent) -> Result<usize> {
        self.index
            .get(event)
            .copied()
            .ok_or_else(|| Error::DomainMismatch(event.to_string()))
    }

    /// Bit mask of the atoms of `e`; `⊤` has the empty mask.
    pub fn mask(&self, e: &ConjunctiveEvent) -> Result<u64> {
        e.atoms()
            .try_fold(0u64, |m, atom| Ok(m | (1u64 << self.position(atom)?)))
    }

    /// Number of worlds, `2^n`.
    pub fn world_count(&self) -> u64 {
        1u64 << self.events.len()
    }
}

/// A complete truth assignment over a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    domain: Arc<Domain>,
    bits: u64,
}

impl World {
    pub fn new(domain: Arc<Domain>, bits: u64) -> Self {
        World { domain, bits }
    }

    /// World in which exactly the listed events are true.
    pub fn from_true(domain: Arc<Domain>, true_events: &[&str]) -> Result<Self> {
        let mut bits = 0;
        for name in true_events {
            bits |= 1u64 << domain.position(&BasicEvent::new(*name)?)?;
        }
        Ok(World { domain, bits })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn value(&self, event: &BasicEvent) -> Result<bool> {
        Ok(self.bits >> self.domain.position(event)? & 1 == 1)
    }
}

/// True iff every atom of `e` holds in `w`; `⊤` always holds.
pub fn world_satisfies(w: &World, e: &ConjunctiveEvent) -> Result<bool> {
    let mask = w.domain.mask(e)?;
    Ok(w.bits & mask == mask)
}

/// Sparse probability distribution over the worlds of a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    domain: Arc<Domain>,
    mass: BTreeMap<u64, Rational>,
}

impl Interpretation {
    /// Zero masses are dropped; masses must be nonnegative and sum to one.
    pub fn new(domain: Arc<Domain>, masses: impl IntoIterator<Item = (u64, Rational)>) -> Result<Self> {
        let limit = domain.world_count();
        let mut mass: BTreeMap<u64, Rational> = BTreeMap::new();
        for (bits, m) in masses {
            if bits >= limit {
                return Err(Error::DomainMismatch(format!("world {bits:#b}")));
            }
            if m.is_negative() {
                return Err(Error::OutOfRange(format_rational(&m)));
            }
            if m.is_zero() {
                continue;
            }
            *mass.entry(bits).or_insert_with(Rational::zero) += m;
        }
        let total: Rational = mass.values().sum();
        if !total.is_one() {
            return Err(Error::Precondition(format!(
                "interpretation masses sum to {}",
                format_rational(&total)
            )));
        }
        Ok(Interpretation { domain, mass })
    }

    /// All mass on the world where every event is false.
    pub fn trivial(domain: Arc<Domain>) -> Self {
        Interpretation {
            domain,
            mass: BTreeMap::from([(0, Rational::one())]),
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn masses(&self) -> &BTreeMap<u64, Rational> {
        &self.mass
    }

    pub fn mass(&self, bits: u64) -> Rational {
        self.mass.get(&bits).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    fn prob_mask(&self, mask: u64) -> Rational {
        self.mass
            .iter()
            .filter(|(bits, _)| *bits & mask == mask)
            .map(|(_, m)| m)
            .sum()
    }
}

/// `Pr(e)`: total mass of the worlds satisfying `e`.
pub fn prob_of(pr: &Interpretation, e: &ConjunctiveEvent) -> Result<Rational> {
    Ok(pr.prob_mask(pr.domain.mask(e)?))
}

/// `u1·Pr(G) ≤ Pr(GH) ≤ u2·Pr(G)`, exactly. Holds trivially when `Pr(G) = 0`.
pub fn check_constraint(pr: &Interpretation, c: &ConditionalConstraint) -> Result<bool> {
    let g = pr.domain.mask(&c.premise)?;
    let gh = g | pr.domain.mask(&c.conclusion)?;
    let pg = pr.prob_mask(g);
    let pgh = pr.prob_mask(gh);
    Ok(c.lower.value() * &pg <= pgh && pgh <= c.upper.value() * &pg)
}

/// Constraints of `kb` that `pr` violates; empty iff `pr` is a model of `kb`.
pub fn check_kb<'k>(pr: &Interpretation, kb: &'k KnowledgeBase) -> Result<Vec<&'k ConditionalConstraint>> {
    let mut violated = Vec::new();
    for c in kb.constraints() {
        if !check_constraint(pr, c)? {
            violated.push(c);
        }
    }
    Ok(violated)
}

/// Greatest entailed lower and least entailed upper bound of a query.
///
/// When no model gives the premise positive probability every interval is
/// entailed and the answer is the empty consequence `[1, 0]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightAnswer {
    pub lower: Probability,
    pub upper: Probability,
    pub empty_consequence: bool,
    /// Computed in floating point and rounded back; not bit-exact.
    pub approximate: bool,
    pub trace: Vec<String>,
}

impl TightAnswer {
    pub fn new(lower: Rational, upper: Rational) -> Result<Self> {
        if lower > upper {
            return Err(Error::EmptyInterval(format!(
                "[{}, {}]",
                format_rational(&lower),
                format_rational(&upper)
            )));
        }
        Ok(TightAnswer {
            lower: Probability::new(lower)?,
            upper: Probability::new(upper)?,
            empty_consequence: false,
            approximate: false,
            trace: Vec::new(),
        })
    }

    pub fn empty_consequence() -> Self {
        TightAnswer {
            lower: Probability::one(),
            upper: Probability::zero(),
            empty_consequence: true,
            approximate: false,
            trace: Vec::new(),
        }
    }

    pub fn with_trace(mut self, trace: Vec<String>) -> Self {
        self.trace = trace;
        self
    }

    pub fn lower(&self) -> &Rational {
        self.lower.value()
    }

    pub fn upper(&self) -> &Rational {
        self.upper.value()
    }

    /// Same bounds, ignoring traces and flags.
    pub fn same_bounds(&self, other: &TightAnswer) -> bool {
        self.lower == other.lower && self.upper == other.upper && self.empty_consequence == other.empty_consequence
    }
}

impl fmt::Display for TightAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}
