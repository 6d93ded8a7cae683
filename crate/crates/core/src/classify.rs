//! Homomorphism and depth-bounded isomorphism of rewriting rules, and the classified grammar
//! obtained by merging isomorphic rules.
//!
//! Two rules are homomorphic when they branch in the same positions. They are isomorphic on
//! depth `X` when they are homomorphic and their corresponding children are isomorphic on
//! depth `X - 1`; leaves (the null rule) match only leaves. [`classify`] computes the
//! depth-`X` classes for a whole rule set by partition refinement, and [`to_grammar`] turns
//! the classes into a context-free grammar with production multiplicities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Child, RewritingRule, RuleId, RuleSet};

/// Branch structure of a rule with nonterminals ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeSignature {
    pub left_branch: bool,
    pub right_branch: bool,
    pub is_null_rule: bool,
}

impl ShapeSignature {
    pub const NULL: ShapeSignature = ShapeSignature {
        left_branch: false,
        right_branch: false,
        is_null_rule: true,
    };

    pub fn of(rule: &RewritingRule) -> Self {
        Self {
            left_branch: rule.left != Child::Absent,
            right_branch: rule.right != Child::Absent,
            is_null_rule: false,
        }
    }

    // Ordering used for initial class numbering: full binary rules first, null rule last.
    fn rank(&self) -> (bool, bool, bool) {
        (self.is_null_rule, !self.left_branch, !self.right_branch)
    }
}

/// A rule of some rule set, or the shared null rule.
#[derive(Debug, Clone, Copy)]
pub enum RuleRef<'a> {
    Null,
    Rule(&'a RuleSet, &'a RewritingRule),
}

impl<'a> RuleRef<'a> {
    pub fn signature(&self) -> ShapeSignature {
        match self {
            RuleRef::Null => ShapeSignature::NULL,
            RuleRef::Rule(_, r) => ShapeSignature::of(r),
        }
    }

    fn child(&self, pick: fn(&RewritingRule) -> &Child) -> Option<RuleRef<'a>> {
        match self {
            RuleRef::Null => None,
            RuleRef::Rule(set, r) => match pick(r) {
                Child::Absent => None,
                Child::Null => Some(RuleRef::Null),
                Child::Rule(id) => Some(RuleRef::Rule(set, set.get(id).expect("dangling rule reference"))),
            },
        }
    }
}

impl fmt::Display for RuleRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleRef::Null => f.write_str("null"),
            RuleRef::Rule(_, r) => write!(f, "{}", r.id),
        }
    }
}

pub fn homomorphic(a: RuleRef<'_>, b: RuleRef<'_>) -> bool {
    a.signature() == b.signature()
}

/// Pairwise recursive definition; [`classify`] computes the same relation for all rules at once.
pub fn isomorphic_at(a: RuleRef<'_>, b: RuleRef<'_>, depth: usize) -> bool {
    if !homomorphic(a, b) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let left: fn(&RewritingRule) -> &Child = |r| &r.left;
    let right: fn(&RewritingRule) -> &Child = |r| &r.right;
    [left, right]
        .into_iter()
        .all(|pick| match (a.child(pick), b.child(pick)) {
            (Some(x), Some(y)) => isomorphic_at(x, y, depth - 1),
            (None, None) => true,
            _ => false,
        })
}

/// Assignment of every rule, and the null rule, to a class numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub depth: usize,
    /// Class count.
    pub n: usize,
    /// Class of each rule of the source rule set, in its order.
    pub rule_class: Vec<usize>,
    pub null_class: usize,
}

impl Partition {
    pub fn class_of(&self, rule_index: usize) -> usize {
        self.rule_class[rule_index]
    }

    /// Member count of every class, indexed by class id - 1. The null class counts leaves.
    pub fn sizes(&self, null_count: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        for &c in &self.rule_class {
            sizes[c - 1] += 1;
        }
        sizes[self.null_class - 1] += null_count;
        sizes
    }
}

/// Child position of a node: another node index, or no branch.
type Slot = Option<usize>;

/// Splits rules into depth-`depth` isomorphism classes.
///
/// Colours start from the shape signature and each round refines them by the colours of the
/// two children, so round `d` separates exactly the rules that differ on depth `d`. New colours
/// are ordered by (old colour, left child colour, right child colour); at the end the root's
/// class is moved to the front.
pub fn classify(rs: &RuleSet, depth: usize) -> Partition {
    let n_rules = rs.rules.len();
    let null = n_rules;
    let slot = |c: &Child| -> Slot {
        match c {
            Child::Absent => None,
            Child::Null => Some(null),
            Child::Rule(id) => Some(rs.index_of(id).expect("dangling rule reference")),
        }
    };
    let children: Vec<(Slot, Slot)> = rs.rules.iter().map(|r| (slot(&r.left), slot(&r.right))).collect();

    let mut sigs: Vec<ShapeSignature> = rs.rules.iter().map(ShapeSignature::of).collect();
    sigs.push(ShapeSignature::NULL);
    let mut colour = dense_rank(&sigs.iter().map(|s| s.rank()).collect::<Vec<_>>());

    for _ in 0..depth {
        let keys: Vec<(usize, Slot, Slot)> = (0..=n_rules)
            .map(|i| {
                let (l, r) = if i == null { (None, None) } else { children[i] };
                (colour[i], l.map(|j| colour[j]), r.map(|j| colour[j]))
            })
            .collect();
        let next = dense_rank(&keys);
        let stable = count_distinct(&next) == count_distinct(&colour);
        colour = next;
        if stable {
            break;
        }
    }

    // root first, relative order of the others kept
    let n = count_distinct(&colour);
    let root_colour = if n_rules > 0 { colour[0] } else { colour[null] };
    let renumber = |c: usize| -> usize {
        if c == root_colour {
            1
        } else if c < root_colour {
            c + 2
        } else {
            c + 1
        }
    };
    Partition {
        depth,
        n,
        rule_class: colour[..n_rules].iter().map(|&c| renumber(c)).collect(),
        null_class: renumber(colour[null]),
    }
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn count_distinct(colours: &[usize]) -> usize {
    colours.iter().max().map_or(0, |m| m + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Production {
    pub mult: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarClass {
    pub id: usize,
    pub size: usize,
    pub terminal: bool,
    pub productions: Vec<Production>,
}

/// Context-free grammar over isomorphism classes. Class `i` is stored at index `i - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedGrammar {
    pub n: usize,
    pub root: usize,
    pub classes: Vec<GrammarClass>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("rule {0} does not have exactly two branches")]
    NonBinaryRule(RuleId),
    #[error("partition covers {got} rules but the rule set has {expected}")]
    PartitionMismatch { expected: usize, got: usize },
    #[error("class count {n} does not match {len} class entries")]
    ClassCount { n: usize, len: usize },
    #[error("class entry {index} has id {id}")]
    ClassId { index: usize, id: usize },
    #[error("root class {0} out of range")]
    Root(usize),
    #[error("class {class}: production target {target} out of range")]
    Target { class: usize, target: usize },
    #[error("class {0}: terminal classes take no productions")]
    TerminalWithProductions(usize),
    #[error("class {0}: non-terminal class without productions")]
    NoProductions(usize),
    #[error("class {0}: production multiplicities must be positive and sum to the class size")]
    Multiplicity(usize),
    #[error("malformed grammar JSON: {0}")]
    Json(String),
}

impl ClassifiedGrammar {
    pub fn class(&self, id: usize) -> &GrammarClass {
        &self.classes[id - 1]
    }

    pub fn root_class(&self) -> &GrammarClass {
        self.class(self.root)
    }

    /// Checks the structural invariants of a hand-built or deserialized grammar.
    pub fn validate(&self) -> Result<(), GrammarError> {
        if self.n != self.classes.len() {
            return Err(GrammarError::ClassCount {
                n: self.n,
                len: self.classes.len(),
            });
        }
        if self.root == 0 || self.root > self.n {
            return Err(GrammarError::Root(self.root));
        }
        for (index, c) in self.classes.iter().enumerate() {
            if c.id != index + 1 {
                return Err(GrammarError::ClassId { index, id: c.id });
            }
            if c.terminal {
                if !c.productions.is_empty() {
                    return Err(GrammarError::TerminalWithProductions(c.id));
                }
                continue;
            }
            if c.productions.is_empty() {
                return Err(GrammarError::NoProductions(c.id));
            }
            let mut total = 0usize;
            for p in &c.productions {
                for target in [p.left, p.right] {
                    if target == 0 || target > self.n {
                        return Err(GrammarError::Target { class: c.id, target });
                    }
                }
                if p.mult == 0 {
                    return Err(GrammarError::Multiplicity(c.id));
                }
                total = total
                    .checked_add(p.mult)
                    .ok_or(GrammarError::Multiplicity(c.id))?;
            }
            if total != c.size {
                return Err(GrammarError::Multiplicity(c.id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grammar serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GrammarError> {
        let g: ClassifiedGrammar = serde_json::from_str(s).map_err(|e| GrammarError::Json(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    /// Table-style listing: `(mult) Ci → Cl Cr` per production, `(size) Ci → null` for terminals.
    pub fn table_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.classes {
            if c.terminal {
                out.push(format!("({}) C{} → null", c.size, c.id));
            }
            for p in &c.productions {
                out.push(format!("({}) C{} → C{} C{}", p.mult, c.id, p.left, p.right));
            }
        }
        out
    }
}

/// Merges the rules of each class into distinct productions `C_i → C_l C_r` with multiplicities.
///
/// Children are labelled with classes of the same partition, so a class may refer to itself.
pub fn to_grammar(rs: &RuleSet, part: &Partition) -> Result<ClassifiedGrammar, GrammarError> {
    if part.rule_class.len() != rs.rules.len() {
        return Err(GrammarError::PartitionMismatch {
            expected: rs.rules.len(),
            got: part.rule_class.len(),
        });
    }
    let class_of_child = |c: &Child, owner: &RewritingRule| -> Result<usize, GrammarError> {
        match c {
            Child::Absent => Err(GrammarError::NonBinaryRule(owner.id.clone())),
            Child::Null => Ok(part.null_class),
            Child::Rule(id) => Ok(part.class_of(rs.index_of(id).expect("dangling rule reference"))),
        }
    };

    let mut groups: Vec<BTreeMap<(usize, usize), usize>> = vec![BTreeMap::new(); part.n];
    for (i, rule) in rs.rules.iter().enumerate() {
        let key = (
            class_of_child(&rule.left, rule)?,
            class_of_child(&rule.right, rule)?,
        );
        *groups[part.class_of(i) - 1].entry(key).or_default() += 1;
    }
    let sizes = part.sizes(rs.null_count);

    let classes = (1..=part.n)
        .map(|id| GrammarClass {
            id,
            size: sizes[id - 1],
            terminal: id == part.null_class,
            productions: groups[id - 1]
                .iter()
                .map(|(&(left, right), &mult)| Production { mult, left, right })
                .collect(),
        })
        .collect();

    let root = if rs.rules.is_empty() {
        part.null_class
    } else {
        part.class_of(0)
    };
    Ok(ClassifiedGrammar {
        n: part.n,
        root,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{extract_rules, Side};
    use crate::score::parse_text;
    use crate::tree::build_tree;

    fn rules_of(src: &str) -> RuleSet {
        extract_rules(&build_tree(&parse_text(src).unwrap()).unwrap())
    }

    fn id(s: &str) -> RuleId {
        RuleId(
            s.chars()
                .map(|c| if c == 'L' { Side::L } else { Side::R })
                .collect(),
        )
    }

    /// The small example rule set: P, T_L, T_R, T_RR, T_RRR, all with two branches.
    fn chain() -> RuleSet {
        let r = |p: &str, l: Child, rt: Child| RewritingRule {
            id: id(p),
            left: l,
            right: rt,
        };
        RuleSet {
            rules: vec![
                r("", Child::Rule(id("L")), Child::Rule(id("R"))),
                r("L", Child::Null, Child::Null),
                r("R", Child::Null, Child::Rule(id("RR"))),
                r("RR", Child::Null, Child::Rule(id("RRR"))),
                r("RRR", Child::Null, Child::Null),
            ],
            null_count: 6,
        }
    }

    #[test]
    fn all_binary_rules_are_homomorphic() {
        let rs = chain();
        let refs: Vec<_> = rs.rules.iter().map(|r| RuleRef::Rule(&rs, r)).collect();
        for a in &refs {
            for b in &refs {
                assert!(homomorphic(*a, *b));
            }
            assert!(!homomorphic(*a, RuleRef::Null));
        }
    }

    #[test]
    fn single_branch_rule_is_not_homomorphic() {
        let rs = chain();
        let lone = RuleSet {
            rules: vec![RewritingRule {
                id: id("RRRR"),
                left: Child::Null,
                right: Child::Absent,
            }],
            null_count: 1,
        };
        let odd = RuleRef::Rule(&lone, &lone.rules[0]);
        assert!(homomorphic(odd, odd));
        for r in &rs.rules {
            assert!(!homomorphic(RuleRef::Rule(&rs, r), odd));
            assert!(!isomorphic_at(RuleRef::Rule(&rs, r), odd, 3));
        }
    }

    #[test]
    fn isomorphism_by_depth() {
        let rs = chain();
        let get = |p: &str| RuleRef::Rule(&rs, rs.get(&id(p)).unwrap());
        // T_L and T_RRR are identical shapes
        assert!(isomorphic_at(get("L"), get("RRR"), 5));
        // T_R and T_RR agree on depth 1 (both: leaf, internal) but not on depth 2
        assert!(isomorphic_at(get("R"), get("RR"), 1));
        assert!(!isomorphic_at(get("R"), get("RR"), 2));
        // leaf-leaf vs leaf-internal: homomorphic only
        assert!(isomorphic_at(get("L"), get("R"), 0));
        assert!(!isomorphic_at(get("L"), get("R"), 1));
        assert!(isomorphic_at(RuleRef::Null, RuleRef::Null, 7));
    }

    #[test]
    fn single_split_grammar() {
        let rs = rules_of("1/4 1/4");
        let part = classify(&rs, 0);
        assert_eq!(
            (part.n, part.rule_class.clone(), part.null_class),
            (2, vec![1], 2)
        );
        let g = to_grammar(&rs, &part).unwrap();
        assert_eq!(g.root, 1);
        assert_eq!(
            g.class(1).productions,
            vec![Production {
                mult: 1,
                left: 2,
                right: 2
            }]
        );
        assert!(g.class(2).terminal);
        assert_eq!(g.class(2).size, 2);
        assert_eq!(g.table_lines(), vec!["(1) C1 → C2 C2", "(2) C2 → null"]);
        g.validate().unwrap();
    }

    #[test]
    fn leaf_only_grammar() {
        let rs = rules_of("1/2");
        let g = to_grammar(&rs, &classify(&rs, 3)).unwrap();
        assert_eq!(g.n, 1);
        assert_eq!(g.root, 1);
        assert!(g.root_class().terminal);
        assert!(g.root_class().productions.is_empty());
    }

    #[test]
    fn root_class_is_first() {
        // root is (leaf, internal) while other rules are (leaf, leaf) or (internal, ...)
        let rs = rules_of("1/4 1/8 1/8");
        let part = classify(&rs, 1);
        assert_eq!(part.class_of(0), 1);
        assert_eq!(part.n, 3);
    }

    #[test]
    fn grammar_json_round_trip() {
        let rs = rules_of("1/8 1/8 1/4 1/4 1/8 1/8");
        let g = to_grammar(&rs, &classify(&rs, 1)).unwrap();
        assert_eq!(ClassifiedGrammar::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn validate_rejects_bad_grammars() {
        let ok = ClassifiedGrammar {
            n: 2,
            root: 1,
            classes: vec![
                GrammarClass {
                    id: 1,
                    size: 1,
                    terminal: false,
                    productions: vec![Production {
                        mult: 1,
                        left: 2,
                        right: 2,
                    }],
                },
                GrammarClass {
                    id: 2,
                    size: 2,
                    terminal: true,
                    productions: vec![],
                },
            ],
        };
        ok.validate().unwrap();
        let mut g = ok.clone();
        g.classes[0].productions[0].left = 3;
        assert_eq!(g.validate(), Err(GrammarError::Target { class: 1, target: 3 }));
        let mut g = ok.clone();
        g.classes[0].size = 2;
        assert_eq!(g.validate(), Err(GrammarError::Multiplicity(1)));
        let mut g = ok.clone();
        g.root = 0;
        assert_eq!(g.validate(), Err(GrammarError::Root(0)));
        assert!(matches!(
            ClassifiedGrammar::from_json("{"),
            Err(GrammarError::Json(_))
        ));
    }
}
