//! Rewriting rules extracted from rhythmic trees, one per internal node.

use std::fmt;

use crate::tree::{Content, RhythmTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    L,
    R,
}

/// Path from the root; the empty path names the root rule `P`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RuleId(pub Vec<Side>);

impl RuleId {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn child(&self, side: Side) -> Self {
        let mut path = self.0.clone();
        path.push(side);
        Self(path)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for RuleId {
    /// `P`, `L`, `R`, then `L_L`, `R_LRL`, ...: the first step names the subtree and the rest
    /// is written as a subscript.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = |s: &Side| match s {
            Side::L => 'L',
            Side::R => 'R',
        };
        match self.0.split_first() {
            None => f.write_str("P"),
            Some((first, rest)) => {
                write!(f, "{}", letter(first))?;
                if !rest.is_empty() {
                    f.write_str("_")?;
                    for s in rest {
                        write!(f, "{}", letter(s))?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// What a rule places in one branch position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Child {
    /// A leaf: the branch draws `F` and stops.
    Null,
    /// A subtree expanded by another rule.
    Rule(RuleId),
    /// No branch at all. Extraction never produces this; it exists so hand-written rules
    /// such as `X -> [-F]` can be represented.
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RewritingRule {
    pub id: RuleId,
    pub left: Child,
    pub right: Child,
}

/// Rules in preorder plus the number of leaves, which all share one null rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    pub rules: Vec<RewritingRule>,
    pub null_count: usize,
}

impl RuleSet {
    pub fn index_of(&self, id: &RuleId) -> Option<usize> {
        // preorder of paths with L < R is lexicographic order
        self.rules.binary_search_by(|r| r.id.cmp(id)).ok()
    }

    pub fn get(&self, id: &RuleId) -> Option<&RewritingRule> {
        self.index_of(id).map(|i| &self.rules[i])
    }

    pub fn root(&self) -> Option<&RewritingRule> {
        self.rules.first().filter(|r| r.id.0.is_empty())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rebuilds the canonical bracketed string by expanding from the root rule.
    pub fn expand(&self) -> String {
        let mut out = String::new();
        match self.root() {
            None => out.push('F'),
            Some(root) => self.expand_rule(root, &mut out),
        }
        out
    }

    fn expand_rule(&self, rule: &RewritingRule, out: &mut String) {
        for (open, child) in [("[-", &rule.left), ("[+", &rule.right)] {
            match child {
                Child::Absent => continue,
                Child::Null => {
                    out.push_str(open);
                    out.push('F');
                }
                Child::Rule(id) => {
                    out.push_str(open);
                    let sub = self.get(id).expect("dangling rule reference");
                    self.expand_rule(sub, out);
                }
            }
            out.push(']');
        }
    }
}

pub fn extract_rules(tree: &RhythmTree) -> RuleSet {
    let mut set = RuleSet::default();
    walk(tree, RuleId::root(), &mut set);
    set
}

fn walk(tree: &RhythmTree, id: RuleId, set: &mut RuleSet) {
    match &tree.content {
        Content::Leaf(_) => set.null_count += 1,
        Content::Internal(l, r) => {
            let child = |t: &RhythmTree, side| {
                if t.is_leaf() {
                    Child::Null
                } else {
                    Child::Rule(id.child(side))
                }
            };
            set.rules.push(RewritingRule {
                id: id.clone(),
                left: child(l, Side::L),
                right: child(r, Side::R),
            });
            walk(l, id.child(Side::L), set);
            walk(r, id.child(Side::R), set);
        }
    }
}

/// Renders one rule in bracketed production form, e.g. `R_LL → [-F R_LLL][+F]`.
pub fn format_rule(rule: &RewritingRule) -> String {
    let mut rhs = String::new();
    for (open, child) in [("[-F", &rule.left), ("[+F", &rule.right)] {
        match child {
            Child::Absent => continue,
            Child::Null => rhs.push_str(open),
            Child::Rule(id) => {
                rhs.push_str(open);
                rhs.push(' ');
                rhs.push_str(&id.to_string());
            }
        }
        rhs.push(']');
    }
    format!("{} → {}", rule.id, rhs)
}

/// One line per rule, in preorder.
pub fn rules_to_productions(rs: &RuleSet) -> Vec<String> {
    rs.rules.iter().map(format_rule).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracketed::encode;
    use crate::score::parse_text;
    use crate::tree::build_tree;

    fn rules_of(src: &str) -> (RhythmTree, RuleSet) {
        let t = build_tree(&parse_text(src).unwrap()).unwrap();
        let rs = extract_rules(&t);
        (t, rs)
    }

    fn id(s: &str) -> RuleId {
        RuleId(
            s.chars()
                .map(|c| if c == 'L' { Side::L } else { Side::R })
                .collect(),
        )
    }

    #[test]
    fn ids_display() {
        assert_eq!(RuleId::root().to_string(), "P");
        assert_eq!(id("L").to_string(), "L");
        assert_eq!(id("RLL").to_string(), "R_LL");
    }

    #[test]
    fn leaf_only() {
        let (_, rs) = rules_of("1/2");
        assert!(rs.rules.is_empty());
        assert_eq!(rs.null_count, 1);
        assert!(rules_to_productions(&rs).is_empty());
        assert_eq!(rs.expand(), "F");
    }

    #[test]
    fn three_leaf_tree() {
        let (t, rs) = rules_of("1/4 1/8 1/8");
        assert_eq!(
            rs.rules,
            vec![
                RewritingRule {
                    id: RuleId::root(),
                    left: Child::Null,
                    right: Child::Rule(id("R"))
                },
                RewritingRule {
                    id: id("R"),
                    left: Child::Null,
                    right: Child::Null
                },
            ]
        );
        assert_eq!(rs.null_count, 3);
        assert_eq!(rs.expand(), encode(&t).as_str());
        assert_eq!(
            rules_to_productions(&rs),
            vec!["P → [-F][+F R]".to_string(), "R → [-F][+F]".to_string()]
        );
    }

    #[test]
    fn left_internal_formatting() {
        let rule = RewritingRule {
            id: id("RLL"),
            left: Child::Rule(id("RLLL")),
            right: Child::Null,
        };
        assert_eq!(format_rule(&rule), "R_LL → [-F R_LLL][+F]");
        let single = RewritingRule {
            id: id("RRRR"),
            left: Child::Null,
            right: Child::Absent,
        };
        assert_eq!(format_rule(&single), "R_RRR → [-F]");
    }

    #[test]
    fn lookup_by_path() {
        let (_, rs) = rules_of("1/8 1/8 1/4 1/4 1/8 1/8");
        for (i, r) in rs.rules.iter().enumerate() {
            assert_eq!(rs.index_of(&r.id), Some(i));
        }
        assert_eq!(rs.index_of(&id("LLLL")), None);
    }
}
