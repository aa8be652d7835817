//! Receptor rules: named predicates over raw event features.
//!
//! A receptor fires when its predicate holds on the raw (pre-normalization)
//! value of one named feature. Firing receptors amplify how hard the next
//! training step pulls the map (`learn_multiplier`) and contribute a danger
//! score used by the gate. Combination rules give specific receptor sets
//! their own effect, overriding the per-receptor defaults; the most
//! specific matching combination wins.
//!
//! Rulesets are immutable after compilation, and evaluation is a pure
//! function of the ruleset and the raw feature map, so they can be shared
//! freely.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw feature value: numeric reading or symbolic flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Num(f64),
    Flag(String),
}

/// Predicate over one raw feature. `Gte`/`Lte` are boundary-inclusive and
/// only hold on numeric values; `Eq` compares exactly within the same kind;
/// `In` tests membership in a configured set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value")]
pub enum Predicate {
    #[serde(rename = ">=")]
    Gte(f64),
    #[serde(rename = "<=")]
    Lte(f64),
    #[serde(rename = "==")]
    Eq(RawValue),
    #[serde(rename = "in")]
    In(Vec<RawValue>),
}

impl Predicate {
    fn holds(&self, value: &RawValue) -> bool {
        match (self, value) {
            (Predicate::Gte(t), RawValue::Num(x)) => x >= t,
            (Predicate::Lte(t), RawValue::Num(x)) => x <= t,
            (Predicate::Eq(expected), actual) => expected == actual,
            (Predicate::In(set), actual) => set.contains(actual),
            _ => false,
        }
    }

    fn validate(&self, owner: &str) -> Result<()> {
        let finite = |v: &RawValue| match v {
            RawValue::Num(x) => x.is_finite(),
            RawValue::Flag(_) => true,
        };
        let ok = match self {
            Predicate::Gte(t) | Predicate::Lte(t) => t.is_finite(),
            Predicate::Eq(v) => finite(v),
            Predicate::In(set) => set.iter().all(finite),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("receptor '{owner}' has a non-finite threshold")))
        }
    }
}

/// One named receptor: a predicate watching one raw feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptorSpec {
    pub name: String,
    pub feature: String,
    #[serde(flatten)]
    pub predicate: Predicate,
}

/// Effect applied when receptors fire: growth amplification (never below 1)
/// and a danger score in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlrEffect {
    #[serde(rename = "mult")]
    pub learn_multiplier: f64,
    pub danger: f64,
}

impl TlrEffect {
    pub const IDENTITY: TlrEffect = TlrEffect { learn_multiplier: 1.0, danger: 0.0 };

    fn validate(&self, owner: &str) -> Result<()> {
        if !self.learn_multiplier.is_finite() || self.learn_multiplier < 1.0 {
            return Err(Error::config(format!(
                "effect for '{owner}' has learn multiplier {}, expected >= 1",
                self.learn_multiplier
            )));
        }
        if !self.danger.is_finite() || !(0.0..=1.0).contains(&self.danger) {
            return Err(Error::config(format!(
                "effect for '{owner}' has danger {}, expected in [0,1]",
                self.danger
            )));
        }
        Ok(())
    }
}

/// Effect for a specific set of receptors firing together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboRule {
    pub members: BTreeSet<String>,
    #[serde(flatten)]
    pub effect: TlrEffect,
}

/// The receptor names currently firing.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActivationSet {
    active: BTreeSet<String>,
}

impl ActivationSet {
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ActivationSet { active: names.into_iter().map(Into::into).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.active.contains(name)
    }

    /// Active names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.active.iter().map(String::as_str)
    }
}

/// A compiled, validated set of receptors, per-receptor effects and
/// combination rules.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TlrRuleSet {
    #[serde(default)]
    receptors: Vec<ReceptorSpec>,
    #[serde(default)]
    singles: BTreeMap<String, TlrEffect>,
    #[serde(default)]
    combos: Vec<ComboRule>,
}

impl TlrRuleSet {
    /// Build and validate a ruleset from parts. Receptors without an
    /// explicit single effect default to the identity effect.
    pub fn new(
        receptors: Vec<ReceptorSpec>,
        singles: BTreeMap<String, TlrEffect>,
        combos: Vec<ComboRule>,
    ) -> Result<Self> {
        let rules = TlrRuleSet { receptors, singles, combos };
        rules.validate()?;
        Ok(rules)
    }

    /// Parse a ruleset from its JSON configuration text and validate it.
    pub fn compile(text: &str) -> Result<Self> {
        let rules: TlrRuleSet =
            serde_json::from_str(text).map_err(|e| Error::config(format!("receptor config: {e}")))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn receptors(&self) -> &[ReceptorSpec] {
        &self.receptors
    }

    pub fn combos(&self) -> &[ComboRule] {
        &self.combos
    }

    /// Single effect for a receptor (identity when not configured).
    pub fn single_effect(&self, name: &str) -> TlrEffect {
        self.singles.get(name).copied().unwrap_or(TlrEffect::IDENTITY)
    }

    pub fn validate(&self) -> Result<()> {
        let mut declared = BTreeSet::new();
        for spec in &self.receptors {
            if !declared.insert(spec.name.as_str()) {
                return Err(Error::config(format!("duplicate receptor name '{}'", spec.name)));
            }
            spec.predicate.validate(&spec.name)?;
        }
        for (name, effect) in &self.singles {
            if !declared.contains(name.as_str()) {
                return Err(Error::config(format!(
                    "single effect references undeclared receptor '{name}'"
                )));
            }
            effect.validate(name)?;
        }
        let mut seen_members = BTreeSet::new();
        for combo in &self.combos {
            if combo.members.is_empty() {
                return Err(Error::config("combo rule with empty member set".to_string()));
            }
            for member in &combo.members {
                if !declared.contains(member.as_str()) {
                    return Err(Error::config(format!(
                        "combo references undeclared receptor '{member}'"
                    )));
                }
            }
            let key: Vec<&str> = combo.members.iter().map(String::as_str).collect();
            let label = key.join("+");
            if !seen_members.insert(key) {
                return Err(Error::config(format!("duplicate combo member set '{label}'")));
            }
            combo.effect.validate(&label)?;
        }
        Ok(())
    }

    /// Evaluate every receptor against a raw feature map. A receptor is
    /// active iff its feature is present and its predicate holds; a missing
    /// feature is never an error, the receptor simply stays quiet.
    pub fn evaluate(&self, raw: &BTreeMap<String, RawValue>) -> ActivationSet {
        let active = self
            .receptors
            .iter()
            .filter(|spec| raw.get(&spec.feature).is_some_and(|v| spec.predicate.holds(v)))
            .map(|spec| spec.name.clone())
            .collect();
        ActivationSet { active }
    }

    /// Resolve the effect of an activation set.
    ///
    /// If any combo's members are all active, the combo with the largest
    /// member set wins (ties resolve to the lexicographically smallest
    /// sorted member list). Otherwise the singles of the active receptors
    /// compose: multipliers multiply, dangers take the max. An empty
    /// activation yields the identity effect.
    pub fn effect_of(&self, activation: &ActivationSet) -> TlrEffect {
        let mut best: Option<&ComboRule> = None;
        for combo in &self.combos {
            if !combo.members.iter().all(|m| activation.contains(m)) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    combo.members.len() > b.members.len()
                        || (combo.members.len() == b.members.len() && combo.members < b.members)
                }
            };
            if better {
                best = Some(combo);
            }
        }
        if let Some(combo) = best {
            return combo.effect;
        }
        let mut effect = TlrEffect::IDENTITY;
        for name in activation.names() {
            let single = self.single_effect(name);
            effect.learn_multiplier *= single.learn_multiplier;
            effect.danger = effect.danger.max(single.danger);
        }
        effect
    }
}
