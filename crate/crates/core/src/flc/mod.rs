//! The FLC data model: a representation (linear inequalities over rates and
//! conditional mutual informations) plus polynomial constraints tying the
//! joint distribution `p` to the channel vector `q`.
//!
//! FLC files are JSON documents; see [`FlcSpec`] for the schema. Rate terms
//! use 1-based terminal numbers (`R_ij` is the rate from terminal `i` to
//! terminal `j`); every other index is 0-based.

mod builtins;
mod plan;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::polynomial::Polynomial;
use crate::prob::{Alphabet, ChannelSpec, IndexSet};
use crate::rational::Rational;
use crate::{Error, Result};

pub use builtins::{builtin_dmc, builtin_han_kobayashi, builtin_marton, HkSizes};
pub use plan::{Block, BlockKind, FactorizationPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateTerm {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub beta: Rational,
}

/// `alpha · I(U; Y | Z)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiTerm {
    #[serde(with = "crate::rational::serde_str")]
    pub alpha: Rational,
    #[serde(rename = "U")]
    pub u: IndexSet,
    #[serde(rename = "Y")]
    pub y: IndexSet,
    #[serde(rename = "Z", default)]
    pub z: IndexSet,
}

/// `Σ β R_ij + Σ α I(U;Y|Z)  rel  0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    #[serde(rename = "rates", default)]
    pub rate_terms: Vec<RateTerm>,
    #[serde(rename = "mi", default)]
    pub mi_terms: Vec<MiTerm>,
    #[serde(rename = "rel")]
    pub relation: Relation,
}

/// Shape of the channel vector `q` the constraints were written against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelShape {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub states: usize,
}

impl ChannelShape {
    pub fn of(c: &ChannelSpec) -> Self {
        Self {
            inputs: c.input_sizes(),
            outputs: c.output_sizes(),
            states: c.n_states(),
        }
    }

    pub fn q_len(&self) -> usize {
        self.inputs.iter().product::<usize>() * self.outputs.iter().product::<usize>() * self.states * self.states
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlcSpec {
    #[serde(default)]
    pub alphabets: Vec<Alphabet>,
    #[serde(default)]
    pub n_users: usize,
    #[serde(default)]
    pub representation: Vec<Inequality>,
    #[serde(default)]
    pub constraints: Vec<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<FactorizationPlan>,
}

fn invalid(msg: String) -> Error {
    Error::Validation(msg)
}

impl FlcSpec {
    pub fn sizes(&self) -> Vec<usize> {
        self.alphabets.iter().map(|a| a.size).collect()
    }

    /// Size of the product alphabet, i.e. the length of `p`.
    pub fn joint_size(&self) -> usize {
        self.sizes().iter().product()
    }

    /// Distinct `(i, j)` pairs with a nonzero total coefficient somewhere.
    pub fn rate_variables(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .representation
            .iter()
            .flat_map(|ineq| ineq.rate_terms.iter().map(|t| (t.i, t.j)))
            .collect();
        set.into_iter().collect()
    }

    /// Checks every structural invariant of the spec.
    pub fn validate(&self) -> Result<()> {
        if self.representation.is_empty() {
            return Err(invalid("no representation".into()));
        }
        if self.alphabets.is_empty() {
            return Err(invalid("no alphabets".into()));
        }
        let mut names = BTreeSet::new();
        for (k, a) in self.alphabets.iter().enumerate() {
            if a.size == 0 {
                return Err(invalid(format!("alphabets[{k}] ({}) has size 0", a.name)));
            }
            if !names.insert(a.name.as_str()) {
                return Err(invalid(format!("alphabet name {:?} is not unique", a.name)));
            }
        }
        let k = self.alphabets.len();
        let joint = self
            .alphabets
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.size))
            .ok_or_else(|| invalid("product alphabet is too large".into()))?;
        if self.n_users == 0 {
            return Err(invalid("n_users must be positive".into()));
        }
        for (r, ineq) in self.representation.iter().enumerate() {
            if ineq.rate_terms.is_empty() && ineq.mi_terms.is_empty() {
                return Err(invalid(format!("representation[{r}] has no terms")));
            }
            for (t, rate) in ineq.rate_terms.iter().enumerate() {
                let here = format!("representation[{r}].rates[{t}]");
                if rate.i == rate.j {
                    return Err(invalid(format!("{here}: rate R_{}{} is a self-loop", rate.i, rate.j)));
                }
                if rate.i == 0 || rate.j == 0 || rate.i > self.n_users || rate.j > self.n_users {
                    return Err(invalid(format!("{here}: terminals must lie in 1..={}", self.n_users)));
                }
            }
            for (v, term) in ineq.mi_terms.iter().enumerate() {
                let here = format!("representation[{r}].mi[{v}]");
                if term.u.is_empty() || term.y.is_empty() {
                    return Err(invalid(format!("{here}: U and Y must be nonempty")));
                }
                for (set, name) in [(&term.u, "U"), (&term.y, "Y"), (&term.z, "Z")] {
                    if set.check_range(k).is_err() {
                        return Err(invalid(format!(
                            "{here}: {name} = {set} references an alphabet outside 0..{k}"
                        )));
                    }
                }
                for (a, b, name) in [
                    (&term.u, &term.y, "U ∩ Y"),
                    (&term.u, &term.z, "U ∩ Z"),
                    (&term.y, &term.z, "Y ∩ Z"),
                ] {
                    let common = a.intersection(b);
                    if !common.is_empty() {
                        return Err(invalid(format!(
                            "{here}: MI term index sets overlap ({name} = {common})"
                        )));
                    }
                }
            }
        }
        let q_len = self.channel.as_ref().map(ChannelShape::q_len);
        for (c, f) in self.constraints.iter().enumerate() {
            if let Some(i) = f.max_p_index() {
                if i >= joint {
                    return Err(invalid(format!(
                        "constraints[{c}] references p{i} but p has {joint} entries"
                    )));
                }
            }
            if let (Some(j), Some(len)) = (f.max_q_index(), q_len) {
                if j >= len {
                    return Err(invalid(format!(
                        "constraints[{c}] references q{j} but q has {len} entries"
                    )));
                }
            }
        }
        if let Some(plan) = &self.structured {
            plan.validate(&self.sizes(), q_len)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("FLC serializes")
    }
}

/// Parses and validates an FLC document.
pub fn parse_flc(text: &str) -> Result<FlcSpec> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            msg: "no representation".into(),
        });
    }
    let spec: FlcSpec = serde_json::from_str(text).map_err(|e| Error::parse_json(&e))?;
    spec.validate()?;
    Ok(spec)
}

pub fn print_flc(spec: &FlcSpec) -> String {
    spec.to_json()
}

/// Checks that `c` has the shape the constraints and the plan expect.
pub fn validate_against_channel(flc: &FlcSpec, c: &ChannelSpec) -> Result<()> {
    if flc.n_users != c.n_terminals() {
        return Err(Error::DimensionMismatch(format!(
            "FLC has {} terminals, channel has {} ({} inputs + {} outputs)",
            flc.n_users,
            c.n_terminals(),
            c.input_alphabets().len(),
            c.output_alphabets().len()
        )));
    }
    if let Some(shape) = &flc.channel {
        let actual = ChannelShape::of(c);
        if *shape != actual {
            return Err(Error::DimensionMismatch(format!(
                "q length {} ≠ expected {} (FLC expects inputs {:?}, outputs {:?}, {} states; \
                 channel has inputs {:?}, outputs {:?}, {} states)",
                actual.q_len(),
                shape.q_len(),
                shape.inputs,
                shape.outputs,
                shape.states,
                actual.inputs,
                actual.outputs,
                actual.states
            )));
        }
    }
    let q_len = c.q_len();
    for (k, f) in flc.constraints.iter().enumerate() {
        if let Some(j) = f.max_q_index() {
            if j >= q_len {
                return Err(Error::DimensionMismatch(format!(
                    "constraints[{k}] references q{j}, channel q has length {q_len}"
                )));
            }
        }
    }
    if let Some(plan) = &flc.structured {
        if let Some(j) = plan.max_q_index() {
            if j >= q_len {
                return Err(Error::DimensionMismatch(format!(
                    "factorization plan references q{j}, channel q has length {q_len}"
                )));
            }
        }
    }
    Ok(())
}
