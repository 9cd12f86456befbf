//! Stochastic STRIPS: atoms, ADD/DEL effects, action schemas, grounding, and
//! the text domain format.
//!
//! ```text
//! objects: o1
//! init-random: Painted(o1), Polished(o1), Scratched(o1)
//! goal: Finished(o1)
//!
//! action paint(X): reward = -1
//! PRE: none
//! ADD: Painted(X) DEL: none PROB: 0.6
//! ADD: Painted(X), Scratched(X) DEL: none PROB: 0.3
//! ADD: none DEL: none PROB: 0.1
//! ```
//!
//! Arguments starting with an uppercase letter are variables.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    /// Substitutes schema variables with the bound objects.
    pub fn ground(&self, params: &[String], binding: &[String]) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|arg| match params.iter().position(|p| p == arg) {
                    Some(i) => binding[i].clone(),
                    None => arg.clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.predicate)
        } else {
            write!(f, "{}({})", self.predicate, self.args.join(", "))
        }
    }
}

pub fn is_variable(term: &str) -> bool {
    term.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// A STRIPS ground state: the set of true atoms.
pub type StripsState = BTreeSet<Atom>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StripsEffect {
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl StripsEffect {
    pub fn ground(&self, params: &[String], binding: &[String]) -> StripsEffect {
        StripsEffect {
            add: self.add.iter().map(|a| a.ground(params, binding)).collect(),
            del: self.del.iter().map(|a| a.ground(params, binding)).collect(),
        }
    }
}

/// `s' = (s \ DEL) ∪ ADD` with set semantics.
pub fn apply_effect(state: &StripsState, effect: &StripsEffect) -> StripsState {
    let mut next = state.clone();
    for atom in &effect.del {
        next.remove(atom);
    }
    for atom in &effect.add {
        next.insert(atom.clone());
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<String>,
    pub precondition: Vec<Atom>,
    pub effects: Vec<StripsEffect>,
    /// Simulator-side truth; learners never read it.
    pub probs: Option<Vec<f64>>,
    pub reward: f64,
}

impl ActionSchema {
    pub fn validate(&self) -> Result<()> {
        if self.effects.is_empty() {
            return Err(Error::invalid(format!("schema `{}` has no effects", self.name)));
        }
        for (i, effect) in self.effects.iter().enumerate() {
            if let Some(atom) = effect.add.iter().find(|a| effect.del.contains(a)) {
                return Err(Error::invalid(format!(
                    "effect {i} of `{}` both adds and deletes {atom}",
                    self.name
                )));
            }
        }
        if let Some(probs) = &self.probs {
            if probs.len() != self.effects.len() {
                return Err(Error::invalid(format!(
                    "`{}` has {} effects but {} probabilities",
                    self.name,
                    self.effects.len(),
                    probs.len()
                )));
            }
            let total: f64 = probs.iter().sum();
            if probs.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "probabilities of `{}` do not form a distribution (sum {total})",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// One binding of a schema to objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub schema: usize,
    pub binding: Vec<String>,
}

/// All injective bindings of `schema`'s parameters to `objects`, in
/// lexicographic order of object positions.
pub fn ground(schema: &ActionSchema, objects: &[String]) -> Vec<Vec<String>> {
    let k = schema.arity();
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(k);
    fn rec(k: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in 0..n {
            if !current.contains(&i) {
                current.push(i);
                rec(k, n, current, out);
                current.pop();
            }
        }
    }
    let mut index_sets = Vec::new();
    rec(k, objects.len(), &mut current, &mut index_sets);
    for set in index_sets {
        out.push(set.into_iter().map(|i| objects[i].clone()).collect());
    }
    out
}

/// How episodes pick their first state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialStates {
    Fixed(Vec<Atom>),
    /// Each listed atom is present independently with probability 1/2.
    RandomSubset(Vec<Atom>),
}

impl Default for InitialStates {
    fn default() -> Self {
        InitialStates::Fixed(Vec::new())
    }
}

impl InitialStates {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StripsState {
        match self {
            InitialStates::Fixed(atoms) => atoms.iter().cloned().collect(),
            InitialStates::RandomSubset(atoms) => atoms
                .iter()
                .filter(|_| rng.gen::<f64>() < 0.5)
                .cloned()
                .collect(),
        }
    }

    pub fn support(&self) -> Vec<StripsState> {
        match self {
            InitialStates::Fixed(atoms) => vec![atoms.iter().cloned().collect()],
            InitialStates::RandomSubset(atoms) => (0..1usize << atoms.len())
                .map(|mask| {
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, a)| a.clone())
                        .collect()
                })
                .collect(),
        }
    }
}

/// A parsed domain file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StripsDomainSpec {
    pub objects: Vec<String>,
    pub init: InitialStates,
    /// Episode ends once every goal atom holds; empty means never.
    pub goal: Vec<Atom>,
    pub schemas: Vec<ActionSchema>,
}

impl StripsDomainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Parser::default().parse(text)
    }

    /// Canonical text form; `parse(serialize(d)) == d`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if !self.objects.is_empty() {
            out.push_str(&format!("objects: {}\n", self.objects.join(", ")));
        }
        match &self.init {
            InitialStates::Fixed(atoms) if atoms.is_empty() => {}
            InitialStates::Fixed(atoms) => out.push_str(&format!("init: {}\n", atom_list(atoms))),
            InitialStates::RandomSubset(atoms) => {
                out.push_str(&format!("init-random: {}\n", atom_list(atoms)))
            }
        }
        if !self.goal.is_empty() {
            out.push_str(&format!("goal: {}\n", atom_list(&self.goal)));
        }
        for schema in &self.schemas {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!(
                "action {}({}): reward = {}\n",
                schema.name,
                schema.params.join(", "),
                schema.reward
            ));
            out.push_str(&format!("PRE: {}\n", atom_list(&schema.precondition)));
            for (i, effect) in schema.effects.iter().enumerate() {
                out.push_str(&format!("ADD: {} DEL: {}", atom_list(&effect.add), atom_list(&effect.del)));
                if let Some(probs) = &schema.probs {
                    out.push_str(&format!(" PROB: {}", probs[i]));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn atom_list(atoms: &[Atom]) -> String {
    if atoms.is_empty() {
        "none".to_string()
    } else {
        atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Default)]
struct Parser {
    spec: StripsDomainSpec,
    current: Option<(ActionSchema, usize)>,
    probs: Vec<Option<f64>>,
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<StripsDomainSpec> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            let indent = line.len() - line.trim_start().len();
            let line = line.trim_start();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let col = indent + 1;
            if let Some(rest) = line.strip_prefix("action ") {
                self.finish()?;
                self.start_action(rest, line_no, col + "action ".len())?;
            } else if let Some(rest) = line.strip_prefix("PRE:") {
                let (schema, _) = self
                    .current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, col, "PRE outside of an action block"))?;
                schema.precondition = parse_atoms(rest, line_no, col + 4)?;
            } else if line.starts_with("ADD:") {
                self.effect_line(line, line_no, col)?;
            } else if let Some(rest) = line.strip_prefix("objects:") {
                self.spec.objects = split_top_level(rest)
                    .into_iter()
                    .map(|(_, s)| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
            } else if let Some(rest) = line.strip_prefix("init-random:") {
                self.spec.init = InitialStates::RandomSubset(parse_atoms(rest, line_no, col + 12)?);
            } else if let Some(rest) = line.strip_prefix("init:") {
                self.spec.init = InitialStates::Fixed(parse_atoms(rest, line_no, col + 5)?);
            } else if let Some(rest) = line.strip_prefix("goal:") {
                self.spec.goal = parse_atoms(rest, line_no, col + 5)?;
            } else {
                return Err(Error::parse(line_no, col, format!("unrecognised line `{line}`")));
            }
        }
        self.finish()?;
        Ok(self.spec)
    }

    fn start_action(&mut self, rest: &str, line: usize, col: usize) -> Result<()> {
        let (head, tail) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse(line, col, "expected `name(params): reward = r`"))?;
        let atom = parse_atom(head.trim(), line, col)?;
        if let Some(bad) = atom.args.iter().find(|a| !is_variable(a)) {
            return Err(Error::parse(line, col, format!("schema parameter `{bad}` must be a variable")));
        }
        let reward_col = col + head.len() + 1;
        let reward_text = tail
            .trim()
            .strip_prefix("reward")
            .and_then(|r| r.trim_start().strip_prefix('='))
            .ok_or_else(|| Error::parse(line, reward_col, "expected `reward = <number>`"))?;
        let reward: f64 = reward_text
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, reward_col, format!("bad reward `{}`", reward_text.trim())))?;
        self.current = Some((
            ActionSchema {
                name: atom.predicate,
                params: atom.args,
                precondition: Vec::new(),
                effects: Vec::new(),
                probs: None,
                reward,
            },
            line,
        ));
        self.probs.clear();
        Ok(())
    }

    fn effect_line(&mut self, line_text: &str, line: usize, col: usize) -> Result<()> {
        let (schema, _) = self
            .current
            .as_mut()
            .ok_or_else(|| Error::parse(line, col, "effect outside of an action block"))?;
        let del_at = line_text
            .find("DEL:")
            .ok_or_else(|| Error::parse(line, col, "effect line needs a DEL: section"))?;
        let prob_at = line_text.find("PROB:");
        let add_text = &line_text["ADD:".len()..del_at];
        let del_end = prob_at.unwrap_or(line_text.len());
        if del_end < del_at {
            return Err(Error::parse(line, col + del_end, "PROB: must follow DEL:"));
        }
        let del_text = &line_text[del_at + 4..del_end];
        let effect = StripsEffect {
            add: parse_atoms(add_text, line, col + 4)?,
            del: parse_atoms(del_text, line, col + del_at + 4)?,
        };
        let prob = match prob_at {
            Some(at) => {
                let text = line_text[at + 5..].trim();
                Some(
                    text.parse::<f64>()
                        .map_err(|_| Error::parse(line, col + at + 5, format!("bad probability `{text}`")))?,
                )
            }
            None => None,
        };
        schema.effects.push(effect);
        self.probs.push(prob);
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        let Some((mut schema, line)) = self.current.take() else {
            return Ok(());
        };
        let given = self.probs.iter().filter(|p| p.is_some()).count();
        schema.probs = if given == 0 {
            None
        } else if given == self.probs.len() {
            Some(self.probs.iter().map(|p| p.unwrap()).collect())
        } else {
            return Err(Error::parse(line, 1, format!(
                "`{}`: either every effect or none must carry PROB",
                schema.name
            )));
        };
        schema
            .validate()
            .map_err(|e| Error::parse(line, 1, e.to_string()))?;
        self.spec.schemas.push(schema);
        Ok(())
    }
}

/// Splits on commas outside parentheses, keeping each piece's byte offset.
fn split_top_level(text: &str) -> Vec<(usize, &str)> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push((start, &text[start..]));
    parts
}

fn parse_atoms(text: &str, line: usize, col: usize) -> Result<Vec<Atom>> {
    let trimmed = text.trim();
    if trimmed == "none" {
        return Ok(Vec::new());
    }
    if trimmed.is_empty() {
        return Err(Error::parse(line, col, "expected atoms or `none`"));
    }
    split_top_level(text)
        .into_iter()
        .map(|(offset, piece)| {
            let lead = piece.len() - piece.trim_start().len();
            parse_atom(piece.trim(), line, col + offset + lead)
        })
        .collect()
}

fn parse_atom(text: &str, line: usize, col: usize) -> Result<Atom> {
    let valid_ident = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
    let (name, args) = match text.find('(') {
        None => (text, Vec::new()),
        Some(open) => {
            let inner = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::parse(line, col + text.len(), "missing `)`"))?;
            let args: Vec<String> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            if let Some(bad) = args.iter().find(|a| !valid_ident(a)) {
                return Err(Error::parse(line, col + open + 1, format!("bad argument `{bad}`")));
            }
            (&text[..open], args)
        }
    };
    if !valid_ident(name) {
        return Err(Error::parse(line, col, format!("bad predicate name `{name}`")));
    }
    Ok(Atom {
        predicate: name.to_string(),
        args,
    })
}
