//! Model grammar and parameter table.
//!
//! ```text
//! F =~ a + b      latent F measured by a and b
//! y ~ x + z       y regressed on x and z
//! a ~~ b          residual covariance (a ~~ a frees a variance)
//! # comment
//! ```
//!
//! Names on the left of `=~` are latent; all others are observed.
//! Identification: every latent has unit (disturbance) variance and free
//! loadings; the indicator of a single-indicator latent has its residual
//! variance fixed at [`SINGLE_INDICATOR_RESIDUAL`].

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub const SINGLE_INDICATOR_RESIDUAL: f64 = 0.05;
pub const START_LOADING: f64 = 0.5;
pub const START_REGRESSION: f64 = 0.0;
pub const START_COVARIANCE: f64 = 0.0;
pub const START_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate link {link}")]
    Duplicate { line: usize, link: String },
    #[error("line {line}: {name} cannot point at itself")]
    SelfLoop { line: usize, name: String },
    #[error("cyclic or degenerate path structure")]
    Cyclic,
    #[error("empty model")]
    Empty,
    #[error("model not identified: {free} free parameters for {moments} observed moments")]
    NotIdentified { free: usize, moments: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// `lhs =~ rhs`: latent lhs measured by rhs.
    Loading,
    /// `lhs ~ rhs`: lhs regressed on rhs.
    Regression,
    /// `lhs ~~ rhs`.
    Covariance,
}

impl LinkKind {
    pub fn operator(self) -> &'static str {
        match self {
            LinkKind::Loading => "=~",
            LinkKind::Regression => "~",
            LinkKind::Covariance => "~~",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub kind: LinkKind,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.kind.operator(), self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Loading,
    Regression,
    Covariance,
    Variance,
}

/// One entry of the parameter table. Directed parameters run from `rhs`
/// to `lhs` (`lhs = … + value·rhs`); variances have `lhs == rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub kind: ParamKind,
    pub lhs: String,
    pub rhs: String,
    pub free: bool,
    /// Start value when free, the fixed value otherwise.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    observed: Vec<String>,
    latent: Vec<String>,
    links: Vec<Link>,
    params: Vec<Parameter>,
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

fn parse_line(line: &str, n: usize) -> Result<Option<(LinkKind, String, Vec<String>)>, ModelError> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let syntax = |message: String| ModelError::Syntax { line: n, message };
    let (kind, lhs, rhs) = if let Some((l, r)) = line.split_once("=~") {
        (LinkKind::Loading, l, r)
    } else if let Some((l, r)) = line.split_once("~~") {
        (LinkKind::Covariance, l, r)
    } else if let Some((l, r)) = line.split_once('~') {
        (LinkKind::Regression, l, r)
    } else {
        return Err(syntax(format!("expected `=~`, `~` or `~~` in {line:?}")));
    };
    let lhs = lhs.trim();
    if !is_name(lhs) {
        return Err(syntax(format!("bad variable name {lhs:?}")));
    }
    let terms: Vec<String> = rhs.split('+').map(|t| t.trim().to_string()).collect();
    if let Some(bad) = terms.iter().find(|t| !is_name(t)) {
        return Err(syntax(format!("bad variable name {bad:?}")));
    }
    if kind == LinkKind::Covariance && terms.len() != 1 {
        return Err(syntax("`~~` takes exactly one name on each side".into()));
    }
    Ok(Some((kind, lhs.to_string(), terms)))
}

/// Parses the model grammar; see the module docs.
pub fn parse_model(text: &str) -> Result<SemModel, ModelError> {
    let mut statements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(s) = parse_line(line, i + 1)? {
            statements.push((i + 1, s));
        }
    }
    if statements.is_empty() {
        return Err(ModelError::Empty);
    }
    let latent_set: HashSet<&str> = statements
        .iter()
        .filter(|(_, (k, _, _))| *k == LinkKind::Loading)
        .map(|(_, (_, l, _))| l.as_str())
        .collect();

    let mut observed = Vec::new();
    let mut latent = Vec::new();
    let mut known = HashSet::new();
    let mut links = Vec::new();
    let mut directed: HashSet<(String, String)> = HashSet::new();
    let mut undirected: HashSet<(String, String)> = HashSet::new();
    for (line, (kind, lhs, terms)) in &statements {
        for name in std::iter::once(lhs).chain(terms) {
            if known.insert(name.clone()) {
                if latent_set.contains(name.as_str()) {
                    latent.push(name.clone());
                } else {
                    observed.push(name.clone());
                }
            }
        }
        for rhs in terms {
            let link = Link {
                kind: *kind,
                lhs: lhs.clone(),
                rhs: rhs.clone(),
            };
            let fresh = match kind {
                LinkKind::Covariance => {
                    let key = if lhs <= rhs { (lhs.clone(), rhs.clone()) } else { (rhs.clone(), lhs.clone()) };
                    undirected.insert(key)
                }
                _ => {
                    if lhs == rhs {
                        return Err(ModelError::SelfLoop {
                            line: *line,
                            name: lhs.clone(),
                        });
                    }
                    // F =~ x and x ~ F are the same path
                    let (from, to) = if *kind == LinkKind::Loading { (lhs, rhs) } else { (rhs, lhs) };
                    directed.insert((from.clone(), to.clone()))
                }
            };
            if !fresh {
                return Err(ModelError::Duplicate {
                    line: *line,
                    link: link.to_string(),
                });
            }
            links.push(link);
        }
    }
    SemModel::from_parts(observed, latent, links)
}

impl SemModel {
    fn from_parts(observed: Vec<String>, latent: Vec<String>, links: Vec<Link>) -> Result<Self, ModelError> {
        let mut indicators: HashMap<&str, usize> = HashMap::new();
        let mut single_indicator: HashMap<&str, &str> = HashMap::new();
        for l in links.iter().filter(|l| l.kind == LinkKind::Loading) {
            *indicators.entry(&l.lhs).or_default() += 1;
            single_indicator.insert(&l.lhs, &l.rhs);
        }
        let pinned: HashSet<&str> = single_indicator
            .iter()
            .filter(|(f, _)| indicators[*f] == 1)
            .map(|(_, x)| *x)
            .filter(|x| !latent.iter().any(|l| l == x))
            .collect();
        let explicit_variance: HashSet<&str> = links
            .iter()
            .filter(|l| l.kind == LinkKind::Covariance && l.lhs == l.rhs)
            .map(|l| l.lhs.as_str())
            .collect();

        let mut params = Vec::new();
        for l in &links {
            let (kind, value) = match l.kind {
                LinkKind::Loading => (ParamKind::Loading, START_LOADING),
                LinkKind::Regression => (ParamKind::Regression, START_REGRESSION),
                LinkKind::Covariance if l.lhs == l.rhs => continue,
                LinkKind::Covariance => (ParamKind::Covariance, START_COVARIANCE),
            };
            // store directed parameters as (target, source)
            let (lhs, rhs) = if l.kind == LinkKind::Loading {
                (l.rhs.clone(), l.lhs.clone())
            } else {
                (l.lhs.clone(), l.rhs.clone())
            };
            params.push(Parameter {
                kind,
                lhs,
                rhs,
                free: true,
                value,
            });
        }
        for v in observed.iter().chain(&latent) {
            let is_latent = latent.contains(v);
            let (free, value) = if explicit_variance.contains(v.as_str()) {
                (true, START_VARIANCE)
            } else if is_latent {
                (false, 1.0)
            } else if pinned.contains(v.as_str()) {
                (false, SINGLE_INDICATOR_RESIDUAL)
            } else {
                (true, START_VARIANCE)
            };
            params.push(Parameter {
                kind: ParamKind::Variance,
                lhs: v.clone(),
                rhs: v.clone(),
                free,
                value,
            });
        }
        let model = SemModel {
            observed,
            latent,
            links,
            params,
        };
        if model.has_cycle() {
            return Err(ModelError::Cyclic);
        }
        Ok(model)
    }

    fn has_cycle(&self) -> bool {
        let n = self.n_vars();
        let mut edges = vec![Vec::new(); n];
        for p in self.params.iter().filter(|p| matches!(p.kind, ParamKind::Loading | ParamKind::Regression)) {
            edges[self.index_of(&p.rhs)].push(self.index_of(&p.lhs));
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(v: usize, edges: &[Vec<usize>], state: &mut [u8]) -> bool {
            state[v] = 1;
            for &w in &edges[v] {
                if state[w] == 1 || (state[w] == 0 && visit(w, edges, state)) {
                    return true;
                }
            }
            state[v] = 2;
            false
        }
        let mut state = vec![0u8; n];
        (0..n).any(|v| state[v] == 0 && visit(v, &edges, &mut state))
    }

    pub fn observed(&self) -> &[String] {
        &self.observed
    }

    pub fn latent(&self) -> &[String] {
        &self.latent
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.params
    }

    pub fn n_vars(&self) -> usize {
        self.observed.len() + self.latent.len()
    }

    /// Position in the variable ordering: observed first, then latent.
    pub fn index_of(&self, name: &str) -> usize {
        self.observed
            .iter()
            .chain(&self.latent)
            .position(|v| v == name)
            .expect("name declared in model")
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| p.free).count()
    }

    /// Counting rule: no more free parameters than observed moments.
    pub fn check_identification(&self) -> Result<(), ModelError> {
        let p = self.observed.len();
        let moments = p * (p + 1) / 2;
        if self.n_free() > moments {
            return Err(ModelError::NotIdentified {
                free: self.n_free(),
                moments,
            });
        }
        Ok(())
    }

    /// Indices into [`Self::parameters`] of the free parameters, in θ order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.params.len()).filter(|&i| self.params[i].free).collect()
    }

    pub fn start_values(&self) -> Vec<f64> {
        self.params.iter().filter(|p| p.free).map(|p| p.value).collect()
    }

    /// The same model with observed variables listed in `order`.
    pub fn with_observed_order(&self, order: &[String]) -> Option<SemModel> {
        let mut sorted = order.to_vec();
        sorted.sort();
        let mut mine = self.observed.clone();
        mine.sort();
        (sorted == mine).then(|| SemModel {
            observed: order.to_vec(),
            ..self.clone()
        })
    }

    /// Serializes back to the grammar; consecutive links sharing a left side
    /// and operator share a line.
    pub fn to_syntax(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.links.len() {
            let head = &self.links[i];
            let mut rhs = vec![head.rhs.as_str()];
            let mut j = i + 1;
            if head.kind != LinkKind::Covariance {
                while j < self.links.len() && self.links[j].kind == head.kind && self.links[j].lhs == head.lhs {
                    rhs.push(&self.links[j].rhs);
                    j += 1;
                }
            }
            out.push_str(&format!("{} {} {}\n", head.lhs, head.kind.operator(), rhs.join(" + ")));
            i = j;
        }
        out
    }
}

/// Source text of the built-in well-being model.
pub const BUILTIN_SWB_MODEL: &str = "\
# measurement
wellbeing =~ swb
Economy =~ gdp + unemp + cons + inv
# structural
wellbeing ~ Economy + le40
# residual covariances
gdp ~~ le40
gdp ~~ cons
gdp ~~ inv
gdp ~~ unemp
";

/// Economy measured by growth and unemployment, well-being driven by the
/// economy and life expectancy at 40, and the SWB index measuring
/// well-being.
pub fn builtin_swb_model() -> SemModel {
    parse_model(BUILTIN_SWB_MODEL).expect("built-in model parses")
}

/// Human-readable label for the built-in variable names.
pub fn display_name(name: &str) -> &str {
    match name {
        "wellbeing" => "Well-being",
        "Economy" => "Economy",
        "swb" => "SWB",
        "gdp" => "Economic growth",
        "unemp" => "Unemployment rate",
        "cons" => "Consumption growth",
        "inv" => "Investment growth",
        "le40" => "Life expectation at 40",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        let m = parse_model("Economy =~ gdp + cons").unwrap();
        assert_eq!(m.latent(), ["Economy"]);
        assert_eq!(m.observed(), ["gdp", "cons"]);
        assert_eq!(m.links().iter().filter(|l| l.kind == LinkKind::Loading).count(), 2);

        let m = parse_model("Wellbeing ~ Economy + le40").unwrap();
        assert!(m.latent().is_empty());
        assert_eq!(m.links().len(), 2);
        assert!(m.links().iter().all(|l| l.kind == LinkKind::Regression && l.lhs == "Wellbeing"));

        let m = parse_model("gdp ~~ le40").unwrap();
        assert_eq!(m.links(), [Link { kind: LinkKind::Covariance, lhs: "gdp".into(), rhs: "le40".into() }]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_model("F =~ a + b\n\nF => c\n").unwrap_err();
        assert_eq!(err, ModelError::Syntax { line: 3, message: "expected `=~`, `~` or `~~` in \"F => c\"".into() });
        assert!(matches!(parse_model("F =~ a + \n"), Err(ModelError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_model("F =~ a + b\nF =~ a\n"),
            Err(ModelError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            parse_model("a ~~ b\nb ~~ a\n"),
            Err(ModelError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(parse_model("y ~ y"), Err(ModelError::SelfLoop { line: 1, .. })));
        assert_eq!(parse_model("y ~ x\nx ~ y\n"), Err(ModelError::Cyclic));
        assert_eq!(parse_model("# nothing\n"), Err(ModelError::Empty));
    }

    #[test]
    fn comments_and_variances() {
        let m = parse_model("a ~~ a  # explicit variance\na ~~ b\n").unwrap();
        assert_eq!(m.observed(), ["a", "b"]);
        assert_eq!(m.n_free(), 3);
    }

    #[test]
    fn builtin_parameter_table() {
        let m = builtin_swb_model();
        assert_eq!(m.observed(), ["swb", "gdp", "unemp", "cons", "inv", "le40"]);
        assert_eq!(m.latent(), ["wellbeing", "Economy"]);
        let count = |k: ParamKind| m.parameters().iter().filter(|p| p.kind == k).count();
        // 4 economy loadings + the well-being → swb path
        assert_eq!(count(ParamKind::Loading), 5);
        assert_eq!(count(ParamKind::Regression), 2);
        assert_eq!(count(ParamKind::Covariance), 4);
        // six observed residuals, well-being disturbance, economy variance
        assert_eq!(count(ParamKind::Variance), 8);
        let fixed: Vec<_> = m.parameters().iter().filter(|p| !p.free).map(|p| (p.lhs.as_str(), p.value)).collect();
        assert_eq!(fixed, [("swb", SINGLE_INDICATOR_RESIDUAL), ("wellbeing", 1.0), ("Economy", 1.0)]);
        assert_eq!(m.n_free(), 16);
        assert_eq!(m.links().len(), 11);
    }

    #[test]
    fn builtin_round_trips() {
        let m = builtin_swb_model();
        assert_eq!(parse_model(&m.to_syntax()).unwrap(), m);
        assert_eq!(
            m.to_syntax(),
            "wellbeing =~ swb\nEconomy =~ gdp + unemp + cons + inv\nwellbeing ~ Economy + le40\ngdp ~~ le40\ngdp ~~ cons\ngdp ~~ inv\ngdp ~~ unemp\n"
        );
    }

    #[test]
    fn too_many_parameters() {
        let m = parse_model("F =~ a + b\na ~~ b\n").unwrap();
        assert_eq!(m.check_identification(), Err(ModelError::NotIdentified { free: 5, moments: 3 }));
        assert_eq!(builtin_swb_model().check_identification(), Ok(()));
    }
}
