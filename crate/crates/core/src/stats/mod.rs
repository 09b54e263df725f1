//! Paired-rating evaluation: per-context aggregation, signed-rank tests
//! with Holm correction, effect sizes, summaries and box-plot data.

mod wilcoxon;

pub use wilcoxon::{
    exact_p, holm_correct, midranks, normal_p, rank_biserial, rank_biserial_matched, wilcoxon_signed_rank, PMethod,
    SignedRankTest, EXACT_MAX_N,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Deserialize;

pub const SCORE_MIN: f64 = 1.0;
pub const SCORE_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("ratings line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid ratings: {0}")]
    Invalid(String),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no pairs to test")]
    Empty,
    #[error("degenerate-no-signal: every paired difference is zero")]
    DegenerateNoSignal,
    #[error("context {context} has no ratings for version {version}")]
    MissingVersion { context: u32, version: Version },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Version {
    Human,
    Ai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Emotional,
    Rhythmic,
    Chromatic,
}

impl Version {
    pub const ALL: [Version; 2] = [Version::Human, Version::Ai];

    pub fn as_str(&self) -> &'static str {
        match self {
            Version::Human => "human",
            Version::Ai => "ai",
        }
    }
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Emotional, Attribute::Rhythmic, Attribute::Chromatic];

    pub fn as_str(&self) -> &'static str {
        match self {
            Attribute::Emotional => "emotional",
            Attribute::Rhythmic => "rhythmic",
            Attribute::Chromatic => "chromatic",
        }
    }
}

impl std::fmt::Display for Version {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::fmt::Display for Attribute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Rating {
    pub participant: String,
    pub context: u32,
    pub version: Version,
    pub attribute: Attribute,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatingsTable {
    pub rows: Vec<Rating>,
}

impl RatingsTable {
    pub fn new(rows: Vec<Rating>) -> Result<Self, StatsError> {
        let t = Self { rows };
        t.check()?;
        Ok(t)
    }

    /// Parses `participant,context,version,attribute,score` CSV with a header.
    pub fn from_csv(text: &str) -> Result<Self, StatsError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header_ok = reader
            .headers()
            .map(|h| h.iter().eq(["participant", "context", "version", "attribute", "score"]))
            .unwrap_or(false);
        if !header_ok {
            return Err(StatsError::Parse {
                line: 1,
                message: "expected header participant,context,version,attribute,score".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize::<Rating>().enumerate() {
            rows.push(rec.map_err(|e| StatsError::Parse {
                line: i + 2,
                message: e.to_string(),
            })?);
        }
        Self::new(rows)
    }

    pub fn check(&self) -> Result<(), StatsError> {
        let mut seen = BTreeSet::new();
        for r in &self.rows {
            if !(SCORE_MIN..=SCORE_MAX).contains(&r.score) {
                return Err(StatsError::Invalid(format!(
                    "score {} for participant {} outside {SCORE_MIN}..{SCORE_MAX}",
                    r.score, r.participant
                )));
            }
            if !seen.insert((&r.participant, r.context, r.version, r.attribute)) {
                return Err(StatsError::Invalid(format!(
                    "duplicate rating: participant {}, context {}, {}, {}",
                    r.participant, r.context, r.version, r.attribute
                )));
            }
        }
        Ok(())
    }

    pub fn contexts(&self) -> BTreeSet<u32> {
        self.rows.iter().map(|r| r.context).collect()
    }

    pub fn participants(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.participant.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextMean {
    pub context: u32,
    pub version: Version,
    pub attribute: Attribute,
    pub mean: f64,
    /// Participants contributing to the mean.
    pub n: usize,
}

/// Mean score over participants for every (context, version, attribute)
/// cell, plus warnings for cells some participants skipped.
pub fn aggregate_by_context(table: &RatingsTable) -> Result<(Vec<ContextMean>, Vec<String>), StatsError> {
    let mut cells: BTreeMap<(u32, Version, Attribute), Vec<f64>> = BTreeMap::new();
    let mut raters: BTreeMap<u32, BTreeSet<&str>> = BTreeMap::new();
    for r in &table.rows {
        cells
            .entry((r.context, r.version, r.attribute))
            .or_default()
            .push(r.score);
        raters.entry(r.context).or_default().insert(&r.participant);
    }
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (&context, who) in &raters {
        for version in Version::ALL {
            if !Attribute::ALL
                .iter()
                .any(|&a| cells.contains_key(&(context, version, a)))
            {
                return Err(StatsError::MissingVersion { context, version });
            }
            for attribute in Attribute::ALL {
                let Some(scores) = cells.get(&(context, version, attribute)) else {
                    warnings.push(format!(
                        "context {context}: no {version} ratings for {attribute}; cell excluded"
                    ));
                    continue;
                };
                if scores.len() < who.len() {
                    warnings.push(format!(
                        "context {context}, {version}, {attribute}: {} of {} participants missing",
                        who.len() - scores.len(),
                        who.len()
                    ));
                }
                out.push(ContextMean {
                    context,
                    version,
                    attribute,
                    mean: scores.iter().sum::<f64>() / scores.len() as f64,
                    n: scores.len(),
                });
            }
        }
    }
    Ok((out, warnings))
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPlot {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Most extreme observations within 1.5·IQR of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn box_plot(values: &[f64]) -> Option<BoxPlot> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v
        .iter()
        .copied()
        .filter(|x| (lo_fence..=hi_fence).contains(x))
        .collect();
    Some(BoxPlot {
        q1,
        median,
        q3,
        whisker_low: inside.first().copied().unwrap_or(q1),
        whisker_high: inside.last().copied().unwrap_or(q3),
        outliers: v
            .iter()
            .copied()
            .filter(|x| !(lo_fence..=hi_fence).contains(x))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Average over participants per context, then pair by context.
    Context,
    /// Pair raw scores per participant and context.
    Rater,
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "context" => Ok(Level::Context),
            "rater" => Ok(Level::Rater),
            _ => Err(format!("unknown level `{s}` (expected context or rater)")),
        }
    }
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Context => "context",
            Level::Rater => "rater",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub w: f64,
    pub p: f64,
    pub p_holm: f64,
    /// `1 − W / (n(n+1)/2)`.
    pub r: f64,
    /// `(T⁺ − T⁻) / (T⁺ + T⁻)` with differences `ai − human`.
    pub r_matched: f64,
    pub n: usize,
    pub method: PMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTest {
    pub attribute: Attribute,
    /// Pairs entering the test, `(human, ai)`.
    pub pairs: usize,
    pub result: Result<TestResult, StatsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VersionSummary {
    pub attribute: Attribute,
    pub version: Version,
    pub mean: f64,
    pub median: f64,
    pub box_plot: BoxPlot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub level: Level,
    pub tests: Vec<AttributeTest>,
    pub summaries: Vec<VersionSummary>,
    pub warnings: Vec<String>,
}

type Observations = BTreeMap<Attribute, BTreeMap<(String, u32), [Option<f64>; 2]>>;

/// Observations per attribute as `(key, version) → score`, keyed by context
/// or by (participant, context).
fn observations(table: &RatingsTable, level: Level) -> Result<(Observations, Vec<String>), StatsError> {
    let mut obs = Observations::new();
    let slot = |v: Version| match v {
        Version::Human => 0,
        Version::Ai => 1,
    };
    let warnings = match level {
        Level::Context => {
            let (means, warnings) = aggregate_by_context(table)?;
            for m in means {
                obs.entry(m.attribute)
                    .or_default()
                    .entry((String::new(), m.context))
                    .or_default()[slot(m.version)] = Some(m.mean);
            }
            warnings
        }
        Level::Rater => {
            for r in &table.rows {
                obs.entry(r.attribute)
                    .or_default()
                    .entry((r.participant.clone(), r.context))
                    .or_default()[slot(r.version)] = Some(r.score);
            }
            Vec::new()
        }
    };
    Ok((obs, warnings))
}

/// Tests every attribute (ai vs human), Holm-corrects across the attributes
/// that could be tested, and summarizes each version.
pub fn run_evaluation(table: &RatingsTable, level: Level) -> Result<Evaluation, StatsError> {
    table.check()?;
    if table.rows.is_empty() {
        return Err(StatsError::Empty);
    }
    let (obs, mut warnings) = observations(table, level)?;
    let mut tests = Vec::new();
    let mut summaries = Vec::new();
    for attribute in Attribute::ALL {
        let cells = obs.get(&attribute).cloned().unwrap_or_default();
        let mut human = Vec::new();
        let mut ai = Vec::new();
        for ((who, ctx), pair) in &cells {
            match pair {
                [Some(h), Some(a)] => {
                    human.push(*h);
                    ai.push(*a);
                }
                _ => warnings.push(match level {
                    Level::Context => format!("{attribute}: context {ctx} unpaired; dropped"),
                    Level::Rater => format!("{attribute}: participant {who}, context {ctx} unpaired; dropped"),
                }),
            }
        }
        let result = if human.is_empty() {
            Err(StatsError::Empty)
        } else {
            wilcoxon_signed_rank(&ai, &human).map(|t| TestResult {
                w: t.w,
                p: t.p,
                p_holm: t.p,
                r: rank_biserial(t.w, t.n),
                r_matched: rank_biserial_matched(t.t_plus, t.t_minus),
                n: t.n,
                method: t.method,
            })
        };
        tests.push(AttributeTest {
            attribute,
            pairs: human.len(),
            result,
        });
        for version in Version::ALL {
            let values: Vec<f64> = cells
                .values()
                .filter_map(|p| p[if version == Version::Human { 0 } else { 1 }])
                .collect();
            if let Some(bp) = box_plot(&values) {
                summaries.push(VersionSummary {
                    attribute,
                    version,
                    mean: values.iter().sum::<f64>() / values.len() as f64,
                    median: bp.median,
                    box_plot: bp,
                });
            }
        }
    }
    let raw: Vec<f64> = tests
        .iter()
        .filter_map(|t| t.result.as_ref().ok().map(|r| r.p))
        .collect();
    let adjusted = holm_correct(&raw)?;
    let mut it = adjusted.into_iter();
    for t in tests.iter_mut() {
        if let Ok(r) = t.result.as_mut() {
            r.p_holm = it.next().expect("one adjusted p per tested attribute");
        }
    }
    Ok(Evaluation {
        level,
        tests,
        summaries,
        warnings,
    })
}

/// CSV of the per-attribute results.
pub fn results_csv(eval: &Evaluation) -> String {
    let mut s = String::from("level,attribute,n,W,p,p_holm,r,r_matched,method,status\n");
    for t in &eval.tests {
        match &t.result {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},ok",
                    eval.level.as_str(),
                    t.attribute,
                    r.n,
                    r.w,
                    r.p,
                    r.p_holm,
                    r.r,
                    r.r_matched,
                    r.method.as_str()
                );
            }
            Err(e) => {
                let status = match e {
                    StatsError::DegenerateNoSignal => "degenerate-no-signal",
                    _ => "error",
                };
                let _ = writeln!(s, "{},{},0,,,,,,,{status}", eval.level.as_str(), t.attribute);
            }
        }
    }
    s
}

/// Markdown report: test table plus per-version means and medians.
pub fn markdown_report(eval: &Evaluation) -> String {
    let mut s = format!(
        "## Wilcoxon signed-rank tests ({} level)\n\n\
         | Attribute | n | W | p | p (Holm) | r | r (matched pairs) | p method |\n\
         |---|---|---|---|---|---|---|---|\n",
        eval.level.as_str()
    );
    for t in &eval.tests {
        match &t.result {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.1} | {:.4} | {:.4} | {:.4} | {:.4} | {} |",
                    t.attribute,
                    r.n,
                    r.w,
                    r.p,
                    r.p_holm,
                    r.r,
                    r.r_matched,
                    r.method.as_str()
                );
            }
            Err(e) => {
                let _ = writeln!(s, "| {} | – | – | – | – | – | – | {e} |", t.attribute);
            }
        }
    }
    s.push_str(
        "\nW = min(T+, T−) after dropping zero differences; r = 1 − W / (n(n+1)/2); \
         matched-pairs r = (T+ − T−) / (T+ + T−) with differences ai − human.\n\n",
    );
    s.push_str("## Scores by version\n\n| Attribute | Version | Mean | Median | Q1 | Q3 | Outliers |\n|---|---|---|---|---|---|---|\n");
    for v in &eval.summaries {
        let _ = writeln!(
            s,
            "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
            v.attribute,
            v.version,
            v.mean,
            v.median,
            v.box_plot.q1,
            v.box_plot.q3,
            v.box_plot.outliers.len()
        );
    }
    if !eval.warnings.is_empty() {
        s.push_str("\n## Warnings\n\n");
        for w in &eval.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: &str, c: u32, v: Version, a: Attribute, score: f64) -> Rating {
        Rating {
            participant: p.into(),
            context: c,
            version: v,
            attribute: a,
            score,
        }
    }

    #[test]
    fn mean_of_two_participants() {
        let t = RatingsTable::new(vec![
            row("p1", 1, Version::Human, Attribute::Emotional, 6.0),
            row("p2", 1, Version::Human, Attribute::Emotional, 8.0),
            row("p1", 1, Version::Ai, Attribute::Emotional, 5.0),
        ])
        .unwrap();
        let (means, warnings) = aggregate_by_context(&t).unwrap();
        assert_eq!(means[0].mean, 7.0);
        assert_eq!(means.iter().find(|m| m.version == Version::Ai).unwrap().mean, 5.0);
        // missing attributes and the skipped participant are reported
        assert!(!warnings.is_empty());
    }

    #[test]
    fn context_without_a_version_is_an_error() {
        let t = RatingsTable::new(vec![row("p1", 3, Version::Human, Attribute::Emotional, 6.0)]).unwrap();
        assert_eq!(
            aggregate_by_context(&t),
            Err(StatsError::MissingVersion {
                context: 3,
                version: Version::Ai
            })
        );
    }

    #[test]
    fn csv_parsing_and_checks() {
        let ok = "participant,context,version,attribute,score\np1,1,human,emotional,6\np1,1,ai,emotional,7\n";
        assert_eq!(RatingsTable::from_csv(ok).unwrap().rows.len(), 2);
        let dup = "participant,context,version,attribute,score\np1,1,human,emotional,6\np1,1,human,emotional,7\n";
        assert!(matches!(RatingsTable::from_csv(dup), Err(StatsError::Invalid(_))));
        let range = "participant,context,version,attribute,score\np1,1,human,emotional,11\n";
        assert!(matches!(RatingsTable::from_csv(range), Err(StatsError::Invalid(_))));
        let bad = "participant,context,version,attribute,score\np1,1,robot,emotional,5\n";
        assert!(matches!(
            RatingsTable::from_csv(bad),
            Err(StatsError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn type7_quartiles_and_whiskers() {
        let bp = box_plot(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((bp.q1, bp.median, bp.q3), (2.0, 3.0, 4.0));
        assert_eq!((bp.whisker_low, bp.whisker_high), (1.0, 4.0));
        assert_eq!(bp.outliers, vec![100.0]);
    }
}
