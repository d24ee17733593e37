//! Corpus-level statistics over build outcomes.
//!
//! Success splits, error-frequency tables, and success ratio per
//! equal-population bin of a project metric, with the Pearson correlation
//! between bin centre and bin success ratio.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::diagnostics::{self, Category, Diagnostic};
use crate::num::Real;
use crate::pipeline::{OutcomeRecord, OutcomeStatus};
use crate::tsv;

pub const DEFAULT_BIN_COUNT: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub success_round1: usize,
    pub success_round2: usize,
    pub fail: usize,
    /// Round-2 successes whose plan set an encoding.
    pub encoding_fixes: usize,
    /// Round-2 successes whose plan added classpath entries.
    pub dependency_fixes: usize,
}

impl Totals {
    pub fn total(&self) -> usize {
        self.success_round1 + self.success_round2 + self.fail
    }

    pub fn successes(&self) -> usize {
        self.success_round1 + self.success_round2
    }

    /// Share of successful projects; zero for an empty corpus.
    pub fn success_ratio<T: Real>(&self) -> T {
        match self.total() {
            0 => T::zero(),
            n => T::from_count(self.successes()) / T::from_count(n),
        }
    }
}

pub fn success_summary(records: &[OutcomeRecord]) -> Totals {
    let mut t = Totals::default();
    for r in records {
        match r.status {
            OutcomeStatus::SuccessRound1 => t.success_round1 += 1,
            OutcomeStatus::SuccessRound2 => {
                t.success_round2 += 1;
                t.encoding_fixes += usize::from(r.encoding.is_some());
                t.dependency_fixes += usize::from(r.classpath_size > 0);
            }
            OutcomeStatus::Fail => t.fail += 1,
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountingMode {
    /// Each project counts once per category it shows.
    PerProject,
    /// Every diagnostic counts.
    PerInstance,
}

impl CountingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountingMode::PerProject => "per_project",
            CountingMode::PerInstance => "per_instance",
        }
    }
}

/// Non-zero category frequencies, descending, ties by category name.
pub fn error_frequency(records: &[OutcomeRecord], mode: CountingMode) -> Vec<(Category, usize)> {
    let lists = records.iter().map(|r| r.diagnostics.as_slice());
    let hist: BTreeMap<Category, usize> = match mode {
        CountingMode::PerProject => diagnostics::classify_histogram(lists),
        CountingMode::PerInstance => diagnostics::instance_histogram(lists),
    };
    let mut rows: Vec<(Category, usize)> = hist.into_iter().filter(|(_, n)| *n > 0).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.as_str().cmp(b.0.as_str())));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SourceFileCount,
    EmbeddedJarCount,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::SourceFileCount, Metric::EmbeddedJarCount];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::SourceFileCount => "source_file_count",
            Metric::EmbeddedJarCount => "embedded_jar_count",
        }
    }

    pub fn of(self, r: &OutcomeRecord) -> usize {
        match self {
            Metric::SourceFileCount => r.source_file_count,
            Metric::EmbeddedJarCount => r.embedded_jar_count,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One bin: metric range `[lo, hi]` (inclusive, as observed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin<T> {
    pub lo: T,
    pub hi: T,
    pub n: usize,
    pub successes: usize,
    pub ratio: T,
    /// Percentage of all binned projects in this and earlier bins.
    pub cum_pct: T,
}

impl<T: Real> Bin<T> {
    pub fn center(&self) -> T {
        (self.lo + self.hi) / T::from_count(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binning<T> {
    pub bins: Vec<Bin<T>>,
    pub requested: usize,
}

impl<T> Binning<T> {
    /// Ties in the metric merged some requested bins.
    pub fn collapsed(&self) -> bool {
        self.bins.len() < self.requested
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BinningError {
    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("{projects} projects cannot fill {bins} bins; use a bin count of at most {projects}")]
    TooFewProjects { projects: usize, bins: usize },
}

/// Equal-population bins over `(metric, success)` points.
///
/// Bins hold `n / bin_count` points give or take one; a boundary that would
/// split equal metric values moves forward past them, so bin ranges never
/// overlap and heavily tied data yields fewer bins than requested.
pub fn bin_points<T: Real>(points: &[(T, bool)], bin_count: usize) -> Result<Binning<T>, BinningError> {
    if bin_count < 2 {
        return Err(BinningError::TooFewBins(bin_count));
    }
    let n = points.len();
    if n < bin_count {
        return Err(BinningError::TooFewProjects { projects: n, bins: bin_count });
    }
    let mut sorted: Vec<(T, bool)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("metric values are finite"));

    let mut bounds = vec![0usize];
    for i in 1..bin_count {
        let mut b = i * n / bin_count;
        while b < n && sorted[b].0 == sorted[b - 1].0 {
            b += 1;
        }
        if b < n && b > *bounds.last().expect("non-empty") {
            bounds.push(b);
        }
    }
    bounds.push(n);

    let total = T::from_count(n);
    let hundred = T::from_count(100);
    let mut cumulative = 0;
    let bins = bounds
        .windows(2)
        .map(|w| {
            let chunk = &sorted[w[0]..w[1]];
            let successes = chunk.iter().filter(|p| p.1).count();
            cumulative += chunk.len();
            Bin {
                lo: chunk[0].0,
                hi: chunk[chunk.len() - 1].0,
                n: chunk.len(),
                successes,
                ratio: T::from_count(successes) / T::from_count(chunk.len()),
                cum_pct: T::from_count(cumulative) * hundred / total,
            }
        })
        .collect();
    Ok(Binning { bins, requested: bin_count })
}

pub fn binned_success_ratio<T: Real>(
    records: &[OutcomeRecord],
    metric: Metric,
    bin_count: usize,
) -> Result<Binning<T>, BinningError> {
    let points: Vec<(T, bool)> = records
        .iter()
        .map(|r| (T::from_count(metric.of(r)), r.status.is_success()))
        .collect();
    bin_points(&points, bin_count)
}

/// A correlation coefficient, or the reason there is none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation<T> {
    Defined(T),
    /// One of the series has zero variance.
    Undefined,
}

impl<T: Copy> Correlation<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Correlation::Defined(r) => Some(r),
            Correlation::Undefined => None,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Correlation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correlation::Defined(r) => write!(f, "{r:.6}"),
            Correlation::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PearsonError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
}

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Real>(xs: &[T], ys: &[T]) -> Result<Correlation<T>, PearsonError> {
    if xs.len() != ys.len() {
        return Err(PearsonError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(PearsonError::TooShort(xs.len()));
    }
    let n = T::from_count(xs.len());
    let mean = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc + x) / n;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Ok(Correlation::Undefined);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(Correlation::Defined(r.max(-T::one()).min(T::one())))
}

/// Correlation between bin centre and bin success ratio.
pub fn bin_correlation<T: Real>(bins: &[Bin<T>]) -> Correlation<T> {
    let xs: Vec<T> = bins.iter().map(Bin::center).collect();
    let ys: Vec<T> = bins.iter().map(|b| b.ratio).collect();
    pearson(&xs, &ys).unwrap_or(Correlation::Undefined)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats<T> {
    pub totals: Totals,
    pub mode: CountingMode,
    pub error_table: Vec<(Category, usize)>,
    pub metrics: Vec<MetricStats<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricStats<T> {
    pub metric: Metric,
    pub binning: Result<Binning<T>, BinningError>,
    pub pearson_r: Correlation<T>,
}

pub fn corpus_stats<T: Real>(records: &[OutcomeRecord], bin_count: usize, mode: CountingMode) -> CorpusStats<T> {
    let metrics = Metric::ALL
        .iter()
        .map(|&metric| {
            let binning = binned_success_ratio(records, metric, bin_count);
            let pearson_r = binning
                .as_ref()
                .map_or(Correlation::Undefined, |b| bin_correlation(&b.bins));
            MetricStats { metric, binning, pearson_r }
        })
        .collect();
    CorpusStats {
        totals: success_summary(records),
        mode,
        error_table: error_frequency(records, mode),
        metrics,
    }
}

impl<T: Real> CorpusStats<T> {
    pub fn summary_tsv(&self) -> String {
        let t = &self.totals;
        let mut s = String::from("key\tvalue\n");
        let mut put = |k: &str, v: String| s.push_str(&tsv::row([k, &v]));
        put("projects", t.total().to_string());
        put("success_round1", t.success_round1.to_string());
        put("success_round2", t.success_round2.to_string());
        put("fail", t.fail.to_string());
        put("encoding_fixes", t.encoding_fixes.to_string());
        put("dependency_fixes", t.dependency_fixes.to_string());
        put("success_ratio", format!("{:.6}", t.success_ratio::<T>()));
        for m in &self.metrics {
            put(&format!("pearson_{}", m.metric), m.pearson_r.to_string());
        }
        s
    }

    pub fn errors_tsv(&self) -> String {
        let mut s = format!("category\t{}\n", self.mode.as_str());
        for (cat, n) in &self.error_table {
            s.push_str(&tsv::row([cat.as_str(), &n.to_string()]));
        }
        s
    }

    pub fn bins_tsv(&self, metric: Metric) -> String {
        let mut s = String::from("lo\thi\tn\tratio\tcum_pct\n");
        let Some(Ok(binning)) = self.metrics.iter().find(|m| m.metric == metric).map(|m| &m.binning) else {
            return s;
        };
        for b in &binning.bins {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.6}\t{:.6}", b.lo, b.hi, b.n, b.ratio, b.cum_pct);
        }
        s
    }

    pub fn text_summary(&self) -> String {
        let t = &self.totals;
        let pct = t.success_ratio::<T>() * T::from_count(100);
        let mut s = String::new();
        let _ = writeln!(s, "projects: {}", t.total());
        let _ = writeln!(s, "built: {} ({pct:.1}%)", t.successes());
        let _ = writeln!(s, "  round 1: {}", t.success_round1);
        let _ = writeln!(
            s,
            "  round 2: {} (encoding fixes {}, dependency fixes {})",
            t.success_round2, t.encoding_fixes, t.dependency_fixes
        );
        let _ = writeln!(s, "failed: {}", t.fail);
        let _ = writeln!(s);
        let _ = writeln!(s, "errors of failed projects ({}):", self.mode.as_str());
        let _ = writeln!(
            s,
            "  note: categories overlap; the counting unit of published error tables is ambiguous, \
             see errors.tsv header for the unit used here"
        );
        for (cat, n) in &self.error_table {
            let _ = writeln!(s, "  {cat:<28} {n}");
        }
        for m in &self.metrics {
            let _ = writeln!(s);
            match &m.binning {
                Ok(b) => {
                    let _ = writeln!(s, "{}: {} bins, pearson r = {}", m.metric, b.bins.len(), m.pearson_r);
                    if b.collapsed() {
                        let _ = writeln!(
                            s,
                            "  warning: tied metric values merged {} requested bins into {}",
                            b.requested,
                            b.bins.len()
                        );
                    }
                }
                Err(e) => {
                    let _ = writeln!(s, "{}: not binned ({e}); pearson r = undefined", m.metric);
                }
            }
        }
        s
    }
}

/// Diagnostics of every record, for callers that want the raw lists.
pub fn all_diagnostics(records: &[OutcomeRecord]) -> impl Iterator<Item = &Diagnostic> {
    records.iter().flat_map(|r| r.diagnostics.iter())
}
