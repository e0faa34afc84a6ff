//! Waiting-time distributions and fits.
//!
//! Durations are binned per integer tick (unit bins), in geometrically
//! growing bins (log bins), or in equal-width bins over a window, then
//! fitted by ordinary least squares in the appropriate log space:
//! exponential decay as ln(density) on x, power laws as ln(density) on
//! ln(x). Zero durations (taker side of continuous trades) carry no
//! waiting information and are excluded everywhere.
//!
//! The default fit windows in [`fit_run`] are expressed in units of one
//! simulated day of ticks. Waiting times well past a day are dominated by
//! slow price drift reviving long-dormant orders rather than by queue
//! dynamics, and the far tail of the long side piles up there; windows
//! anchored to the day scale keep the regressions on the decay laws the
//! fits are meant to measure while the reported `x_lo`/`x_hi`/`r_squared`
//! keep the choice auditable.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::events::Phase;
use crate::sim::{PendingSample, SampleKind};

/// Growth factor between consecutive log-bin edges.
pub const LOG_BIN_RATIO: f64 = 1.25;

/// Tail fits start past this multiple of the median duration by default.
pub const TAIL_CROSSOVER_MEDIANS: f64 = 10.0;

/// Tail fits span `(crossover, TAIL_SPAN_FACTOR * crossover]`; further out
/// almost every unit bin holds a single observation and the regression
/// would read the quantized count floor instead of the decay.
pub const TAIL_SPAN_FACTOR: f64 = 30.0;

/// Power-law fits span the first `POWER_FIT_DAYS` simulated days of
/// waiting time.
pub const POWER_FIT_DAYS: u64 = 5;

/// The absolute-series exponential fit spans one decade of waiting times
/// ending at one simulated day.
pub const ABS_FIT_SPAN_DECADE: f64 = 10.0;

/// Number of equal-width bins for the absolute-series exponential fit;
/// coarse bins average out the integer-count quantization that unit bins
/// suffer at these depths.
pub const ABS_FIT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no usable observations")]
    EmptyInput,
    #[error("need at least 3 fit points, got {got}")]
    InsufficientPoints { got: usize },
    #[error("invalid range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("{0}")]
    Degenerate(&'static str),
}

/// Binned distribution of positive integer durations. Bins are
/// `[bin_lo, bin_hi)`, non-overlapping and ascending; `x` is each bin's
/// representative abscissa (the integer itself for unit bins, the geometric
/// mean of the edges for log bins, the center for equal-width bins).
/// `probabilities` are fractions of all recorded positive durations — they
/// sum to 1 for unit and log bins, which cover every observation, and to
/// the covered fraction for equal-width bins over a window. `densities`
/// divide them by bin width.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub kind: SampleKind,
    pub bin_lo: Vec<f64>,
    pub bin_hi: Vec<f64>,
    pub x: Vec<f64>,
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    /// One bin per observed integer duration. Unobserved integers do not
    /// get bins, so the structure stays small under heavy tails.
    pub fn unit(kind: SampleKind, durations: &[u64]) -> Result<Histogram, StatsError> {
        let mut freq = std::collections::BTreeMap::new();
        for &d in durations.iter().filter(|&&d| d >= 1) {
            *freq.entry(d).or_insert(0u64) += 1;
        }
        if freq.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        let total: u64 = freq.values().sum();
        let mut h = Histogram {
            kind,
            bin_lo: Vec::with_capacity(freq.len()),
            bin_hi: Vec::with_capacity(freq.len()),
            x: Vec::with_capacity(freq.len()),
            counts: Vec::with_capacity(freq.len()),
            probabilities: Vec::with_capacity(freq.len()),
            densities: Vec::with_capacity(freq.len()),
        };
        for (d, c) in freq {
            let p = c as f64 / total as f64;
            h.bin_lo.push(d as f64);
            h.bin_hi.push(d as f64 + 1.0);
            h.x.push(d as f64);
            h.counts.push(c);
            h.probabilities.push(p);
            h.densities.push(p);
        }
        Ok(h)
    }

    /// Geometric bins starting at 1, each `ratio` times wider than the
    /// last. Empty bins inside the covered range are kept: they simply
    /// contribute no fit points.
    pub fn log_binned(
        kind: SampleKind,
        durations: &[u64],
        ratio: f64,
    ) -> Result<Histogram, StatsError> {
        if !(ratio > 1.0) {
            return Err(StatsError::Degenerate("log-bin ratio must exceed 1"));
        }
        let kept: Vec<u64> = durations.iter().copied().filter(|&d| d >= 1).collect();
        if kept.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        let max = *kept.iter().max().unwrap() as f64;
        let mut edges = vec![1.0f64];
        while *edges.last().unwrap() <= max {
            let next = edges.last().unwrap() * ratio;
            edges.push(next);
        }
        let n_bins = edges.len() - 1;
        let mut counts = vec![0u64; n_bins];
        for &d in &kept {
            let v = d as f64;
            // First edge strictly above v closes v's bin.
            let idx = edges.partition_point(|&e| e <= v) - 1;
            counts[idx.min(n_bins - 1)] += 1;
        }
        let total = kept.len() as f64;
        let mut h = Histogram {
            kind,
            bin_lo: Vec::with_capacity(n_bins),
            bin_hi: Vec::with_capacity(n_bins),
            x: Vec::with_capacity(n_bins),
            counts: Vec::with_capacity(n_bins),
            probabilities: Vec::with_capacity(n_bins),
            densities: Vec::with_capacity(n_bins),
        };
        for i in 0..n_bins {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let p = counts[i] as f64 / total;
            h.bin_lo.push(lo);
            h.bin_hi.push(hi);
            h.x.push((lo * hi).sqrt());
            h.counts.push(counts[i]);
            h.probabilities.push(p);
            h.densities.push(p / (hi - lo));
        }
        Ok(h)
    }

    /// `n_bins` equal-width bins covering `[lo, hi]`; the top edge closes
    /// the last bin, durations outside the window are dropped from the
    /// counts but still normalize the probabilities.
    pub fn equal_width(
        kind: SampleKind,
        durations: &[u64],
        lo: f64,
        hi: f64,
        n_bins: usize,
    ) -> Result<Histogram, StatsError> {
        if !(lo < hi) || lo < 0.0 {
            return Err(StatsError::BadRange { lo, hi });
        }
        if n_bins < 2 {
            return Err(StatsError::Degenerate("need at least two bins"));
        }
        let mut counts = vec![0u64; n_bins];
        let mut total = 0u64;
        let width = (hi - lo) / n_bins as f64;
        for &d in durations.iter().filter(|&&d| d >= 1) {
            total += 1;
            let v = d as f64;
            if (lo..=hi).contains(&v) {
                let idx = ((v - lo) / width) as usize;
                counts[idx.min(n_bins - 1)] += 1;
            }
        }
        if total == 0 {
            return Err(StatsError::EmptyInput);
        }
        let mut h = Histogram {
            kind,
            bin_lo: Vec::with_capacity(n_bins),
            bin_hi: Vec::with_capacity(n_bins),
            x: Vec::with_capacity(n_bins),
            counts: Vec::with_capacity(n_bins),
            probabilities: Vec::with_capacity(n_bins),
            densities: Vec::with_capacity(n_bins),
        };
        for (i, &c) in counts.iter().enumerate() {
            let p = c as f64 / total as f64;
            h.bin_lo.push(lo + i as f64 * width);
            h.bin_hi.push(lo + (i + 1) as f64 * width);
            h.x.push(lo + (i as f64 + 0.5) * width);
            h.counts.push(c);
            h.probabilities.push(p);
            h.densities.push(p / width);
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Exponential,
    PowerLaw,
    TailExponential,
}

impl FitModel {
    pub fn as_str(self) -> &'static str {
        match self {
            FitModel::Exponential => "exponential",
            FitModel::PowerLaw => "power_law",
            FitModel::TailExponential => "tail_exponential",
        }
    }
}

/// A fitted decay law. For exponential models the density is modeled as
/// `exp(a + alpha * x)`, so `a` is the log-space intercept; for power laws
/// it is `a * x^alpha` with `a` already exponentiated.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub kind: SampleKind,
    pub alpha: f64,
    pub a: f64,
    pub r_squared: f64,
    /// Two-sided p-value of the slope under the no-trend null.
    pub p_slope: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_points: usize,
}

struct Ols {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    p_slope: f64,
    n: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<Ols, StatsError> {
    let n = xs.len();
    debug_assert_eq!(n, ys.len());
    if n < 3 {
        return Err(StatsError::InsufficientPoints { got: n });
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::Degenerate("all fit abscissas are equal"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    let dof = nf - 2.0;
    let p_slope = if ss_res == 0.0 {
        0.0
    } else {
        let se = (ss_res / dof / sxx).sqrt();
        let t = (slope / se).abs();
        let dist = StudentsT::new(0.0, 1.0, dof).expect("dof >= 1");
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok(Ols {
        slope,
        intercept,
        r_squared,
        p_slope,
        n,
    })
}

/// Bins eligible for fitting: positive probability, representative x inside
/// the range (inclusive on both ends).
fn fit_points(h: &Histogram, x_lo: f64, x_hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..h.len() {
        if h.probabilities[i] > 0.0 && h.x[i] >= x_lo && h.x[i] <= x_hi {
            xs.push(h.x[i]);
            ys.push(h.densities[i].ln());
        }
    }
    (xs, ys)
}

/// Fit `density = exp(a + alpha x)` over bins whose x lies in
/// `[x_lo, x_hi]`.
pub fn fit_exponential(h: &Histogram, x_lo: f64, x_hi: f64) -> Result<FitResult, StatsError> {
    if !(x_lo <= x_hi) {
        return Err(StatsError::BadRange { lo: x_lo, hi: x_hi });
    }
    let (xs, ys) = fit_points(h, x_lo, x_hi);
    let fit = ols(&xs, &ys)?;
    Ok(FitResult {
        model: FitModel::Exponential,
        kind: h.kind,
        alpha: fit.slope,
        a: fit.intercept,
        r_squared: fit.r_squared,
        p_slope: fit.p_slope,
        x_lo,
        x_hi,
        n_points: fit.n,
    })
}

/// Fit `density = a * x^alpha` over bins whose x lies in `[x_lo, x_hi]`.
pub fn fit_power_law(h: &Histogram, x_lo: f64, x_hi: f64) -> Result<FitResult, StatsError> {
    if !(x_lo <= x_hi) || x_lo <= 0.0 {
        return Err(StatsError::BadRange { lo: x_lo, hi: x_hi });
    }
    let (xs, ys) = fit_points(h, x_lo, x_hi);
    let log_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let fit = ols(&log_xs, &ys)?;
    Ok(FitResult {
        model: FitModel::PowerLaw,
        kind: h.kind,
        alpha: fit.slope,
        a: fit.intercept.exp(),
        r_squared: fit.r_squared,
        p_slope: fit.p_slope,
        x_lo,
        x_hi,
        n_points: fit.n,
    })
}

/// Exponential fit over the tail `(crossover, x_hi]` — strictly beyond the
/// crossover, inclusive at the top.
pub fn fit_tail_exponential(
    h: &Histogram,
    crossover: f64,
    x_hi: f64,
) -> Result<FitResult, StatsError> {
    if !(crossover < x_hi) {
        return Err(StatsError::BadRange {
            lo: crossover,
            hi: x_hi,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..h.len() {
            if h.probabilities[i] > 0.0 && h.x[i] > crossover && h.x[i] <= x_hi {
                xs.push(h.x[i]);
                ys.push(h.densities[i].ln());
            }
        }
        (xs, ys)
    };
    let fit = ols(&xs, &ys)?;
    Ok(FitResult {
        model: FitModel::TailExponential,
        kind: h.kind,
        alpha: fit.slope,
        a: fit.intercept,
        r_squared: fit.r_squared,
        p_slope: fit.p_slope,
        x_lo: crossover,
        x_hi,
        n_points: fit.n,
    })
}

/// Five-number summary plus mean.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SummaryStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile on a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Degenerate("non-finite observation"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SummaryStats {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}

/// Goodness-of-fit of `values` against the uniform distribution on
/// `[lo, hi]`, using `bins` equal-width cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// Equal-width bin counts over `[lo, hi]`; the top edge closes the last bin.
pub fn equal_width_counts(
    values: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Vec<u64>, StatsError> {
    if !(lo < hi) {
        return Err(StatsError::BadRange { lo, hi });
    }
    if bins < 1 {
        return Err(StatsError::Degenerate("need at least one bin"));
    }
    let mut counts = vec![0u64; bins];
    for &v in values {
        if !(lo..=hi).contains(&v) {
            return Err(StatsError::BadRange { lo, hi });
        }
        let idx = (((v - lo) / (hi - lo)) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(counts)
}

pub fn chi_square_uniform(
    values: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<ChiSquare, StatsError> {
    if bins < 2 {
        return Err(StatsError::Degenerate("need at least two bins"));
    }
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let counts = equal_width_counts(values, lo, hi, bins)?;
    let expected = values.len() as f64 / bins as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    Ok(ChiSquare {
        statistic,
        p_value: 1.0 - dist.cdf(statistic),
        dof,
    })
}

/// Median of the positive durations.
pub fn median_duration(durations: &[u64]) -> Option<f64> {
    let mut kept: Vec<f64> = durations
        .iter()
        .copied()
        .filter(|&d| d >= 1)
        .map(|d| d as f64)
        .collect();
    if kept.is_empty() {
        return None;
    }
    kept.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Some(quantile(&kept, 0.5))
}

/// Windows for the standard per-run fits, anchored to the tick length of
/// one simulated day.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitParams {
    /// Ticks in one simulated day of the run being analyzed.
    pub ticks_per_day: u64,
    /// Overrides the per-side tail crossover (default: 10x the side's
    /// median duration). The tail window upper end scales with it.
    pub tail_crossover: Option<f64>,
}

impl FitParams {
    pub fn new(ticks_per_day: u64) -> FitParams {
        FitParams {
            ticks_per_day: ticks_per_day.max(1),
            tail_crossover: None,
        }
    }

    pub fn with_tail_crossover(mut self, crossover: Option<f64>) -> FitParams {
        self.tail_crossover = crossover;
        self
    }
}

/// The standard set of fits for one run's continuous-phase waiting times:
/// exponential decay of the absolute series on equal-width bins over the
/// decade ending at one day, power laws of the bid and ask series on log
/// bins over the first five days, and exponential tails of the bid and ask
/// series on unit bins over `(crossover, 30 * crossover]`. Slots are None
/// when the series is too thin to fit.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RunFits {
    pub absolute_exponential: Option<FitResult>,
    pub bid_power: Option<FitResult>,
    pub ask_power: Option<FitResult>,
    pub bid_tail: Option<FitResult>,
    pub ask_tail: Option<FitResult>,
}

impl RunFits {
    pub fn all(&self) -> [Option<FitResult>; 5] {
        [
            self.absolute_exponential,
            self.bid_power,
            self.ask_power,
            self.bid_tail,
            self.ask_tail,
        ]
    }
}

/// Positive continuous-phase durations of one kind.
pub fn continuous_durations(samples: &[PendingSample], kind: SampleKind) -> Vec<u64> {
    samples
        .iter()
        .filter(|s| s.phase == Phase::Continuous && s.kind == kind && s.duration >= 1)
        .map(|s| s.duration)
        .collect()
}

pub fn fit_run(samples: &[PendingSample], params: &FitParams) -> RunFits {
    let mut fits = RunFits::default();
    let day = params.ticks_per_day as f64;

    let abs = continuous_durations(samples, SampleKind::Absolute);
    let abs_lo = day / ABS_FIT_SPAN_DECADE;
    fits.absolute_exponential =
        Histogram::equal_width(SampleKind::Absolute, &abs, abs_lo, day, ABS_FIT_BINS)
            .ok()
            .and_then(|h| fit_exponential(&h, abs_lo, day).ok());

    let power_hi = (POWER_FIT_DAYS * params.ticks_per_day) as f64;
    for kind in [SampleKind::Bid, SampleKind::Ask] {
        let durs = continuous_durations(samples, kind);
        if durs.is_empty() {
            continue;
        }
        let power = Histogram::log_binned(kind, &durs, LOG_BIN_RATIO)
            .ok()
            .and_then(|h| fit_power_law(&h, 1.0, power_hi).ok());
        let crossover = params
            .tail_crossover
            .or_else(|| median_duration(&durs).map(|m| m * TAIL_CROSSOVER_MEDIANS));
        let tail = Histogram::unit(kind, &durs)
            .ok()
            .zip(crossover)
            .and_then(|(h, c)| fit_tail_exponential(&h, c, TAIL_SPAN_FACTOR * c).ok());
        match kind {
            SampleKind::Bid => {
                fits.bid_power = power;
                fits.bid_tail = tail;
            }
            SampleKind::Ask => {
                fits.ask_power = power;
                fits.ask_tail = tail;
            }
            SampleKind::Absolute => unreachable!(),
        }
    }
    fits
}
