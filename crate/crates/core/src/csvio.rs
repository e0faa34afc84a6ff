//! CSV artifacts.
//!
//! Every writer goes through a write-then-rename so a crash can never leave
//! a truncated file under the final name, and all numeric formatting is
//! integer-based so reruns produce identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::book::Trade;
use crate::price::{Price, TickSize};
use crate::sim::{PendingSample, RunResult};
use crate::stats::RunFits;

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header `kind,duration,execution_tick,phase`, got `{got}`")]
    BadHeader { got: String },
}

const PENDING_HEADER: [&str; 4] = ["kind", "duration", "execution_tick", "phase"];

/// Write `content` producers to `path` atomically: the data lands in a
/// sibling temporary file which is renamed over the target only after a
/// successful flush.
pub fn atomic_write<F>(path: &Path, write: F) -> Result<(), CsvError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CsvError>,
{
    let tmp = tmp_path(path);
    let result = (|| {
        let mut file = io::BufWriter::new(fs::File::create(&tmp)?);
        write(&mut file)?;
        file.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// `trades_<label>_<seed>.csv`: one row per execution.
pub fn write_trades_csv(path: &Path, trades: &[Trade], tick_size: TickSize) -> Result<(), CsvError> {
    atomic_write(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["tick", "maker_side", "price", "quantity", "maker_id", "taker_id"])?;
        for t in trades {
            wtr.write_record([
                t.tick.to_string(),
                t.maker_side.as_str().to_string(),
                tick_size.format(t.price),
                t.quantity.to_string(),
                t.maker_id.to_string(),
                t.taker_id.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// `pending_<label>_<seed>.csv`: one row per waiting-time observation.
pub fn write_pending_csv(path: &Path, samples: &[PendingSample]) -> Result<(), CsvError> {
    atomic_write(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        for s in samples {
            wtr.serialize(s)?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Read a pending-samples file back. Accepts exactly the layout
/// `write_pending_csv` produces: a header row, then
/// `kind,duration,execution_tick,phase`.
pub fn read_pending_csv(path: &Path) -> Result<Vec<PendingSample>, CsvError> {
    parse_pending_csv(fs::File::open(path)?)
}

/// Parser behind `read_pending_csv`, usable on any byte stream. Malformed
/// input yields an error, never a panic.
pub fn parse_pending_csv<R: io::Read>(reader: R) -> Result<Vec<PendingSample>, CsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?;
    if headers != &csv::StringRecord::from(PENDING_HEADER.to_vec()) {
        return Err(CsvError::BadHeader {
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<PendingSample>() {
        out.push(row?);
    }
    Ok(out)
}

/// `summary_<label>_<seed>.csv`: one row per day.
pub fn write_summary_csv(
    path: &Path,
    closes: &[Price],
    trade_counts: &[u64],
    tick_size: TickSize,
) -> Result<(), CsvError> {
    debug_assert_eq!(closes.len(), trade_counts.len());
    atomic_write(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["day", "closing_price", "trades"])?;
        for (day, (close, trades)) in closes.iter().zip(trade_counts).enumerate() {
            wtr.write_record([
                (day + 1).to_string(),
                tick_size.format(*close),
                trades.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// `fits_<label>_<seed>.csv`: one row per successful fit.
pub fn write_fits_csv(path: &Path, fits: &RunFits) -> Result<(), CsvError> {
    atomic_write(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "model", "kind", "alpha", "a", "r_squared", "p_slope", "x_lo", "x_hi", "n_points",
        ])?;
        for fit in fits.all().into_iter().flatten() {
            wtr.write_record([
                fit.model.as_str().to_string(),
                fit.kind.as_str().to_string(),
                format_float(fit.alpha),
                format_float(fit.a),
                format_float(fit.r_squared),
                format_float(fit.p_slope),
                format_float(fit.x_lo),
                format_float(fit.x_hi),
                fit.n_points.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Shortest representation that round-trips; deterministic across platforms
/// for equal bit patterns.
fn format_float(v: f64) -> String {
    format!("{v}")
}

/// File stem pieces shared by all per-run artifacts.
pub fn run_file_name(prefix: &str, result: &RunResult) -> String {
    format!(
        "{prefix}_{}_{}.csv",
        result.scenario.file_label(),
        result.seed
    )
}

/// Write the per-run artifact set into `dir`: trades, pending samples and
/// the daily summary, plus fits when provided. Returns the paths written.
pub fn write_run_artifacts(
    dir: &Path,
    result: &RunResult,
    fits: Option<&RunFits>,
    tick_size: TickSize,
) -> Result<Vec<PathBuf>, CsvError> {
    let mut written = Vec::new();
    let trades = dir.join(run_file_name("trades", result));
    write_trades_csv(&trades, &result.trades, tick_size)?;
    written.push(trades);
    let pending = dir.join(run_file_name("pending", result));
    write_pending_csv(&pending, &result.pending_samples)?;
    written.push(pending);
    let summary = dir.join(run_file_name("summary", result));
    write_summary_csv(
        &summary,
        &result.daily_closing_prices,
        &result.daily_trade_counts,
        tick_size,
    )?;
    written.push(summary);
    if let Some(fits) = fits {
        let path = dir.join(run_file_name("fits", result));
        write_fits_csv(&path, fits)?;
        written.push(path);
    }
    Ok(written)
}
