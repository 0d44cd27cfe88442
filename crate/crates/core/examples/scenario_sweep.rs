//! Run a scenario file's sweep and write the rows as CSV, the same way
//! `wpbc sweep` does.
//!
//!     cargo run --release --example scenario_sweep -- scenarios/price_sweep.toml out.csv

use std::path::PathBuf;

use wpbc_trade::experiments::{run_sweep, write_csv, write_results, OutputFormat};
use wpbc_trade::scenario::{load_scenario, Method};

fn main() -> wpbc_trade::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/price_sweep.toml")
    });
    let mut sc = load_scenario(&path)?;
    sc.methods = vec![Method::Pa, Method::Ja, Method::Bbcm, Method::Tdma];
    let rows = run_sweep(&sc, false)?;
    match args.next() {
        Some(out) => {
            write_results(&rows, out.as_ref(), OutputFormat::Csv)?;
            println!("{} rows written to {out}", rows.len());
        }
        None => write_csv(&rows, std::io::stdout())?,
    }
    Ok(())
}
