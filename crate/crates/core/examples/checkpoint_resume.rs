//! Stops an OCB learner mid-stream, writes its state to disk, restores it and
//! checks the resumed trajectory against an uninterrupted run.
//!
//! cargo run --example checkpoint_resume

use std::fs::File;
use std::io::{BufReader, BufWriter};

use ocboost::synthetic::random_margins;
use ocboost::{OcbConfig, OcbState};

fn main() -> ocboost::Result<()> {
    let m = random_margins(600, 8, 0.6, 7)?;
    let cfg = OcbConfig::new(4);

    let mut straight = OcbState::init_cold(8, cfg)?;
    let full = straight.run_stream(&m)?;

    let mut first = OcbState::init_cold(8, cfg)?;
    let mut traj = first.run_stream(&m.slice_rows(0, 250)?)?;
    let path = std::env::temp_dir().join("ocboost-example.state");
    first.write_checkpoint(BufWriter::new(
        File::create(&path).map_err(|e| ocboost::Error::io(&path, e))?,
    ))?;

    let file = File::open(&path).map_err(|e| ocboost::Error::io(&path, e))?;
    let mut resumed = OcbState::read_checkpoint(BufReader::new(file))?;
    traj.extend(resumed.run_stream(&m.slice_rows(250, 600)?)?)?;

    println!("checkpoint written to {}", path.display());
    println!("resumed trajectory identical: {}", traj == full);
    println!("final alphas: {:?}", resumed.alphas());
    Ok(())
}
