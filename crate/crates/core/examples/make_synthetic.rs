//! Writes a small synthetic system and a matching config.
//!
//! `cargo run -p loewner-greedy --example make_synthetic -- demo`
//! produces `demo/sys.{E,A,B,C}.mtx` and `demo/run.conf`.

use std::path::PathBuf;

use loewner_greedy::{c64, DescriptorSystem};

fn main() -> loewner_greedy::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir)?;
    let poles: Vec<c64> = (0..16)
        .map(|k| {
            let w = 1.2 * 1.3f64.powi(k);
            c64::new(-0.04 * w, w)
        })
        .collect();
    let sys = DescriptorSystem::make_synthetic(&poles, 5, 2, 2)?;
    sys.write_prefix(&dir.join("sys"))?;
    std::fs::write(
        dir.join("run.conf"),
        "# sixteen damped poles in [1, 100]\n\
         system = sys\n\
         f_min = 1\n\
         f_max = 100\n\
         grid_size = 4000\n\
         tol = 1e-4\n\
         termination = lookahead_memory\n\
         memory = 2\n\
         output = out\n",
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}
