//! Measures the shear-sweep and rigidity floors and writes them to the
//! fixtures file (or the path given as the first argument).

use std::collections::BTreeMap;
use std::time::Instant;

use neutral_lame::lab::{
    epsilon_key, fixtures_path, rigidity_experiment, shear_infeasibility_sweep, FrozenFloors,
    RigidityConfig, SweepGrid,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(fixtures_path);

    let t = Instant::now();
    let sweep = shear_infeasibility_sweep(&SweepGrid::default_shear())?;
    eprintln!(
        "shear sweep: min max(|c1|,|c3|) = {:e} at {:?}; root curve min |c3| = {:e} over {} slices ({:.1?})",
        sweep.min_max,
        sweep.argmin,
        sweep.root_curve_min_c3,
        sweep.root_curve.len(),
        t.elapsed()
    );

    let t = Instant::now();
    let config = RigidityConfig::default();
    let report = rigidity_experiment(&config)?;
    eprintln!(
        "rigidity: neutral {} gap {:e} ({:.1?})",
        report.neutral_value,
        report.neutral_gap,
        t.elapsed()
    );
    let mut rigidity: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for e in &report.entries {
        eprintln!(
            "  {} eps={} value={} floor={:e}",
            e.family, e.epsilon, e.value, e.floor
        );
        if e.epsilon > 0.0 {
            rigidity
                .entry(e.family.clone())
                .or_default()
                .insert(epsilon_key(e.epsilon), e.floor);
        }
    }

    let floors = FrozenFloors {
        provenance: format!(
            "freeze_floors example: default 20x20x20 shear grid (series order 8); rigidity with {} nodes, \
             free parameter {}, search factors {:?}",
            config.nodes,
            config.parameter.name(),
            config.search
        ),
        shear_min_max: sweep.min_max,
        rigidity,
    };
    std::fs::write(&path, serde_json::to_string_pretty(&floors)? + "\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
