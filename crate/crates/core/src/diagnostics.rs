//! Moment tracking, theoretical rate predictors, blow-up conditions, and
//! time-series output.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use crate::error::{SimError, SimResult};
use crate::model::{system_second_moment, SystemState, SPECIES_MERGED};

/// One sampled row of the moment time series.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord {
    pub time: f64,
    /// Normalized global second moment about the center of mass.
    pub y_norm: f64,
    /// Unnormalized second moments about the origin, one per species.
    /// Mass in cross-species merged particles counts toward the total but
    /// no single species.
    pub f_species: Vec<f64>,
    /// Total unnormalized second moment about the origin.
    pub f_total: f64,
    pub n_particles: usize,
    /// Masses of merged-provenance particles at or above the critical
    /// mass; lighter merged particles count as regular.
    pub atom_masses: Vec<f64>,
}

impl MomentRecord {
    pub fn n_atoms(&self) -> usize {
        self.atom_masses.len()
    }

    pub fn atom_mass_total(&self) -> f64 {
        self.atom_masses.iter().sum()
    }
}

/// Predicted second-moment rate of the regularized system with the given
/// atoms frozen out: `4 mu Mbar / M - (chi M / 2 pi)(1 - sum (M_i/M)^2)`
/// where `Mbar` is the non-atomic mass.
pub fn predicted_slope_regularized(
    total_mass: f64,
    mu: f64,
    chi: f64,
    atom_masses: &[f64],
) -> SimResult<f64> {
    let atoms: f64 = atom_masses.iter().sum();
    if atoms > total_mass * (1.0 + 1e-12) {
        return Err(SimError::domain(format!(
            "atom mass {atoms} exceeds total mass {total_mass}"
        )));
    }
    let regular = (total_mass - atoms).max(0.0);
    let s: f64 = atom_masses
        .iter()
        .map(|m| (m / total_mass) * (m / total_mass))
        .sum();
    Ok(4.0 * mu * regular / total_mass - chi * total_mass / (2.0 * PI) * (1.0 - s))
}

/// Second-moment rate of the multispecies system:
/// `sum_i (4 mu_i - chi M / 2 pi) M_i` with `M = sum M_i`.
pub fn mpks_moment_rate(chi: f64, species: &[(f64, f64)]) -> f64 {
    let total: f64 = species.iter().map(|&(_, m)| m).sum();
    species
        .iter()
        .map(|&(mu, m)| (4.0 * mu - chi * total / (2.0 * PI)) * m)
        .sum()
}

/// Whether the multispecies second moment contracts (singularity forms).
pub fn mpks_blowup_condition(chi: f64, species: &[(f64, f64)]) -> bool {
    mpks_moment_rate(chi, species) < 0.0
}

/// Largest two-species masses for which a contracting second moment can
/// be arranged; requires `mu1 > 2 mu2`.
pub fn mpks_m_max(chi: f64, mu1: f64, mu2: f64) -> SimResult<(f64, f64)> {
    if !(mu1 > 2.0 * mu2) {
        return Err(SimError::domain(format!(
            "mpks_m_max requires mu1 > 2 mu2, got mu1 = {mu1}, mu2 = {mu2}"
        )));
    }
    let scale = 2.0 * PI / chi;
    let m1 = scale * (mu1 - 2.0 * mu2) * mu1 / (mu1 - mu2);
    let m2 = scale * mu1 * mu1 / (mu1 - mu2);
    Ok((m1, m2))
}

/// Sample the moment diagnostics of a state.
///
/// `n_species` fixes the per-species column count; `merged_ids` is the
/// set of ids with merge provenance, and those of them at or above
/// `atom_threshold` (the critical mass `8 pi mu / chi`) are reported as
/// atoms.
pub fn record(
    state: &SystemState,
    n_species: usize,
    merged_ids: &HashSet<u64>,
    atom_threshold: f64,
) -> SimResult<MomentRecord> {
    let y_norm = system_second_moment(&state.particles)?;
    let mut f_species = vec![0.0; n_species];
    let mut f_total = 0.0;
    let mut atom_masses = Vec::new();
    for p in &state.particles {
        let f = p.mass * p.position.norm_sq();
        f_total += f;
        if p.species != SPECIES_MERGED {
            let s = p.species as usize;
            if s < n_species {
                f_species[s] += f;
            }
        }
        if merged_ids.contains(&p.id) && p.mass >= atom_threshold {
            atom_masses.push(p.mass);
        }
    }
    atom_masses.sort_by(|a, b| a.total_cmp(b));
    Ok(MomentRecord {
        time: state.time,
        y_norm,
        f_species,
        f_total,
        n_particles: state.particles.len(),
        atom_masses,
    })
}

/// Write the time series as CSV with columns
/// `t,Y_norm,F_total,F_species_1..K,n_particles,n_atoms,atom_mass_total`.
pub fn write_series(path: &Path, records: &[MomentRecord]) -> SimResult<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| SimError::io(path.display().to_string(), e);
    let k = records.first().map_or(0, |r| r.f_species.len());
    let mut header = String::from("t,Y_norm,F_total");
    for i in 1..=k {
        header.push_str(&format!(",F_species_{i}"));
    }
    header.push_str(",n_particles,n_atoms,atom_mass_total");
    writeln!(out, "{header}").map_err(io_err)?;
    for r in records {
        let mut row = format!("{:.10e},{:.10e},{:.10e}", r.time, r.y_norm, r.f_total);
        for f in &r.f_species {
            row.push_str(&format!(",{f:.10e}"));
        }
        row.push_str(&format!(
            ",{},{},{:.10e}",
            r.n_particles,
            r.n_atoms(),
            r.atom_mass_total()
        ));
        writeln!(out, "{row}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Parse a CSV produced by [`write_series`]. Atom masses are not
/// recoverable individually; the parsed record holds a single synthetic
/// atom of the recorded total when the count is nonzero.
pub fn read_series(path: &Path) -> SimResult<Vec<MomentRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SimError::config(format!("{}: empty series", path.display())))?;
    let k = header.split(',').filter(|c| c.starts_with("F_species_")).count();
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 + k {
            return Err(SimError::config(format!(
                "{}: line {}: expected {} fields, got {}",
                path.display(),
                lineno + 2,
                6 + k,
                fields.len()
            )));
        }
        let num = |s: &str| -> SimResult<f64> {
            s.parse().map_err(|_| {
                SimError::config(format!(
                    "{}: line {}: bad number {s:?}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        let n_atoms: usize = fields[4 + k].parse().map_err(|_| {
            SimError::config(format!("{}: line {}: bad count", path.display(), lineno + 2))
        })?;
        let atom_total = num(fields[5 + k])?;
        records.push(MomentRecord {
            time: num(fields[0])?,
            y_norm: num(fields[1])?,
            f_total: num(fields[2])?,
            f_species: fields[3..3 + k]
                .iter()
                .map(|s| num(s))
                .collect::<SimResult<Vec<f64>>>()?,
            n_particles: fields[3 + k].parse().map_err(|_| {
                SimError::config(format!(
                    "{}: line {}: bad count",
                    path.display(),
                    lineno + 2
                ))
            })?,
            atom_masses: if n_atoms > 0 { vec![atom_total] } else { Vec::new() },
        });
    }
    Ok(records)
}

/// Ordinary least-squares line fit: `(slope, intercept, r_squared)`.
pub fn fit_line(ts: &[f64], ys: &[f64]) -> SimResult<(f64, f64, f64)> {
    if ts.len() != ys.len() || ts.len() < 2 {
        return Err(SimError::domain(format!(
            "fit_line needs two equal-length samples, got {} and {}",
            ts.len(),
            ys.len()
        )));
    }
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if stt == 0.0 {
        return Err(SimError::domain("fit_line: all abscissae equal"));
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok((slope, intercept, r2))
}
