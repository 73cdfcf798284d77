//! `squeezekit` command-line interface.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::IfoConfig;
use crate::coupled_equivalence::{
    coupled_cavity_transfer_exact, equivalence_report, filter_as_cavity, format_report, src_arm_feasibility,
    src_arm_spec, transfer_rotation, two_cavity_transfer_exact,
};
use crate::epr_scheme::{sensitivity_curve, solve_epr_params, SchemeKind, DEFAULT_MAX_LSRC};
use crate::error::{Error, Result};
use crate::filter_synthesis::{format_solution, synthesize_filters};
use crate::ifo_model::IfoModel;
use crate::two_photon_core::db_to_r;

use super::table::{comparison_table, equivalence_table, horizon_table, noise_table, Table};
use super::{
    build_scheme, compare_schemes, design_filters, format_comparison, horizon_reach, mass_grid, peak_improvement,
};
use super::{HorizonCurve, HorizonSettings};

#[derive(Debug, Parser)]
#[command(
    name = "squeezekit",
    version,
    about = "Quantum noise, filter cavities and EPR squeezing for a detuned interferometer"
)]
pub struct Cli {
    /// Interferometer configuration (key=value); defaults to ET-LF.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file for the numeric table.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Lowest analysis frequency [Hz].
    #[arg(long, global = true, default_value_t = 1.0)]
    pub fmin: f64,
    /// Highest analysis frequency [Hz].
    #[arg(long, global = true, default_value_t = 100.0)]
    pub fmax: f64,
    /// Number of log-spaced frequencies.
    #[arg(long, global = true, default_value_t = 200)]
    pub points: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    TwoFilter,
    Epr,
    Unsqueezed,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::TwoFilter => SchemeKind::TwoFilter,
            SchemeArg::Epr => SchemeKind::Epr,
            SchemeArg::Unsqueezed => SchemeKind::Unsqueezed,
        }
    }
}

/// Injected squeezing level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DbArg {
    #[value(name = "10")]
    Ten,
    #[value(name = "15")]
    Fifteen,
}

impl DbArg {
    pub fn db(self) -> f64 {
        match self {
            DbArg::Ten => 10.0,
            DbArg::Fifteen => 15.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    SingleMode,
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the rotation polynomial and extract filter cavities.
    SynthesizeFilters {
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, value_enum, default_value = "single-mode")]
        model: ModelArg,
    },
    /// Map the two filter cavities onto one coupled cavity.
    Equivalence,
    /// Test whether the SRC-arm cavity can act as the coupled cavity.
    SrcArmFeasibility,
    /// Solve the EPR offset and cavity lengths.
    EprSolve {
        #[arg(long, default_value_t = DEFAULT_MAX_LSRC)]
        max_lsrc: f64,
    },
    /// Strain sensitivity with per-loss contributions.
    Sensitivity {
        #[arg(long, value_enum, default_value = "epr")]
        scheme: SchemeArg,
        #[arg(long, value_enum)]
        db: Option<DbArg>,
        #[arg(long, default_value_t = DEFAULT_MAX_LSRC)]
        max_lsrc: f64,
    },
    /// Noise budget including the squeezed-input term.
    Budget {
        #[arg(long, value_enum, default_value = "epr")]
        scheme: SchemeArg,
        #[arg(long, value_enum)]
        db: Option<DbArg>,
        #[arg(long, default_value_t = DEFAULT_MAX_LSRC)]
        max_lsrc: f64,
    },
    /// Inspiral horizon of each scheme versus total mass.
    Horizon {
        #[arg(long, value_enum)]
        db: Option<DbArg>,
        /// Squeezing level of the EPR scheme, overriding --db.
        #[arg(long, value_enum)]
        epr_db: Option<DbArg>,
        #[arg(long, default_value_t = 1.0)]
        mass_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        mass_max: f64,
        #[arg(long, default_value_t = 61)]
        mass_points: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_LSRC)]
        max_lsrc: f64,
    },
    /// Side-by-side sensitivities and dominance bands.
    Compare {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "two-filter,epr,unsqueezed")]
        schemes: Vec<SchemeArg>,
        #[arg(long, value_enum)]
        db: Option<DbArg>,
    },
}

/// Text for stdout; tables go to `--out` when given, else to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(p) => IfoConfig::load(p)?,
        None => IfoConfig::et_lf(),
    };
    let grid = analysis_grid(cli)?;
    let with_db = |db: Option<DbArg>| {
        let mut c = cfg.clone();
        if let Some(d) = db {
            c.r = db_to_r(d.db());
        }
        c
    };
    let data_first = matches!(
        cli.command,
        Command::Sensitivity { .. } | Command::Budget { .. } | Command::Horizon { .. } | Command::Compare { .. }
    );
    let (summary, table) = match &cli.command {
        Command::SynthesizeFilters { degree, model } => {
            let model = match model {
                ModelArg::SingleMode => IfoModel::SingleMode,
                ModelArg::Exact => IfoModel::Exact,
            };
            let (poly, sol) = synthesize_filters(&cfg, &grid, *degree, model)?;
            let mut t = Table::new(&["cavity", "gamma_hz", "detuning_hz", "length_m", "transmissivity"]);
            t.comments.push(format!(
                "injection angle [rad] {:.16e}; rotation fit residual {:.3e}",
                sol.injection_angle, poly.residual
            ));
            for (j, c) in sol.cavities.iter().enumerate() {
                t.rows.push(vec![
                    (j + 1) as f64,
                    c.gamma / (2.0 * PI),
                    c.detuning / (2.0 * PI),
                    c.length,
                    c.transmissivity(),
                ]);
            }
            (format!("{}rotation fit residual: {:.3e}\n", format_solution(&sol), poly.residual), Some(t))
        }
        Command::Equivalence => {
            let target = design_filters(&cfg, 2)?;
            let rep = equivalence_report(&target, &grid)?;
            let (c1, c2) = (filter_as_cavity(&target.cavities[0]), filter_as_cavity(&target.cavities[1]));
            let a = transfer_rotation(|w| two_cavity_transfer_exact(&c1, &c2, w), &grid);
            let b = transfer_rotation(|w| coupled_cavity_transfer_exact(&rep.analytic, w), &grid);
            (format_report(&rep), Some(equivalence_table(&hz(&grid), &a, &b)))
        }
        Command::SrcArmFeasibility => {
            let target = design_filters(&cfg, 2)?;
            let rep = src_arm_feasibility(&cfg, &target, &grid)?;
            let (c1, c2) = (filter_as_cavity(&target.cavities[0]), filter_as_cavity(&target.cavities[1]));
            let sa = src_arm_spec(&cfg, &rep.analytic);
            let a = transfer_rotation(|w| two_cavity_transfer_exact(&c1, &c2, w), &grid);
            let b = transfer_rotation(|w| coupled_cavity_transfer_exact(&sa, w), &grid);
            (format_report(&rep), Some(equivalence_table(&hz(&grid), &a, &b)))
        }
        Command::EprSolve { max_lsrc } => {
            let target = design_filters(&cfg, 2)?;
            let sols = solve_epr_params(&cfg, &target, *max_lsrc)?;
            let cols = [
                "delta_hz",
                "half_fsr",
                "anti_resonant",
                "n2",
                "l_src_m",
                "l_arm_m",
                "filter_detuning_hz",
                "gamma2_hz",
                "filter_residual_rad",
                "arm_residual_rad",
            ];
            let mut t = Table::new(&cols);
            let mut s = String::from(
                "delta/2pi[Hz]      m    parity  L_SRC[m]    L_arm[m]      filter det.[Hz]  gamma2[Hz]  filt.res[rad] arm res[rad]\n",
            );
            for p in &sols {
                let parity = if p.is_anti_resonant() { "odd" } else { "even" };
                s += &format!(
                    "{:<18.3} {:<4} {:<7} {:<11.4} {:<13.4} {:<16.4} {:<11.4} {:<13.2e} {:.2e}\n",
                    p.delta / (2.0 * PI),
                    p.half_fsr,
                    parity,
                    p.l_src,
                    p.l_arm,
                    p.filter.detuning / (2.0 * PI),
                    p.gamma2 / (2.0 * PI),
                    p.filter_residual,
                    p.arm_residual
                );
                t.rows.push(vec![
                    p.delta / (2.0 * PI),
                    p.half_fsr as f64,
                    if p.is_anti_resonant() { 1.0 } else { 0.0 },
                    p.n2 as f64,
                    p.l_src,
                    p.l_arm,
                    p.filter.detuning / (2.0 * PI),
                    p.gamma2 / (2.0 * PI),
                    p.filter_residual,
                    p.arm_residual,
                ]);
            }
            s += &format!("{} solutions with L_SRC <= {max_lsrc} m\n", sols.len());
            (s, Some(t))
        }
        Command::Sensitivity { scheme, db, max_lsrc } | Command::Budget { scheme, db, max_lsrc } => {
            let budget = matches!(cli.command, Command::Budget { .. });
            let (c, s) = build_scheme(&with_db(*db), (*scheme).into(), *max_lsrc)?;
            let curve = sensitivity_curve(&c, &s, &grid)?;
            (String::new(), Some(noise_table(&curve, budget)))
        }
        Command::Horizon { db, epr_db, mass_min, mass_max, mass_points, max_lsrc } => {
            if !(*mass_min > 0.0 && mass_max > mass_min && *mass_points >= 2) {
                return Err(Error::Config("mass grid needs 0 < mass-min < mass-max and at least 2 points".into()));
            }
            let settings = HorizonSettings { fmin: cli.fmin, fmax: cli.fmax, ..Default::default() };
            let masses = mass_grid(*mass_min, *mass_max, *mass_points);
            let mut horizons = Vec::new();
            for kind in [SchemeKind::TwoFilter, SchemeKind::Epr, SchemeKind::Unsqueezed] {
                let level = if kind == SchemeKind::Epr { epr_db.or(*db) } else { *db };
                let base = with_db(level);
                let (c, s) = build_scheme(&base, kind, *max_lsrc)?;
                let curve = sensitivity_curve(&c, &s, &grid)?;
                let label = match kind {
                    SchemeKind::Unsqueezed => kind.name().to_string(),
                    _ => format!("{}_{:.1}db", kind.name(), 10.0 * (2.0 * base.r).exp().log10()),
                };
                horizons.push(horizon_reach(&curve, &masses, &settings, &label)?);
            }
            let mut s = format!("# {}\n", settings.describe());
            if let Some((m, g)) = peak_improvement(&masses, &horizons[1], &horizons[0], 15.0, 60.0) {
                s += &format!(
                    "peak horizon gain of {} over {} in 15-60 M_sun: {:.2}% at {:.2} M_sun\n",
                    horizons[1].label,
                    horizons[0].label,
                    100.0 * g,
                    m
                );
            }
            let h = HorizonCurve { mass_msun: masses, horizons, settings };
            (s, Some(horizon_table(&h)))
        }
        Command::Compare { schemes, db } => {
            let kinds: Vec<SchemeKind> = schemes.iter().map(|&s| s.into()).collect();
            let c = compare_schemes(&with_db(*db), &kinds, &grid)?;
            (format_comparison(&c), Some(comparison_table(&c)))
        }
    };
    match (table, &cli.out) {
        (Some(t), Some(path)) => {
            write_table(&t, path)?;
            Ok(summary)
        }
        (Some(mut t), None) if data_first => {
            for l in summary.lines().map(|l| l.trim_start_matches("# ").to_string()) {
                if !t.comments.contains(&l) {
                    t.comments.push(l);
                }
            }
            Ok(t.to_csv())
        }
        _ => Ok(summary),
    }
}

fn write_table(t: &Table, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    t.write(std::io::BufWriter::new(f))
}

fn hz(grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|w| w / (2.0 * PI)).collect()
}

fn analysis_grid(cli: &Cli) -> Result<Vec<f64>> {
    if !(cli.fmin > 0.0 && cli.fmax > cli.fmin && cli.fmax.is_finite()) {
        return Err(Error::Config(format!("invalid band {}-{} Hz", cli.fmin, cli.fmax)));
    }
    if cli.points < 2 {
        return Err(Error::Config("--points must be at least 2".into()));
    }
    Ok(crate::log_grid(cli.fmin, cli.fmax, cli.points))
}
