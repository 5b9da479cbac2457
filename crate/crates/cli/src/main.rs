use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use upconv_core::dispersion::Knob;
use upconv_core::materials::{group_delay_dispersion, MaterialLibrary};
use upconv_core::phasematch::{solve_phasematch_temperature, solve_poling_period, CrystalSpec};
use upconv_core::runner::{
    bundled_scenario, metrics_block, reproduce_fig3, run, write_artifacts, Artifacts, BUNDLED_SCENARIOS,
};
use upconv_core::scalar::wavelength_nm_to_omega;
use upconv_core::scenario::{OptimizeConfig, Scenario, ScenarioError};
use upconv_core::Error;

/// Time-resolved pairwise upconversion of broadband photon pairs.
#[derive(Parser, Debug)]
#[command(name = "upconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Directory for written artifacts (defaults to the scenario's output dir, else `.`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Multiplies the spectral point count and radial intervals.
    #[arg(long, value_name = "FACTOR")]
    grid_scale: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Group-delay dispersion of a material slab.
    MaterialGdd {
        #[arg(long)]
        material: String,
        #[arg(long)]
        thickness_mm: f64,
        #[arg(long, default_value_t = 1064.0)]
        wavelength_nm: f64,
        #[arg(long, default_value_t = 20.0)]
        temperature_c: f64,
        /// Materials data file; the bundled library when omitted.
        #[arg(long)]
        materials: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Poling period for a design temperature, or phasematching temperature for a period.
    QpmSolve {
        #[arg(long, default_value = "mgo_ln")]
        material: String,
        #[arg(long, default_value_t = 532.0)]
        pump_nm: f64,
        #[arg(long, default_value_t = 5.0)]
        length_mm: f64,
        #[arg(long, conflicts_with = "period_um")]
        temperature_c: Option<f64>,
        #[arg(long)]
        period_um: Option<f64>,
        #[arg(long)]
        materials: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Pair spectral amplitude S(ω) of a scenario.
    Spectrum(ScenarioArgs),
    /// Upconversion trace R(τ) and its metrics.
    Trace(ScenarioArgs),
    /// Dispersion optimization only.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Overrides or supplies the knob: insertion_mm or correction_gdd_fs2.
        #[arg(long)]
        knob: Option<Knob>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        bracket: Option<Vec<f64>>,
    },
    /// Runs the dispersion ladder and the V-mask comparison, writing a summary table.
    ReproduceFig3 {
        /// Quadrature refinement levels per case (0 disables the ladder).
        #[arg(long, default_value_t = 2)]
        refine_levels: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a scenario and writes every artifact.
    Run(ScenarioArgs),
    /// Lists the bundled scenarios.
    List,
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario file, or the name of a bundled scenario.
    scenario: String,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, Error> {
    let path = Path::new(&args.scenario);
    let mut scn = if path.exists() {
        Scenario::load(path)?
    } else {
        bundled_scenario(&args.scenario).ok_or_else(|| ScenarioError {
            line: None,
            message: format!("{}: no such file or bundled scenario", args.scenario),
        })?
    };
    if let Some(f) = args.common.grid_scale {
        scn = scn.with_grid_scale(f)?;
    }
    Ok(scn)
}

fn out_dir(common: &Common, scn: Option<&Scenario>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| scn.and_then(|s| s.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn library(path: Option<&Path>) -> Result<MaterialLibrary<f64>, Error> {
    Ok(match path {
        Some(p) => MaterialLibrary::load(p)?,
        None => MaterialLibrary::bundled(),
    })
}

fn save(common: &Common, file: &str, text: &str) -> Result<(), Error> {
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join(file);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

const NONE: Artifacts = Artifacts {
    spectrum: false,
    trace: false,
    optimize: false,
    log: false,
};

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::MaterialGdd {
            material,
            thickness_mm,
            wavelength_nm,
            temperature_c,
            materials,
            common,
        } => {
            let lib = library(materials.as_deref())?;
            let gdd = group_delay_dispersion(&*lib.get(&material)?, thickness_mm, wavelength_nm, temperature_c)?;
            let text = format!(
                "material={material}\nthickness_mm={thickness_mm}\nwavelength_nm={wavelength_nm}\ntemperature_C={temperature_c}\ngdd_fs2={gdd:.4}\n"
            );
            print!("{text}");
            save(&common, "material_gdd.txt", &text)
        }
        Command::QpmSolve {
            material,
            pump_nm,
            length_mm,
            temperature_c,
            period_um,
            materials,
            common,
        } => {
            let lib = library(materials.as_deref())?;
            let pump = wavelength_nm_to_omega(pump_nm);
            let template = CrystalSpec::new(lib.get(&material)?, length_mm, period_um.unwrap_or(7.0), 50.0)?;
            let period = match period_um {
                Some(p) => p,
                None => solve_poling_period(&template, pump, temperature_c.unwrap_or(50.0))?,
            };
            let t_pm = solve_phasematch_temperature(&template.with_poling_period(period), pump)?;
            let text = format!(
                "material={material}\npump_nm={pump_nm}\npoling_period_um={period:.6}\nphasematch_temperature_C={t_pm:.4}\n"
            );
            print!("{text}");
            save(&common, "qpm_solve.txt", &text)
        }
        Command::Spectrum(args) => {
            let scn = load_scenario(&args)?;
            let out = run::<f64>(&scn)?;
            write_artifacts(
                &out,
                &out_dir(&args.common, Some(&scn)),
                Artifacts { spectrum: true, ..NONE },
            )?;
            match out.spectrum.bandwidth_nm() {
                Some(b) => println!("bandwidth_nm={b:.3}"),
                None => println!("bandwidth_nm=undefined"),
            }
            Ok(())
        }
        Command::Trace(args) => {
            let scn = load_scenario(&args)?;
            let out = run::<f64>(&scn)?;
            write_artifacts(
                &out,
                &out_dir(&args.common, Some(&scn)),
                Artifacts { trace: true, ..NONE },
            )?;
            print!("{}", metrics_block(&out));
            Ok(())
        }
        Command::Optimize {
            scenario,
            knob,
            bracket,
        } => {
            let mut scn = load_scenario(&scenario)?;
            if knob.is_some() || bracket.is_some() {
                let mut cfg = scn.optimize.unwrap_or(OptimizeConfig {
                    knob: knob.unwrap_or(Knob::CorrectionGddFs2),
                    bracket: (-200.0, 200.0),
                    scan_points: 41,
                });
                if let Some(k) = knob {
                    cfg.knob = k;
                }
                if let Some(b) = bracket {
                    cfg.bracket = (b[0], b[1]);
                }
                scn.optimize = Some(cfg);
            }
            if scn.optimize.is_none() {
                return Err(ScenarioError {
                    line: None,
                    message: "scenario has no [optimize] section; pass --knob".into(),
                }
                .into());
            }
            let out = run::<f64>(&scn)?;
            write_artifacts(
                &out,
                &out_dir(&scenario.common, Some(&scn)),
                Artifacts { optimize: true, ..NONE },
            )?;
            let opt = out.optimization.as_ref().expect("optimizer ran");
            print!("{}", opt.to_key_values());
            println!("local_maximum={}", out.local_maximum.unwrap_or(false));
            Ok(())
        }
        Command::ReproduceFig3 { refine_levels, common } => {
            let dir = out_dir(&common, None);
            let summary = reproduce_fig3(Some(&dir), common.grid_scale, refine_levels)?;
            print!("{}", summary.to_csv());
            if !summary.all_ok() {
                eprintln!("warning: some cases violate their targets; see fig3_summary.csv");
            }
            Ok(())
        }
        Command::Run(args) => {
            let scn = load_scenario(&args)?;
            let out = run::<f64>(&scn)?;
            let written = write_artifacts(&out, &out_dir(&args.common, Some(&scn)), Artifacts::ALL)?;
            print!("{}", metrics_block(&out));
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::List => {
            for (name, _) in BUNDLED_SCENARIOS {
                println!("{name}");
            }
            Ok(())
        }
    }
}
